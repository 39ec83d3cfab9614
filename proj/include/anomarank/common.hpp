#pragma once

#include <stdexcept>
#include <string>

namespace anomarank {

// Error taxonomy maps onto CLI exit codes: ConfigError -> 2,
// DataError -> 3, SelectorError (incl. transport) -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct SelectorError : Error {
    using Error::Error;
};

struct TransportError : SelectorError {
    using SelectorError::SelectorError;
};

}  // namespace anomarank
