#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anomarank/common.hpp"

namespace anomarank {

// Mono sample buffer in [-1, 1]; the unit of all synthesis and scoring.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 16000;

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

    double rms() const {
        double acc = 0.0;
        for (float s : samples) acc += static_cast<double>(s) * s;
        return samples.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(samples.size()));
    }

    double peak() const {
        double p = 0.0;
        for (float s : samples) p = std::max(p, std::fabs(static_cast<double>(s)));
        return p;
    }

    void validate() const {
        if (sample_rate <= 0) throw DataError("AudioClip: sample_rate must be positive");
        if (samples.empty()) throw DataError("AudioClip: empty sample buffer");
        for (float s : samples) {
            if (!std::isfinite(s)) throw DataError("AudioClip: non-finite sample");
            if (std::fabs(s) > 1.0f) throw DataError("AudioClip: sample out of [-1, 1]");
        }
    }
};

}  // namespace anomarank
