#pragma once
// Caption generation and the keyword / random selection strategies. The LLM
// strategy lives in llm.hpp; all three produce the same EffectSpec shape.

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anomarank/common.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/prng.hpp"

namespace anomarank {

struct MachineMetadata {
    std::string machine_type;
    std::string operating_condition;
    std::string environment;  // optional, may be empty
};

struct Caption {
    std::string text;
};

// "slide_rail" -> "Slide rail": underscores to spaces, leading capital.
inline std::string humanize_machine_type(const std::string& machine_type) {
    std::string out = machine_type;
    for (char& c : out) {
        if (c == '_') c = ' ';
    }
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

// Deterministic template fill:
//   "<MachineType> operating at <condition>[ in <environment>]"
inline Caption generate_caption(const MachineMetadata& meta) {
    if (meta.machine_type.empty()) throw ConfigError("generate_caption: machine_type is empty");
    std::string text = humanize_machine_type(meta.machine_type) + " operating at " +
                       meta.operating_condition;
    if (!meta.environment.empty()) text += " in " + meta.environment;
    return Caption{text};
}

struct KeywordRule {
    std::string keyword;
    EffectKind kind;
};

using KeywordTable = std::vector<KeywordRule>;

inline KeywordTable default_keyword_table() {
    return {
        {"bearing", EffectKind::squeaking}, {"gearbox", EffectKind::grinding},
        {"fan", EffectKind::humming},       {"valve", EffectKind::whistling},
        {"slide", EffectKind::rattling},    {"rail", EffectKind::rattling},
    };
}

namespace selector_detail {

inline std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Spec with the schema's default parameters filled in explicitly, so the
// manifest records the complete parameter set the effect will run with.
inline EffectSpec spec_with_defaults(EffectKind kind, std::uint64_t seed) {
    EffectSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    for (const auto& p : schema_for(kind).params) spec.params[p.name] = p.def;
    return spec;
}

}  // namespace selector_detail

// First table entry whose keyword appears (case-insensitively) in the caption
// wins; a caption matching nothing is a hard error, not a fallback.
inline EffectSpec select_effect_keyword(const Caption& caption, const KeywordTable& table,
                                        std::uint64_t seed) {
    if (table.empty()) throw ConfigError("select_effect_keyword: empty keyword table");
    const std::string haystack = selector_detail::lowercase(caption.text);
    for (const auto& rule : table) {
        if (haystack.find(selector_detail::lowercase(rule.keyword)) != std::string::npos) {
            return selector_detail::spec_with_defaults(rule.kind, seed);
        }
    }
    throw SelectorError("no keyword matches caption \"" + caption.text + "\"");
}

// Control arm: uniform over the ten kinds, caption deliberately ignored.
inline EffectSpec select_effect_random(const Caption&, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const EffectKind kind = kAllEffectKinds[rng.below(kAllEffectKinds.size())];
    return selector_detail::spec_with_defaults(kind, seed);
}

enum class Strategy { llm, keyword, random };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::llm: return "llm";
        case Strategy::keyword: return "keyword";
        case Strategy::random: return "random";
    }
    throw ConfigError("invalid Strategy value");
}

inline Strategy strategy_from_string(const std::string& name) {
    if (name == "llm") return Strategy::llm;
    if (name == "keyword") return Strategy::keyword;
    if (name == "random") return Strategy::random;
    throw ConfigError("unknown selector strategy '" + name + "'");
}

struct SelectorConfig {
    Strategy strategy = Strategy::keyword;
    // LLM settings. With a replay fixture set, selection runs offline; the
    // endpoint and API key are only consulted for live calls.
    std::string endpoint = "http://localhost:8080/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "ANOMARANK_LLM_API_KEY";
    std::string replay_fixture;
    KeywordTable keyword_table = default_keyword_table();

    void validate() const {
        switch (strategy) {
            case Strategy::llm:
                if (model.empty()) throw ConfigError("selector: llm strategy needs a model name");
                if (endpoint.empty() && replay_fixture.empty()) {
                    throw ConfigError("selector: llm strategy needs an endpoint or a replay fixture");
                }
                break;
            case Strategy::keyword:
                if (keyword_table.empty()) {
                    throw ConfigError("selector: keyword strategy needs a non-empty table");
                }
                break;
            case Strategy::random:
                break;
        }
    }
};

}  // namespace anomarank
