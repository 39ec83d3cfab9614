#pragma once
// The anomaly sound-effect library: ten seeded, deterministic transforms that
// turn a normal machine recording into an anomalous one, plus the schema
// registry that tool-calling selectors consume.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomarank/audio.hpp"
#include "anomarank/common.hpp"
#include "anomarank/dsp.hpp"
#include "anomarank/prng.hpp"

namespace anomarank {

enum class EffectKind {
    squeaking,
    rattling,
    grinding,
    humming,
    whistling,
    clicking,
    pulsing,
    pop_bang,
    tonal_change,
    broadband_noise,
};

inline constexpr std::array<EffectKind, 10> kAllEffectKinds = {
    EffectKind::squeaking, EffectKind::rattling,  EffectKind::grinding,
    EffectKind::humming,   EffectKind::whistling, EffectKind::clicking,
    EffectKind::pulsing,   EffectKind::pop_bang,  EffectKind::tonal_change,
    EffectKind::broadband_noise,
};

inline const char* to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::squeaking: return "squeaking";
        case EffectKind::rattling: return "rattling";
        case EffectKind::grinding: return "grinding";
        case EffectKind::humming: return "humming";
        case EffectKind::whistling: return "whistling";
        case EffectKind::clicking: return "clicking";
        case EffectKind::pulsing: return "pulsing";
        case EffectKind::pop_bang: return "pop_bang";
        case EffectKind::tonal_change: return "tonal_change";
        case EffectKind::broadband_noise: return "broadband_noise";
    }
    throw ConfigError("invalid EffectKind value");
}

inline std::optional<EffectKind> try_effect_kind(const std::string& name) {
    for (EffectKind k : kAllEffectKinds) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

inline EffectKind effect_kind_from_string(const std::string& name) {
    if (auto k = try_effect_kind(name)) return *k;
    throw ConfigError("unknown effect kind '" + name + "'");
}

// Name used in the exported tool descriptors, e.g. "add_squeaking".
inline std::string tool_name(EffectKind kind) {
    return std::string("add_") + to_string(kind);
}

inline std::optional<EffectKind> try_effect_kind_from_tool_name(const std::string& name) {
    if (name.rfind("add_", 0) != 0) return std::nullopt;
    return try_effect_kind(name.substr(4));
}

struct ParamDescriptor {
    std::string name;
    std::string unit;
    double min = 0.0;
    double max = 0.0;
    double def = 0.0;

    bool operator==(const ParamDescriptor&) const = default;
};

struct EffectSchema {
    EffectKind kind;
    std::string description;
    std::vector<ParamDescriptor> params;

    bool operator==(const EffectSchema&) const = default;

    const ParamDescriptor* find(const std::string& name) const {
        for (const auto& p : params) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }
};

// One anomaly to apply to one clip. Parameters not present in `params` take
// their schema defaults; an unset start_time is drawn from the seed.
struct EffectSpec {
    EffectKind kind = EffectKind::squeaking;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
    std::optional<double> start_time;
};

inline const std::vector<EffectSchema>& effect_schemas() {
    static const std::vector<EffectSchema> registry = {
        {EffectKind::squeaking,
         "Adds a high-pitched squeaking sound, like a worn belt or a dry bearing squeal.",
         {{"duration", "s", 0.1, 10.0, 2.0},
          {"freq", "Hz", 500.0, 8000.0, 4000.0},
          {"intensity", "ratio", 0.0, 1.0, 0.4}}},
        {EffectKind::rattling,
         "Adds rattling or knocking, a train of short damped bursts as from a loose part.",
         {{"rate", "Hz", 2.0, 50.0, 5.0}, {"intensity", "ratio", 0.0, 1.0, 1.0}}},
        {EffectKind::grinding,
         "Adds a harsh grinding or scraping noise with a rough, uneven texture.",
         {{"duration", "s", 0.1, 10.0, 3.0}, {"intensity", "ratio", 0.0, 1.0, 0.6}}},
        {EffectKind::humming,
         "Adds a steady low-frequency hum or buzz with harmonics, as from an electrical fault.",
         {{"freq", "Hz", 50.0, 300.0, 120.0}, {"intensity", "ratio", 0.0, 1.0, 0.3}}},
        {EffectKind::whistling,
         "Adds a narrowband whistling or hissing tone, as from a leak under pressure.",
         {{"freq", "Hz", 2000.0, 8000.0, 5000.0}, {"intensity", "ratio", 0.0, 1.0, 0.13}}},
        {EffectKind::clicking,
         "Adds sharp periodic clicking or tapping transients.",
         {{"rate", "Hz", 1.0, 20.0, 5.0}, {"intensity", "ratio", 0.0, 1.0, 0.6}}},
        {EffectKind::pulsing,
         "Modulates the loudness of the recording itself in a pulsing or chattering rhythm.",
         {{"rate", "Hz", 0.5, 10.0, 3.0}, {"depth", "ratio", 0.0, 1.0, 0.5}}},
        {EffectKind::pop_bang,
         "Adds a single loud pop or bang, a short broadband burst.",
         {{"intensity", "ratio", 0.0, 1.0, 0.8}}},
        {EffectKind::tonal_change,
         "Shifts the pitch of a segment of the recording, changing its tonal quality.",
         {{"shift_semitones", "semitones", -4.0, 4.0, 2.0},
          {"duration", "s", 0.1, 10.0, 3.0}}},
        {EffectKind::broadband_noise,
         "Raises the broadband background noise floor to a target signal-to-noise ratio.",
         {{"snr_db", "dB", 0.0, 40.0, 10.0}}},
    };
    return registry;
}

inline const EffectSchema& schema_for(EffectKind kind) {
    for (const auto& s : effect_schemas()) {
        if (s.kind == kind) return s;
    }
    throw ConfigError("no schema registered for effect kind");
}

// Validates provided parameters against the schema and fills in defaults.
inline std::map<std::string, double> resolve_params(const EffectSpec& spec) {
    const EffectSchema& schema = schema_for(spec.kind);
    for (const auto& [name, value] : spec.params) {
        const ParamDescriptor* d = schema.find(name);
        if (!d) {
            throw ConfigError(tool_name(spec.kind) + ": unknown parameter '" + name + "'");
        }
        if (!std::isfinite(value) || value < d->min || value > d->max) {
            throw ConfigError(tool_name(spec.kind) + ": parameter '" + name + "' = " +
                              std::to_string(value) + " outside [" + std::to_string(d->min) +
                              ", " + std::to_string(d->max) + "]");
        }
    }
    std::map<std::string, double> resolved;
    for (const auto& d : schema.params) {
        auto it = spec.params.find(d.name);
        resolved[d.name] = (it != spec.params.end()) ? it->second : d.def;
    }
    return resolved;
}

// ---- JSON tool descriptors (chat-completions function tools) ----

inline nlohmann::json schema_to_tool_json(const EffectSchema& schema) {
    nlohmann::json props = nlohmann::json::object();
    for (const auto& p : schema.params) {
        props[p.name] = {{"type", "number"}, {"unit", p.unit},   {"minimum", p.min},
                         {"maximum", p.max}, {"default", p.def}};
    }
    props["start_time"] = {
        {"type", "number"},
        {"unit", "s"},
        {"minimum", 0.0},
        {"maximum", 600.0},
        {"description", "Offset where the effect begins; chosen automatically when omitted."}};
    props["seed"] = {{"type", "integer"},
                     {"description", "Random seed; chosen automatically when omitted."}};
    return {{"type", "function"},
            {"function",
             {{"name", tool_name(schema.kind)},
              {"description", schema.description},
              {"parameters",
               {{"type", "object"}, {"properties", props}, {"required", nlohmann::json::array()}}}}}};
}

inline EffectSchema schema_from_tool_json(const nlohmann::json& j) {
    if (!j.contains("function")) throw ConfigError("tool descriptor missing 'function'");
    const auto& fn = j.at("function");
    auto kind = try_effect_kind_from_tool_name(fn.at("name").get<std::string>());
    if (!kind) throw ConfigError("tool descriptor names unknown function");
    EffectSchema schema;
    schema.kind = *kind;
    schema.description = fn.at("description").get<std::string>();
    // Recover descriptors in registry order; start_time and seed are uniform
    // extras, not kind-specific parameters.
    for (const auto& d : schema_for(*kind).params) {
        const auto& prop = fn.at("parameters").at("properties").at(d.name);
        schema.params.push_back({d.name, prop.at("unit").get<std::string>(),
                                 prop.at("minimum").get<double>(), prop.at("maximum").get<double>(),
                                 prop.at("default").get<double>()});
    }
    return schema;
}

inline nlohmann::json tool_descriptors_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : effect_schemas()) arr.push_back(schema_to_tool_json(s));
    return arr;
}

// ---- EffectSpec <-> JSON (manifest persistence) ----

inline nlohmann::json spec_to_json(const EffectSpec& spec) {
    nlohmann::json j;
    j["kind"] = to_string(spec.kind);
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : spec.params) j["params"][k] = v;
    j["seed"] = spec.seed;
    if (spec.start_time) j["start_time"] = *spec.start_time;
    return j;
}

inline EffectSpec spec_from_json(const nlohmann::json& j) {
    EffectSpec spec;
    spec.kind = effect_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("params")) {
        for (const auto& [k, v] : j.at("params").items()) spec.params[k] = v.get<double>();
    }
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("start_time")) spec.start_time = j.at("start_time").get<double>();
    return spec;
}

namespace effect_detail {

// Soft limiter with a hard knee at 0.75: samples below the knee pass through
// untouched, above it the residual is squashed with tanh so the output
// approaches but never reaches 1. Applied only when the raw peak exceeds 1.
inline float knee_limit(double s) {
    constexpr double knee = 0.75;
    const double a = std::abs(s);
    if (a <= knee) return static_cast<float>(s);
    const double y = knee + (1.0 - knee) * std::tanh((a - knee) / (1.0 - knee));
    return static_cast<float>(s < 0.0 ? -y : y);
}

// Linear fade over `ramp` samples at both edges of [i0, i1).
inline double edge_gain(std::size_t i, std::size_t i0, std::size_t i1, std::size_t ramp) {
    if (ramp == 0) return 1.0;
    double g = 1.0;
    const std::size_t from_start = i - i0;
    const std::size_t from_end = (i1 - 1) - i;
    if (from_start < ramp) g = std::min(g, static_cast<double>(from_start + 1) / ramp);
    if (from_end < ramp) g = std::min(g, static_cast<double>(from_end + 1) / ramp);
    return g;
}

// Piecewise-linear noise: value lerped between i.i.d. uniform [-1, 1] knots
// spaced `knot_hz` apart. The slow modulators below are built from this.
class SmoothNoise {
  public:
    SmoothNoise(SplitMix64& rng, double knot_hz, int sample_rate, std::size_t length) {
        knot_step_ = std::max<std::size_t>(1, static_cast<std::size_t>(sample_rate / knot_hz));
        const std::size_t n_knots = length / knot_step_ + 2;
        knots_.resize(n_knots);
        for (auto& k : knots_) k = rng.uniform(-1.0, 1.0);
    }

    double at(std::size_t i) const {
        const std::size_t k = i / knot_step_;
        const double f = static_cast<double>(i - k * knot_step_) / knot_step_;
        return knots_[k] * (1.0 - f) + knots_[k + 1] * f;
    }

  private:
    std::vector<double> knots_;
    std::size_t knot_step_ = 1;
};

inline double lerp_sample(const std::vector<float>& x, double pos) {
    if (pos <= 0.0) return x.front();
    if (pos >= static_cast<double>(x.size() - 1)) return x.back();
    const std::size_t i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return x[i] * (1.0 - f) + x[i + 1] * f;
}

// Pitch-shifts out[s0, s1) by `ratio` with a granular resampler: Hann-windowed
// grains anchored every half grain, each grain read from the source at the
// resampled rate, overlap-added and renormalized by the window sum, then
// crossfaded into place over 10 ms so segment boundaries stay continuous.
inline void granular_pitch_shift(std::vector<float>& samples, std::size_t s0, std::size_t s1,
                                 double ratio, int sample_rate) {
    const std::size_t seg = s1 - s0;
    std::size_t grain = std::min<std::size_t>(1024, std::max<std::size_t>(2, seg / 2));
    grain &= ~std::size_t{1};
    const std::size_t hop = grain / 2;
    const std::vector<double> window = make_window(Window::hann, grain);

    const std::vector<float> source = samples;
    std::vector<double> acc(seg, 0.0), wsum(seg, 0.0);
    for (std::size_t g0 = 0; g0 < seg; g0 += hop) {
        for (std::size_t j = 0; j < grain; ++j) {
            const std::size_t q = g0 + j;
            if (q >= seg) break;
            const double src = static_cast<double>(s0 + g0) + static_cast<double>(j) * ratio;
            acc[q] += window[j] * lerp_sample(source, src);
            wsum[q] += window[j];
        }
    }
    const std::size_t xfade =
        std::min<std::size_t>(static_cast<std::size_t>(0.010 * sample_rate), seg / 4);
    for (std::size_t q = 0; q < seg; ++q) {
        const double shifted = wsum[q] > 1e-9 ? acc[q] / wsum[q] : source[s0 + q];
        const double g = edge_gain(q, 0, seg, xfade);
        samples[s0 + q] =
            static_cast<float>(source[s0 + q] * (1.0 - g) + shifted * g);
    }
}

}  // namespace effect_detail

// Applies one effect to one clip. Output preserves length and sample rate, is
// soft-limited into [-1, 1], and is a bit-identical copy of the input when the
// amplitude-like parameter (intensity, depth, or shift) is zero.
inline AudioClip apply_effect(const AudioClip& clip, const EffectSpec& spec) {
    using namespace effect_detail;
    if (clip.samples.empty()) throw DataError("apply_effect: empty clip");
    if (clip.sample_rate <= 0) throw DataError("apply_effect: invalid sample rate");

    const std::map<std::string, double> p = resolve_params(spec);
    const int sr = clip.sample_rate;
    const std::size_t n = clip.samples.size();
    const double len_s = clip.duration_s();

    // Identity short-circuit: a zero amplitude-like parameter must yield a
    // bit-identical copy, so bail out before any float arithmetic happens.
    switch (spec.kind) {
        case EffectKind::pulsing:
            if (p.at("depth") == 0.0) return clip;
            break;
        case EffectKind::tonal_change:
            if (p.at("shift_semitones") == 0.0) return clip;
            break;
        case EffectKind::broadband_noise:
            break;
        default:
            if (p.at("intensity") == 0.0) return clip;
            break;
    }

    // Affected window. Kinds with a duration parameter occupy
    // [start, start + duration]; pop_bang occupies a fixed 60 ms burst
    // window; the open-ended kinds run from start to the end of the clip,
    // with the default start drawn from the first half so the affected
    // window is never vanishingly short.
    double duration;
    bool open_ended = false;
    switch (spec.kind) {
        case EffectKind::squeaking:
        case EffectKind::grinding:
        case EffectKind::tonal_change:
            duration = p.at("duration");
            break;
        case EffectKind::pop_bang:
            duration = 0.06;
            break;
        default:
            duration = len_s;
            open_ended = true;
            break;
    }
    if (!open_ended && duration > len_s) {
        throw DataError(tool_name(spec.kind) + ": duration " + std::to_string(duration) +
                        " s exceeds clip length " + std::to_string(len_s) + " s");
    }

    double start;
    if (spec.start_time) {
        start = *spec.start_time;
        if (start < 0.0 || (open_ended ? start >= len_s : start + duration > len_s + 1e-9)) {
            throw DataError(tool_name(spec.kind) + ": effect window [" + std::to_string(start) +
                            ", +" + std::to_string(duration) + " s] exceeds clip bounds");
        }
    } else {
        SplitMix64 rng_start(derive_seed(spec.seed, "start"));
        start = rng_start.uniform(0.0, open_ended ? len_s / 2.0 : len_s - duration);
    }

    SplitMix64 rng(derive_seed(spec.seed, "dsp"));
    const std::size_t i0 = std::min<std::size_t>(n - 1, static_cast<std::size_t>(start * sr));
    const std::size_t i1 =
        open_ended ? n : std::min<std::size_t>(n, static_cast<std::size_t>((start + duration) * sr));
    const std::size_t win = i1 - i0;
    const std::size_t ramp = std::min<std::size_t>(static_cast<std::size_t>(0.010 * sr), win / 4);

    std::vector<double> out(clip.samples.begin(), clip.samples.end());

    switch (spec.kind) {
        case EffectKind::squeaking: {
            // Sinusoid with a slow +-1% frequency wobble, phase-integrated.
            const double freq = p.at("freq");
            const double amp = p.at("intensity");
            SmoothNoise wobble(rng, 8.0, sr, win);
            double phase = 0.0;
            for (std::size_t i = i0; i < i1; ++i) {
                const double f_inst = freq * (1.0 + 0.01 * wobble.at(i - i0));
                phase += 2.0 * std::numbers::pi * f_inst / sr;
                out[i] += amp * edge_gain(i, i0, i1, ramp) * std::sin(phase);
            }
            break;
        }
        case EffectKind::rattling: {
            // Jittered train of short damped noise bursts, each rung through a
            // loose-part body resonance and peak-normalized so the knocks keep
            // their level after filtering. Burst length backs off at high
            // rates so consecutive bursts stay separated.
            const double rate = p.at("rate");
            const double amp = p.at("intensity");
            const double period = sr / rate;
            const std::size_t burst_len = static_cast<std::size_t>(std::min(0.050, 0.5 / rate) * sr);
            const double tau = static_cast<double>(burst_len) / 2.5;
            std::vector<double> shape(burst_len);
            double t = static_cast<double>(i0) + rng.uniform(0.0, period);
            while (t < static_cast<double>(n)) {
                const std::size_t b0 = static_cast<std::size_t>(t);
                Biquad body = Biquad::bandpass(6000.0, sr, 8.0);
                double peak = 0.0;
                for (std::size_t j = 0; j < burst_len; ++j) {
                    shape[j] = body.process(rng.uniform(-1.0, 1.0)) *
                               std::exp(-static_cast<double>(j) / tau);
                    peak = std::max(peak, std::abs(shape[j]));
                }
                for (std::size_t j = 0; j < burst_len && b0 + j < n; ++j) {
                    out[b0 + j] += peak > 0.0 ? amp * shape[j] / peak : 0.0;
                }
                t += period * (1.0 + 0.3 * rng.uniform(-1.0, 1.0));
            }
            break;
        }
        case EffectKind::grinding: {
            // Band-passed noise (1.2-4.5 kHz) chopped by an irregular ~9 Hz
            // gate on top of a ~30 Hz roughness modulation, normalized to
            // RMS = intensity before mixing.
            const double amp = p.at("intensity");
            Biquad hp = Biquad::highpass(1200.0, sr, 0.707);
            Biquad lp = Biquad::lowpass(4500.0, sr, 0.707);
            SmoothNoise rough(rng, 30.0, sr, win);
            SmoothNoise chop(rng, 9.0, sr, win);
            std::vector<double> layer(win);
            double energy = 0.0;
            for (std::size_t j = 0; j < win; ++j) {
                const double noise = lp.process(hp.process(rng.uniform(-1.0, 1.0)));
                const double gate = chop.at(j) > 0.0 ? 1.0 : 0.3;
                layer[j] = noise * gate * (0.4 + 0.3 * (rough.at(j) + 1.0));
                energy += layer[j] * layer[j];
            }
            const double rms = std::sqrt(energy / static_cast<double>(win));
            const double gain = rms > 0.0 ? amp / rms : 0.0;
            for (std::size_t j = 0; j < win; ++j) {
                out[i0 + j] += gain * layer[j] * edge_gain(i0 + j, i0, i1, ramp);
            }
            break;
        }
        case EffectKind::humming: {
            // Steady fundamental plus two harmonics.
            const double freq = p.at("freq");
            const double amp = p.at("intensity") * 0.7;
            const double w1 = 2.0 * std::numbers::pi * freq / sr;
            for (std::size_t i = i0; i < i1; ++i) {
                const double ph = w1 * static_cast<double>(i - i0);
                const double s = std::sin(ph) + 0.4 * std::sin(2.0 * ph) + 0.2 * std::sin(3.0 * ph);
                out[i] += amp * edge_gain(i, i0, i1, ramp) * s;
            }
            break;
        }
        case EffectKind::whistling: {
            // Narrowband noise: white noise through a high-Q bandpass twice,
            // normalized to RMS = intensity * 0.5.
            const double freq = p.at("freq");
            const double amp = p.at("intensity") * 0.5;
            Biquad bp1 = Biquad::bandpass(freq, sr, 25.0);
            Biquad bp2 = Biquad::bandpass(freq, sr, 25.0);
            std::vector<double> layer(win);
            double energy = 0.0;
            for (std::size_t j = 0; j < win; ++j) {
                layer[j] = bp2.process(bp1.process(rng.uniform(-1.0, 1.0)));
                energy += layer[j] * layer[j];
            }
            const double rms = std::sqrt(energy / static_cast<double>(win));
            const double gain = rms > 0.0 ? amp / rms : 0.0;
            for (std::size_t j = 0; j < win; ++j) {
                out[i0 + j] += gain * layer[j] * edge_gain(i0 + j, i0, i1, ramp);
            }
            break;
        }
        case EffectKind::clicking: {
            // Jittered impulse train; each click is a 4.5 ms damped transient.
            const double rate = p.at("rate");
            const double amp = std::min(1.0, p.at("intensity") * 1.2);
            const double period = sr / rate;
            const std::size_t click_len = static_cast<std::size_t>(0.0045 * sr);
            const double tau = 0.002 * sr;
            double t = static_cast<double>(i0) + rng.uniform(0.0, period);
            while (t < static_cast<double>(n)) {
                const std::size_t c0 = static_cast<std::size_t>(t);
                for (std::size_t j = 0; j < click_len && c0 + j < n; ++j) {
                    out[c0 + j] += amp * std::exp(-static_cast<double>(j) / tau);
                }
                t += period * (1.0 + 0.4 * (rng.uniform01() - 0.5));
            }
            break;
        }
        case EffectKind::pulsing: {
            // Amplitude modulation of the input itself; the modulator ramps
            // in over the window edge so the onset is not a step.
            const double rate = p.at("rate");
            const double depth = p.at("depth");
            const double w = 2.0 * std::numbers::pi * rate / sr;
            for (std::size_t i = i0; i < i1; ++i) {
                const double m = depth * std::sin(w * static_cast<double>(i - i0));
                out[i] *= 1.0 + edge_gain(i, i0, i1, ramp) * m;
            }
            break;
        }
        case EffectKind::pop_bang: {
            // Single decaying broadband burst; the first sample is pinned to
            // the full amplitude so the onset lands exactly at start_time.
            const double amp = std::min(1.0, p.at("intensity") * 1.1);
            const double tau = 0.010 * sr;
            for (std::size_t j = 0; j < win; ++j) {
                const double u = j == 0 ? 1.0 : rng.uniform(-1.0, 1.0);
                out[i0 + j] += amp * u * std::exp(-static_cast<double>(j) / tau);
            }
            break;
        }
        case EffectKind::tonal_change: {
            const double ratio = std::pow(2.0, p.at("shift_semitones") / 12.0);
            std::vector<float> buf(clip.samples);
            granular_pitch_shift(buf, i0, i1, ratio, sr);
            for (std::size_t i = 0; i < n; ++i) out[i] = buf[i];
            break;
        }
        case EffectKind::broadband_noise: {
            // White noise at a target SNR relative to the affected window's
            // RMS; a silent window has no defined SNR and is left unchanged.
            const double snr_db = p.at("snr_db");
            double energy = 0.0;
            for (std::size_t i = i0; i < i1; ++i) {
                energy += static_cast<double>(clip.samples[i]) * clip.samples[i];
            }
            const double rms = std::sqrt(energy / static_cast<double>(win));
            if (rms > 0.0) {
                const double noise_rms = rms * std::pow(10.0, -snr_db / 20.0);
                for (std::size_t i = i0; i < i1; ++i) {
                    out[i] += noise_rms * edge_gain(i, i0, i1, ramp) * rng.gaussian();
                }
            }
            break;
        }
    }

    AudioClip result;
    result.sample_rate = sr;
    result.samples.resize(n);
    double peak = 0.0;
    for (double s : out) peak = std::max(peak, std::abs(s));
    if (peak > 1.0) {
        for (std::size_t i = 0; i < n; ++i) result.samples[i] = knee_limit(out[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) result.samples[i] = static_cast<float>(out[i]);
    }
    return result;
}

}  // namespace anomarank
