#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "anomarank/dsp.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/prng.hpp"

using namespace anomarank;

namespace {

AudioClip noise_clip(std::uint64_t seed, std::size_t n, double amp) {
    SplitMix64 rng(seed);
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(n);
    for (auto& s : clip.samples) s = static_cast<float>(rng.uniform(-amp, amp));
    return clip;
}

AudioClip slice(const AudioClip& clip, double t0, double t1) {
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    const auto i0 = static_cast<std::size_t>(t0 * clip.sample_rate);
    const auto i1 = std::min(clip.samples.size(), static_cast<std::size_t>(t1 * clip.sample_rate));
    out.samples.assign(clip.samples.begin() + i0, clip.samples.begin() + i1);
    return out;
}

double band_rise_db(const AudioClip& in, const AudioClip& out, double t0, double t1, double lo,
                    double hi) {
    const double before = band_power(stft(slice(in, t0, t1), 1024, 512), lo, hi);
    const double after = band_power(stft(slice(out, t0, t1), 1024, 512), lo, hi);
    return 10.0 * std::log10(after / before);
}

std::size_t peak_count(const AudioClip& clip, double threshold, std::size_t min_gap) {
    return count_envelope_peaks(rms_envelope(clip.samples, 16), threshold, min_gap);
}

// Name of the parameter that must force a bit-identical copy when zero.
const char* amplitude_param(EffectKind kind) {
    switch (kind) {
        case EffectKind::pulsing: return "depth";
        case EffectKind::tonal_change: return "shift_semitones";
        case EffectKind::broadband_noise: return nullptr;
        default: return "intensity";
    }
}

}  // namespace

TEST_CASE("schema registry has ten self-consistent schemas in stable order", "[effects]") {
    const auto& schemas = effect_schemas();
    REQUIRE(schemas.size() == 10);
    for (std::size_t i = 0; i < schemas.size(); ++i) {
        REQUIRE(schemas[i].kind == kAllEffectKinds[i]);
        REQUIRE_FALSE(schemas[i].description.empty());
        for (const auto& p : schemas[i].params) {
            REQUIRE(p.min <= p.def);
            REQUIRE(p.def <= p.max);
        }
        // Defaults validate against the schema itself.
        EffectSpec spec;
        spec.kind = schemas[i].kind;
        for (const auto& p : schemas[i].params) spec.params[p.name] = p.def;
        REQUIRE_NOTHROW(resolve_params(spec));
    }
}

TEST_CASE("tool descriptors round-trip through the JSON format unchanged", "[effects]") {
    for (const auto& schema : effect_schemas()) {
        const nlohmann::json j = schema_to_tool_json(schema);
        REQUIRE(j.at("function").at("name") == tool_name(schema.kind));
        const EffectSchema back = schema_from_tool_json(j);
        REQUIRE(back == schema);
        REQUIRE(schema_to_tool_json(back) == j);
    }
    REQUIRE(tool_descriptors_json().size() == 10);
}

TEST_CASE("parameter validation rejects unknown names and out-of-range values", "[effects]") {
    EffectSpec spec;
    spec.kind = EffectKind::humming;
    spec.params["freq"] = 40.0;
    REQUIRE_THROWS_AS(resolve_params(spec), ConfigError);
    spec.params["freq"] = 120.0;
    spec.params["wobble"] = 1.0;
    REQUIRE_THROWS_AS(resolve_params(spec), ConfigError);
    spec.params.erase("wobble");
    const auto resolved = resolve_params(spec);
    REQUIRE(resolved.at("freq") == 120.0);
    REQUIRE(resolved.at("intensity") == 0.3);
    REQUIRE_THROWS_AS(effect_kind_from_string("sizzling"), ConfigError);
}

TEST_CASE("zero amplitude-like parameter yields a bit-identical copy", "[effects]") {
    const AudioClip clip = noise_clip(11, 16000, 0.4);
    for (EffectKind kind : kAllEffectKinds) {
        const char* name = amplitude_param(kind);
        if (!name) continue;
        EffectSpec spec;
        spec.kind = kind;
        spec.seed = 5;
        spec.params[name] = 0.0;
        const AudioClip out = apply_effect(clip, spec);
        REQUIRE(out.samples == clip.samples);
        REQUIRE(out.sample_rate == clip.sample_rate);
    }
}

TEST_CASE("every kind preserves length, rate, and bounds, deterministically", "[effects]") {
    SplitMix64 rng(77);
    for (EffectKind kind : kAllEffectKinds) {
        const EffectSchema& schema = schema_for(kind);
        for (int draw = 0; draw < 6; ++draw) {
            const AudioClip clip = noise_clip(rng.next_u64(), 16000, rng.uniform(0.05, 0.3));
            EffectSpec spec;
            spec.kind = kind;
            spec.seed = rng.next_u64();
            for (const auto& p : schema.params) {
                double hi = p.max;
                if (p.name == "duration") hi = 0.9;
                spec.params[p.name] = rng.uniform(p.min, hi);
            }
            const AudioClip out = apply_effect(clip, spec);
            REQUIRE(out.samples.size() == clip.samples.size());
            REQUIRE(out.sample_rate == clip.sample_rate);
            for (float s : out.samples) {
                REQUIRE(std::isfinite(s));
                REQUIRE(std::abs(s) <= 1.0f);
            }
            const AudioClip again = apply_effect(clip, spec);
            REQUIRE(again.samples == out.samples);
        }
    }
}

TEST_CASE("noise-driven kinds respond to the seed", "[effects]") {
    const AudioClip clip = noise_clip(3, 16000, 0.2);
    for (EffectKind kind : {EffectKind::rattling, EffectKind::grinding, EffectKind::clicking,
                            EffectKind::broadband_noise}) {
        EffectSpec a;
        a.kind = kind;
        a.seed = 1;
        EffectSpec b = a;
        b.seed = 2;
        if (kind == EffectKind::grinding) {
            a.params["duration"] = b.params["duration"] = 0.9;
        }
        REQUIRE(apply_effect(clip, a).samples != apply_effect(clip, b).samples);
    }
}

TEST_CASE("squeaking raises energy around its frequency by at least 3 dB", "[effects]") {
    const AudioClip clip = noise_clip(21, 160000, 0.2);
    EffectSpec spec;
    spec.kind = EffectKind::squeaking;
    spec.seed = 9;
    spec.start_time = 3.0;
    const AudioClip out = apply_effect(clip, spec);
    REQUIRE(band_rise_db(clip, out, 3.0, 5.0, 3800.0, 4200.0) >= 3.0);
}

TEST_CASE("humming raises energy around its fundamental by at least 3 dB", "[effects]") {
    const AudioClip clip = noise_clip(22, 160000, 0.2);
    EffectSpec spec;
    spec.kind = EffectKind::humming;
    spec.seed = 9;
    spec.start_time = 2.0;
    const AudioClip out = apply_effect(clip, spec);
    REQUIRE(band_rise_db(clip, out, 2.5, 9.5, 84.0, 156.0) >= 3.0);
}

TEST_CASE("whistling raises energy around its frequency by at least 3 dB", "[effects]") {
    const AudioClip clip = noise_clip(23, 160000, 0.2);
    EffectSpec spec;
    spec.kind = EffectKind::whistling;
    spec.seed = 9;
    spec.start_time = 2.0;
    const AudioClip out = apply_effect(clip, spec);
    REQUIRE(band_rise_db(clip, out, 2.5, 9.5, 4750.0, 5250.0) >= 3.0);
}

TEST_CASE("grinding raises energy in the 1-6 kHz band by at least 3 dB", "[effects]") {
    const AudioClip clip = noise_clip(24, 160000, 0.2);
    EffectSpec spec;
    spec.kind = EffectKind::grinding;
    spec.seed = 9;
    spec.start_time = 3.0;
    const AudioClip out = apply_effect(clip, spec);
    REQUIRE(band_rise_db(clip, out, 3.0, 6.0, 1000.0, 6000.0) >= 3.0);
}

TEST_CASE("pulsing widens the envelope by roughly (1+d)/(1-d)", "[effects]") {
    const AudioClip clip = noise_clip(25, 160000, 0.3);
    EffectSpec spec;
    spec.kind = EffectKind::pulsing;
    spec.seed = 9;
    spec.start_time = 1.0;
    spec.params["rate"] = 2.0;
    spec.params["depth"] = 0.5;
    const AudioClip out = apply_effect(clip, spec);

    const auto env = rms_envelope(out.samples, 640);
    const std::size_t from = static_cast<std::size_t>(1.5 * 16000);
    const std::size_t to = env.size() - static_cast<std::size_t>(0.5 * 16000);
    double lo = 1e9, hi = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        lo = std::min(lo, env[i]);
        hi = std::max(hi, env[i]);
    }
    REQUIRE(hi / lo >= 3.0 * 0.85);
}

TEST_CASE("clicking adds at least rate*duration/2 envelope peaks", "[effects]") {
    const AudioClip clip = noise_clip(26, 160000, 0.05);
    EffectSpec spec;
    spec.kind = EffectKind::clicking;
    spec.seed = 9;
    spec.start_time = 1.0;
    const AudioClip out = apply_effect(clip, spec);

    const double rate = 5.0, affected = 9.0;
    const double thr = 4.0 * median(rms_envelope(out.samples, 16));
    const auto min_gap = static_cast<std::size_t>(0.4 * 16000 / rate);
    const std::size_t before = peak_count(clip, thr, min_gap);
    const std::size_t after = peak_count(out, thr, min_gap);
    REQUIRE(after - before >= static_cast<std::size_t>(rate * affected / 2.0));
}

TEST_CASE("rattling adds at least rate*duration/2 envelope peaks", "[effects]") {
    const AudioClip clip = noise_clip(27, 160000, 0.05);
    EffectSpec spec;
    spec.kind = EffectKind::rattling;
    spec.seed = 9;
    spec.start_time = 2.0;
    const AudioClip out = apply_effect(clip, spec);

    const double rate = 5.0, affected = 8.0;
    const double thr = 4.0 * median(rms_envelope(out.samples, 16));
    const auto min_gap = static_cast<std::size_t>(0.4 * 16000 / rate);
    const std::size_t before = peak_count(clip, thr, min_gap);
    const std::size_t after = peak_count(out, thr, min_gap);
    REQUIRE(after - before >= static_cast<std::size_t>(rate * affected / 2.0));
}

TEST_CASE("pop_bang on a silent clip peaks within 50 ms of start_time", "[effects]") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(160000, 0.0f);
    EffectSpec spec;
    spec.kind = EffectKind::pop_bang;
    spec.seed = 9;
    spec.start_time = 5.0;
    const AudioClip out = apply_effect(clip, spec);

    std::size_t argmax = 0;
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        if (std::abs(out.samples[i]) > std::abs(out.samples[argmax])) argmax = i;
    }
    REQUIRE(argmax >= 5.00 * 16000);
    REQUIRE(argmax <= 5.05 * 16000);
}

TEST_CASE("broadband_noise adds noise at the requested SNR and lifts flatness", "[effects]") {
    // The SNR law is scale-invariant; checked at sub-unit RMS so the output
    // stays inside [-1, 1] and the limiter provably never engages.
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(160000);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = static_cast<float>(0.35 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0));
    }
    const double clip_rms = clip.rms();

    EffectSpec spec;
    spec.kind = EffectKind::broadband_noise;
    spec.seed = 9;
    spec.start_time = 0.0;
    const AudioClip out = apply_effect(clip, spec);

    double diff_energy = 0.0;
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double d = static_cast<double>(out.samples[i]) - clip.samples[i];
        diff_energy += d * d;
    }
    const double added_rms = std::sqrt(diff_energy / clip.samples.size());
    const double target = clip_rms * std::pow(10.0, -10.0 / 20.0);
    REQUIRE_THAT(added_rms, Catch::Matchers::WithinRel(target, 0.05));

    REQUIRE(spectral_flatness(stft(out, 1024, 512)) > spectral_flatness(stft(clip, 1024, 512)));
}

TEST_CASE("tonal_change moves the segment centroid with the shift", "[effects]") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(160000);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const double t = static_cast<double>(i) / 16000.0;
        clip.samples[i] = static_cast<float>(0.25 * std::sin(2.0 * std::numbers::pi * 400.0 * t) +
                                             0.15 * std::sin(2.0 * std::numbers::pi * 800.0 * t) +
                                             0.10 * std::sin(2.0 * std::numbers::pi * 1200.0 * t));
    }
    const double before = spectral_centroid_hz(stft(slice(clip, 1.0, 4.0), 1024, 512));

    EffectSpec up;
    up.kind = EffectKind::tonal_change;
    up.seed = 9;
    up.start_time = 1.0;
    up.params["shift_semitones"] = 3.0;
    const double shifted_up =
        spectral_centroid_hz(stft(slice(apply_effect(clip, up), 1.0, 4.0), 1024, 512));
    REQUIRE(shifted_up > before * 1.05);

    EffectSpec down = up;
    down.params["shift_semitones"] = -3.0;
    const double shifted_down =
        spectral_centroid_hz(stft(slice(apply_effect(clip, down), 1.0, 4.0), 1024, 512));
    REQUIRE(shifted_down < before * 0.95);
}

TEST_CASE("effect windows that overrun the clip are rejected", "[effects]") {
    const AudioClip clip = noise_clip(31, 160000, 0.2);
    EffectSpec spec;
    spec.kind = EffectKind::squeaking;
    spec.seed = 1;
    spec.start_time = 9.5;
    REQUIRE_THROWS_AS(apply_effect(clip, spec), DataError);

    const AudioClip short_clip = noise_clip(32, 16000, 0.2);
    EffectSpec long_spec;
    long_spec.kind = EffectKind::grinding;
    long_spec.seed = 1;
    long_spec.params["duration"] = 3.0;
    REQUIRE_THROWS_AS(apply_effect(short_clip, long_spec), DataError);

    EffectSpec late;
    late.kind = EffectKind::rattling;
    late.seed = 1;
    late.start_time = 11.0;
    REQUIRE_THROWS_AS(apply_effect(clip, late), DataError);
}

TEST_CASE("effect specs round-trip through manifest JSON", "[effects]") {
    EffectSpec spec;
    spec.kind = EffectKind::tonal_change;
    spec.seed = 0xDEADBEEFCAFEBABEULL;
    spec.start_time = 2.25;
    spec.params["shift_semitones"] = -1.5;
    spec.params["duration"] = 4.0;

    const EffectSpec back = spec_from_json(spec_to_json(spec));
    REQUIRE(back.kind == spec.kind);
    REQUIRE(back.seed == spec.seed);
    REQUIRE(back.start_time == spec.start_time);
    REQUIRE(back.params == spec.params);
}
