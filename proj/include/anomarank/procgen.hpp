#pragma once
// Procedural machine-sound generation: five machine archetypes built from a
// shared set of components (harmonic stack, rumble tone, noise floor, hiss
// band, burst train), plus five surrogate degradations that stand in for real
// anomalies. Each component carries its own per-clip level jitter, which is
// what makes some machines harder to screen than others: a detector sees a
// wide normal distribution exactly in the bands where a machine jitters.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomarank/audio.hpp"
#include "anomarank/common.hpp"
#include "anomarank/dsp.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/prng.hpp"

namespace anomarank {

struct MachineProfile {
    std::string machine_type;
    std::string operating_condition;

    // Harmonic stack: amplitudes 1/h^stack_decay over `harmonics` partials.
    double fundamental_hz = 0.0;
    int harmonics = 0;
    double stack_decay = 1.0;
    double stack_level = 0.0;
    double pitch_jitter = 0.0;
    double stack_level_jitter = 0.0;

    // Low rumble tone.
    double rumble_hz = 0.0;
    double rumble_level = 0.0;
    double rumble_level_jitter = 0.0;

    // Broadband noise floor, colored by a one-biquad lowpass.
    double floor_lowpass_hz = 1000.0;
    double floor_level = 0.0;
    double floor_level_jitter = 0.0;

    // High hiss band.
    double hiss_lo_hz = 0.0;
    double hiss_hi_hz = 0.0;
    double hiss_level = 0.0;
    double hiss_level_jitter = 0.0;

    // Burst train (knocks, gusts).
    double burst_rate_hz = 0.0;
    double burst_tau_s = 0.012;
    double burst_level = 0.0;
    double burst_rate_jitter = 0.0;
    double burst_lowpass_hz = 0.0;  // 0 leaves bursts broadband

    double target_rms = 0.15;
    double level_jitter = 0.05;

    // How faint this machine's surrogate anomalies are, in (0, 1].
    double subtlety = 1.0;

    // Band the spectral centroid of a normal clip is expected to fall in.
    double centroid_lo_hz = 0.0;
    double centroid_hi_hz = 8000.0;

    void validate(int sample_rate) const {
        if (machine_type.empty()) throw ConfigError("machine profile has no machine_type");
        if (subtlety <= 0.0 || subtlety > 1.0) {
            throw ConfigError(machine_type + ": subtlety must be in (0, 1]");
        }
        if (harmonics > 0 && fundamental_hz * harmonics >= sample_rate / 2.0) {
            throw ConfigError(machine_type + ": harmonic stack exceeds Nyquist");
        }
        if (target_rms < 0.05 || target_rms > 0.4) {
            throw ConfigError(machine_type + ": target_rms outside the sane [0.05, 0.4] range");
        }
    }
};

enum class SurrogateKind {
    impact_train_modulation,
    harmonic_imbalance,
    friction_band_noise,
    flow_turbulence,
    stick_slip,
};

inline constexpr std::array<SurrogateKind, 5> kAllSurrogateKinds = {
    SurrogateKind::impact_train_modulation, SurrogateKind::harmonic_imbalance,
    SurrogateKind::friction_band_noise,     SurrogateKind::flow_turbulence,
    SurrogateKind::stick_slip,
};

inline const char* to_string(SurrogateKind kind) {
    switch (kind) {
        case SurrogateKind::impact_train_modulation: return "impact_train_modulation";
        case SurrogateKind::harmonic_imbalance: return "harmonic_imbalance";
        case SurrogateKind::friction_band_noise: return "friction_band_noise";
        case SurrogateKind::flow_turbulence: return "flow_turbulence";
        case SurrogateKind::stick_slip: return "stick_slip";
    }
    throw ConfigError("invalid SurrogateKind value");
}

inline SurrogateKind surrogate_kind_from_string(const std::string& name) {
    for (SurrogateKind k : kAllSurrogateKinds) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown surrogate kind '" + name + "'");
}

struct SurrogateSpec {
    SurrogateKind kind = SurrogateKind::impact_train_modulation;
    double severity = 1.0;
    std::uint64_t seed = 0;
};

inline nlohmann::json surrogate_spec_to_json(const SurrogateSpec& spec) {
    return {{"kind", to_string(spec.kind)}, {"severity", spec.severity}, {"seed", spec.seed}};
}

inline SurrogateSpec surrogate_spec_from_json(const nlohmann::json& j) {
    SurrogateSpec spec;
    spec.kind = surrogate_kind_from_string(j.at("kind").get<std::string>());
    spec.severity = j.at("severity").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

namespace procgen_detail {

inline void normalize_rms(std::vector<double>& x) {
    double energy = 0.0;
    for (double v : x) energy += v * v;
    const double rms = std::sqrt(energy / static_cast<double>(x.size()));
    if (rms > 0.0) {
        for (double& v : x) v /= rms;
    }
}

// Per-clip multiplicative jitter factor in [1 - j, 1 + j].
inline double jitter(SplitMix64& rng, double j) { return 1.0 + j * rng.uniform(-1.0, 1.0); }

// Parameters drawn once per clip; surrogate layers that anchor on the clip's
// realized pitch re-derive them from the same seed.
struct ClipDraws {
    double fundamental = 0.0;
};

inline AudioClip synth_normal_impl(const MachineProfile& p, double duration, int sample_rate,
                                   std::uint64_t seed, ClipDraws* draws_out) {
    p.validate(sample_rate);
    if (duration <= 0.0) throw ConfigError("synth_normal: duration must be positive");

    const auto n = static_cast<std::size_t>(duration * sample_rate);
    const double sr = sample_rate;
    SplitMix64 rng(seed);

    // Per-clip draws happen in one fixed order; reordering them would silently
    // change every generated dataset.
    const double f0 = p.fundamental_hz * jitter(rng, p.pitch_jitter);
    const double stack_j = jitter(rng, p.stack_level_jitter);
    const double rumble_j = jitter(rng, p.rumble_level_jitter);
    const double floor_j = jitter(rng, p.floor_level_jitter);
    const double hiss_j = jitter(rng, p.hiss_level_jitter);
    const double burst_rate = p.burst_rate_hz * jitter(rng, p.burst_rate_jitter);
    const double overall_j = jitter(rng, p.level_jitter);
    if (draws_out) draws_out->fundamental = f0;

    std::vector<std::vector<double>> components;
    std::vector<double> levels, jitters;

    if (p.stack_level > 0.0 && p.harmonics > 0) {
        std::vector<double> stack(n, 0.0);
        for (int h = 1; h <= p.harmonics; ++h) {
            const double amp = 1.0 / std::pow(static_cast<double>(h), p.stack_decay);
            const double w = 2.0 * std::numbers::pi * h * f0 / sr;
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t i = 0; i < n; ++i) stack[i] += amp * std::sin(w * i + phase);
        }
        normalize_rms(stack);
        components.push_back(std::move(stack));
        levels.push_back(p.stack_level);
        jitters.push_back(stack_j);
    }

    if (p.rumble_level > 0.0) {
        std::vector<double> rumble(n);
        const double w = 2.0 * std::numbers::pi * p.rumble_hz / sr;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < n; ++i) rumble[i] = std::sin(w * i + phase);
        normalize_rms(rumble);
        components.push_back(std::move(rumble));
        levels.push_back(p.rumble_level);
        jitters.push_back(rumble_j);
    }

    if (p.floor_level > 0.0) {
        std::vector<double> floor(n);
        Biquad lp = Biquad::lowpass(p.floor_lowpass_hz, sr);
        for (std::size_t i = 0; i < n; ++i) floor[i] = lp.process(rng.uniform(-1.0, 1.0));
        normalize_rms(floor);
        components.push_back(std::move(floor));
        levels.push_back(p.floor_level);
        jitters.push_back(floor_j);
    }

    if (p.hiss_level > 0.0) {
        std::vector<double> hiss(n);
        Biquad hp = Biquad::highpass(p.hiss_lo_hz, sr);
        Biquad lp = Biquad::lowpass(p.hiss_hi_hz, sr);
        for (std::size_t i = 0; i < n; ++i) hiss[i] = lp.process(hp.process(rng.uniform(-1.0, 1.0)));
        normalize_rms(hiss);
        components.push_back(std::move(hiss));
        levels.push_back(p.hiss_level);
        jitters.push_back(hiss_j);
    }

    if (p.burst_level > 0.0 && burst_rate > 0.0) {
        std::vector<double> bursts(n, 0.0);
        const double period = sr / burst_rate;
        const auto burst_len = static_cast<std::size_t>(p.burst_tau_s * 5.0 * sr);
        const double tau = p.burst_tau_s * sr;
        double t = rng.uniform(0.0, period);
        while (t < static_cast<double>(n)) {
            const auto b0 = static_cast<std::size_t>(t);
            const double amp = 1.0 + 0.3 * rng.uniform(-1.0, 1.0);
            for (std::size_t j = 0; j < burst_len && b0 + j < n; ++j) {
                bursts[b0 + j] += amp * rng.uniform(-1.0, 1.0) * std::exp(-static_cast<double>(j) / tau);
            }
            t += period * (1.0 + 0.35 * rng.uniform(-1.0, 1.0));
        }
        if (p.burst_lowpass_hz > 0.0) {
            Biquad lp = Biquad::lowpass(p.burst_lowpass_hz, sr);
            for (auto& v : bursts) v = lp.process(v);
        }
        normalize_rms(bursts);
        components.push_back(std::move(bursts));
        levels.push_back(p.burst_level);
        jitters.push_back(1.0);  // burst variability comes from the rate draw
    }

    if (components.empty()) throw ConfigError(p.machine_type + ": profile has no components");

    // The gain is computed against the unjittered mix, so per-component
    // jitter survives into the output as genuine per-band variability
    // instead of being cancelled by per-clip renormalization.
    std::vector<double> mix(n, 0.0), nominal(n, 0.0);
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            mix[i] += levels[c] * jitters[c] * components[c][i];
            nominal[i] += levels[c] * components[c][i];
        }
    }
    double nominal_energy = 0.0;
    for (double v : nominal) nominal_energy += v * v;
    const double nominal_rms = std::sqrt(nominal_energy / static_cast<double>(n));
    double gain = p.target_rms * overall_j / nominal_rms;

    double peak = 0.0, energy = 0.0;
    for (double v : mix) {
        peak = std::max(peak, std::abs(v));
        energy += v * v;
    }
    if (gain * peak > 0.85) gain = 0.85 / peak;
    double rms = gain * std::sqrt(energy / static_cast<double>(n));
    if (rms < 0.05) gain *= 0.05 / rms;
    if (rms > 0.5) gain *= 0.5 / rms;

    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) clip.samples[i] = static_cast<float>(gain * mix[i]);
    return clip;
}

}  // namespace procgen_detail

inline AudioClip synth_normal(const MachineProfile& profile, double duration, int sample_rate,
                              std::uint64_t seed) {
    return procgen_detail::synth_normal_impl(profile, duration, sample_rate, seed, nullptr);
}

// Base gain of a surrogate layer at severity 1 on a subtlety-1 machine.
inline double surrogate_base_gain(SurrogateKind kind) {
    switch (kind) {
        case SurrogateKind::impact_train_modulation: return 0.18;
        case SurrogateKind::harmonic_imbalance: return 0.20;
        case SurrogateKind::friction_band_noise: return 0.32;
        case SurrogateKind::flow_turbulence: return 0.17;
        case SurrogateKind::stick_slip: return 0.26;
    }
    throw ConfigError("invalid SurrogateKind value");
}

// Normal synthesis plus an additive degradation layer scaled by
// severity * profile.subtlety. The layers are deliberately different DSP
// constructions from the ten effect transforms, so rank agreement between
// synthetic and surrogate anomalies is a meaningful check rather than the
// same code meeting itself.
inline AudioClip synth_surrogate_anomaly(const MachineProfile& profile, const SurrogateSpec& spec,
                                         double duration, int sample_rate) {
    using namespace procgen_detail;
    if (spec.severity <= 0.0 || spec.severity > 1.0) {
        throw ConfigError("surrogate severity must be in (0, 1]");
    }
    ClipDraws draws;
    AudioClip clip = synth_normal_impl(profile, duration, sample_rate, spec.seed, &draws);
    const std::size_t n = clip.samples.size();
    const double sr = sample_rate;
    SplitMix64 rng(derive_seed(spec.seed, "surrogate"));

    std::vector<double> layer(n, 0.0);
    switch (spec.kind) {
        case SurrogateKind::impact_train_modulation: {
            // Periodic resonant rings at a defect rate: damped sinusoid, not
            // a noise burst and not a single-polarity click.
            const double period = sr / 11.3;
            const double ring_hz = 3600.0;
            const auto ring_len = static_cast<std::size_t>(0.060 * sr);
            const double tau = 0.012 * sr;
            const double w = 2.0 * std::numbers::pi * ring_hz / sr;
            double t = rng.uniform(0.0, period);
            while (t < static_cast<double>(n)) {
                const auto r0 = static_cast<std::size_t>(t);
                for (std::size_t j = 0; j < ring_len && r0 + j < n; ++j) {
                    layer[r0 + j] += std::sin(w * j) * std::exp(-static_cast<double>(j) / tau);
                }
                t += period;
            }
            break;
        }
        case SurrogateKind::harmonic_imbalance: {
            // Modulation sidebands around the clip's realized harmonics.
            const double f0 = draws.fundamental > 0.0 ? draws.fundamental : 150.0;
            const double f_mod = 90.0;
            const int n_pairs = std::min(4, std::max(1, profile.harmonics));
            for (int h = 1; h <= n_pairs; ++h) {
                const double amp = 1.0 / std::sqrt(static_cast<double>(h));
                for (double sign : {-1.0, 1.0}) {
                    const double w = 2.0 * std::numbers::pi * (h * f0 + sign * f_mod) / sr;
                    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    for (std::size_t i = 0; i < n; ++i) layer[i] += amp * std::sin(w * i + phase);
                }
            }
            break;
        }
        case SurrogateKind::friction_band_noise: {
            // Intermittent friction squeal: comb-resonant narrowband noise
            // that comes and goes in sub-second episodes, the way a dry rail
            // squeals during traverse. Episodes are what the detector must
            // catch; a steady layer would just fill the machine's own gaps.
            const auto delay = static_cast<std::size_t>(sr / 450.0);
            std::vector<double> comb(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                comb[i] = rng.uniform(-1.0, 1.0) + (i >= delay ? 0.95 * comb[i - delay] : 0.0);
            }
            Biquad hp = Biquad::highpass(6800.0, sr);
            Biquad lp = Biquad::lowpass(7900.0, sr);
            for (std::size_t i = 0; i < n; ++i) comb[i] = lp.process(hp.process(comb[i]));
            const auto ramp = static_cast<std::size_t>(0.012 * sr);
            std::size_t pos = static_cast<std::size_t>(rng.uniform(0.0, 0.8) * sr);
            while (pos < n) {
                const auto on = static_cast<std::size_t>(rng.uniform(0.05, 0.15) * sr);
                for (std::size_t j = 0; j < on && pos + j < n; ++j) {
                    double env = 1.0;
                    if (j < ramp) env = static_cast<double>(j) / static_cast<double>(ramp);
                    const std::size_t left = on - j;
                    if (left < ramp) env = std::min(env, static_cast<double>(left) / ramp);
                    layer[pos + j] = comb[pos + j] * env;
                }
                pos += on + static_cast<std::size_t>(rng.uniform(0.15, 0.55) * sr);
            }
            break;
        }
        case SurrogateKind::flow_turbulence: {
            // Turbulence hiss through the restriction: band noise in the gap
            // between the machine's floor rolloff and its hiss band, with a
            // slow surge.
            Biquad hp = Biquad::highpass(1200.0, sr);
            Biquad lp = Biquad::lowpass(2400.0, sr);
            const double am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double w_am = 2.0 * std::numbers::pi * 0.35 / sr;
            for (std::size_t i = 0; i < n; ++i) {
                layer[i] = lp.process(hp.process(rng.uniform(-1.0, 1.0))) *
                           (0.75 + 0.25 * std::sin(w_am * i + am_phase));
            }
            break;
        }
        case SurrogateKind::stick_slip: {
            // Repeating short upward chirps (150 -> 900 Hz over 180 ms).
            const auto chirp_len = static_cast<std::size_t>(0.30 * sr);
            const double f_lo = 150.0, f_hi = 1200.0;
            double t = rng.uniform(0.0, 0.45 * sr);
            while (t < static_cast<double>(n)) {
                const auto c0 = static_cast<std::size_t>(t);
                const double amp = 1.0 + 0.2 * rng.uniform(-1.0, 1.0);
                double phase = 0.0;
                for (std::size_t j = 0; j < chirp_len && c0 + j < n; ++j) {
                    const double frac = static_cast<double>(j) / chirp_len;
                    phase += 2.0 * std::numbers::pi * (f_lo + (f_hi - f_lo) * frac) / sr;
                    const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * frac);
                    layer[c0 + j] += amp * env * std::sin(phase);
                }
                t += (0.45 + 0.08 * rng.uniform(-1.0, 1.0)) * sr;
            }
            break;
        }
    }

    normalize_rms(layer);
    const double gain = spec.severity * profile.subtlety * surrogate_base_gain(spec.kind);
    std::vector<double> out(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<double>(clip.samples[i]) + gain * layer[i];
        peak = std::max(peak, std::abs(out[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        clip.samples[i] = peak > 1.0 ? effect_detail::knee_limit(out[i])
                                     : static_cast<float>(out[i]);
    }
    return clip;
}

// The five desk machines, ordered alphabetically (report order). The constants
// encode the intended screening difficulty: a machine is easy when the band
// its anomalies land in is quiet and stable across clips, and hard when that
// band is already busy and jittery.
inline const std::vector<MachineProfile>& default_profiles() {
    static const std::vector<MachineProfile> profiles = [] {
        std::vector<MachineProfile> v;

        MachineProfile bearing;
        bearing.machine_type = "bearing";
        bearing.operating_condition = "24 krpm";
        bearing.fundamental_hz = 850.0;
        bearing.harmonics = 4;
        bearing.stack_decay = 1.0;
        bearing.stack_level = 0.6;
        bearing.pitch_jitter = 0.015;
        bearing.stack_level_jitter = 0.08;
        bearing.floor_lowpass_hz = 3000.0;
        bearing.floor_level = 0.4;
        bearing.floor_level_jitter = 0.08;
        bearing.hiss_lo_hz = 3200.0;
        bearing.hiss_hi_hz = 5200.0;
        bearing.hiss_level = 0.55;
        bearing.hiss_level_jitter = 0.3;
        bearing.target_rms = 0.20;
        bearing.level_jitter = 0.05;
        bearing.subtlety = 0.84;
        bearing.centroid_lo_hz = 900.0;
        bearing.centroid_hi_hz = 3800.0;
        v.push_back(bearing);

        MachineProfile fan;
        fan.machine_type = "fan";
        fan.operating_condition = "steady load";
        fan.fundamental_hz = 480.0;
        fan.harmonics = 3;
        fan.stack_decay = 1.2;
        fan.stack_level = 0.5;
        fan.pitch_jitter = 0.01;
        fan.stack_level_jitter = 0.05;
        fan.floor_lowpass_hz = 900.0;
        fan.floor_level = 0.35;
        fan.floor_level_jitter = 0.04;
        fan.hiss_lo_hz = 2000.0;
        fan.hiss_hi_hz = 7000.0;
        fan.hiss_level = 0.9;
        fan.hiss_level_jitter = 0.2;
        fan.burst_rate_hz = 2.5;
        fan.burst_tau_s = 0.09;
        fan.burst_level = 0.45;
        fan.burst_rate_jitter = 0.3;
        fan.target_rms = 0.14;
        fan.level_jitter = 0.03;
        fan.subtlety = 1.0;
        fan.centroid_lo_hz = 1200.0;
        fan.centroid_hi_hz = 4500.0;
        v.push_back(fan);

        MachineProfile gearbox;
        gearbox.machine_type = "gearbox";
        gearbox.operating_condition = "constant mesh speed";
        gearbox.fundamental_hz = 220.0;
        gearbox.harmonics = 8;
        gearbox.stack_decay = 0.6;
        gearbox.stack_level = 1.0;
        gearbox.pitch_jitter = 0.02;
        gearbox.stack_level_jitter = 0.05;
        gearbox.rumble_hz = 110.0;
        gearbox.rumble_level = 0.5;
        gearbox.rumble_level_jitter = 0.3;
        gearbox.burst_rate_hz = 18.0;
        gearbox.burst_tau_s = 0.005;
        gearbox.burst_level = 0.55;
        gearbox.burst_rate_jitter = 0.3;
        gearbox.floor_lowpass_hz = 2200.0;
        gearbox.floor_level = 0.3;
        gearbox.floor_level_jitter = 0.05;
        gearbox.hiss_lo_hz = 3800.0;
        gearbox.hiss_hi_hz = 6800.0;
        gearbox.hiss_level = 0.5;
        gearbox.hiss_level_jitter = 0.3;
        gearbox.target_rms = 0.16;
        gearbox.level_jitter = 0.04;
        gearbox.subtlety = 0.58;
        gearbox.centroid_lo_hz = 350.0;
        gearbox.centroid_hi_hz = 2200.0;
        v.push_back(gearbox);

        MachineProfile slide;
        slide.machine_type = "slide_rail";
        slide.operating_condition = "cyclic traverse";
        slide.fundamental_hz = 320.0;
        slide.harmonics = 3;
        slide.stack_decay = 1.0;
        slide.stack_level = 0.45;
        slide.pitch_jitter = 0.02;
        slide.stack_level_jitter = 0.07;
        slide.floor_lowpass_hz = 1500.0;
        slide.floor_level = 0.3;
        slide.floor_level_jitter = 0.22;
        slide.burst_rate_hz = 8.0;
        slide.burst_tau_s = 0.012;
        slide.burst_level = 0.9;
        slide.burst_rate_jitter = 0.35;
        slide.burst_lowpass_hz = 4500.0;
        slide.target_rms = 0.22;
        slide.level_jitter = 0.05;
        slide.subtlety = 0.55;
        slide.centroid_lo_hz = 500.0;
        slide.centroid_hi_hz = 3800.0;
        v.push_back(slide);

        MachineProfile valve;
        valve.machine_type = "valve";
        valve.operating_condition = "intermittent actuation";
        valve.fundamental_hz = 140.0;
        valve.harmonics = 2;
        valve.stack_decay = 1.0;
        valve.stack_level = 0.15;
        valve.pitch_jitter = 0.01;
        valve.stack_level_jitter = 0.05;
        valve.floor_lowpass_hz = 1000.0;
        valve.floor_level = 0.25;
        valve.floor_level_jitter = 0.18;
        valve.hiss_lo_hz = 2600.0;
        valve.hiss_hi_hz = 7400.0;
        valve.hiss_level = 1.2;
        valve.hiss_level_jitter = 0.35;
        valve.target_rms = 0.26;
        valve.level_jitter = 0.05;
        valve.subtlety = 0.42;
        valve.centroid_lo_hz = 2000.0;
        valve.centroid_hi_hz = 5600.0;
        v.push_back(valve);

        return v;
    }();
    return profiles;
}

inline const MachineProfile& profile_for(const std::string& machine_type) {
    for (const auto& p : default_profiles()) {
        if (p.machine_type == machine_type) return p;
    }
    throw ConfigError("no default profile for machine type '" + machine_type + "'");
}

// Which degradation a machine's surrogate anomalies use by default.
inline SurrogateKind default_surrogate_kind(const std::string& machine_type) {
    if (machine_type == "bearing") return SurrogateKind::impact_train_modulation;
    if (machine_type == "gearbox") return SurrogateKind::harmonic_imbalance;
    if (machine_type == "slide_rail") return SurrogateKind::friction_band_noise;
    if (machine_type == "valve") return SurrogateKind::flow_turbulence;
    if (machine_type == "fan") return SurrogateKind::stick_slip;
    throw ConfigError("no default surrogate kind for machine type '" + machine_type + "'");
}

inline std::vector<double> default_severities() { return {0.3, 0.6, 1.0}; }

// ---- profile serialization ----------------------------------------------------

inline nlohmann::json profile_to_json(const MachineProfile& p) {
    return {{"machine_type", p.machine_type},
            {"operating_condition", p.operating_condition},
            {"fundamental_hz", p.fundamental_hz},
            {"harmonics", p.harmonics},
            {"stack_decay", p.stack_decay},
            {"stack_level", p.stack_level},
            {"pitch_jitter", p.pitch_jitter},
            {"stack_level_jitter", p.stack_level_jitter},
            {"rumble_hz", p.rumble_hz},
            {"rumble_level", p.rumble_level},
            {"rumble_level_jitter", p.rumble_level_jitter},
            {"floor_lowpass_hz", p.floor_lowpass_hz},
            {"floor_level", p.floor_level},
            {"floor_level_jitter", p.floor_level_jitter},
            {"hiss_lo_hz", p.hiss_lo_hz},
            {"hiss_hi_hz", p.hiss_hi_hz},
            {"hiss_level", p.hiss_level},
            {"hiss_level_jitter", p.hiss_level_jitter},
            {"burst_rate_hz", p.burst_rate_hz},
            {"burst_tau_s", p.burst_tau_s},
            {"burst_level", p.burst_level},
            {"burst_rate_jitter", p.burst_rate_jitter},
            {"burst_lowpass_hz", p.burst_lowpass_hz},
            {"target_rms", p.target_rms},
            {"level_jitter", p.level_jitter},
            {"subtlety", p.subtlety},
            {"centroid_lo_hz", p.centroid_lo_hz},
            {"centroid_hi_hz", p.centroid_hi_hz}};
}

inline MachineProfile profile_from_json(const nlohmann::json& j) {
    MachineProfile p;
    p.machine_type = j.at("machine_type").get<std::string>();
    p.operating_condition = j.value("operating_condition", std::string{});
    p.fundamental_hz = j.value("fundamental_hz", 0.0);
    p.harmonics = j.value("harmonics", 0);
    p.stack_decay = j.value("stack_decay", 1.0);
    p.stack_level = j.value("stack_level", 0.0);
    p.pitch_jitter = j.value("pitch_jitter", 0.0);
    p.stack_level_jitter = j.value("stack_level_jitter", 0.0);
    p.rumble_hz = j.value("rumble_hz", 0.0);
    p.rumble_level = j.value("rumble_level", 0.0);
    p.rumble_level_jitter = j.value("rumble_level_jitter", 0.0);
    p.floor_lowpass_hz = j.value("floor_lowpass_hz", 1000.0);
    p.floor_level = j.value("floor_level", 0.0);
    p.floor_level_jitter = j.value("floor_level_jitter", 0.0);
    p.hiss_lo_hz = j.value("hiss_lo_hz", 0.0);
    p.hiss_hi_hz = j.value("hiss_hi_hz", 0.0);
    p.hiss_level = j.value("hiss_level", 0.0);
    p.hiss_level_jitter = j.value("hiss_level_jitter", 0.0);
    p.burst_rate_hz = j.value("burst_rate_hz", 0.0);
    p.burst_tau_s = j.value("burst_tau_s", 0.012);
    p.burst_level = j.value("burst_level", 0.0);
    p.burst_rate_jitter = j.value("burst_rate_jitter", 0.0);
    p.burst_lowpass_hz = j.value("burst_lowpass_hz", 0.0);
    p.target_rms = j.value("target_rms", 0.15);
    p.level_jitter = j.value("level_jitter", 0.05);
    p.subtlety = j.value("subtlety", 1.0);
    p.centroid_lo_hz = j.value("centroid_lo_hz", 0.0);
    p.centroid_hi_hz = j.value("centroid_hi_hz", 8000.0);
    return p;
}

}  // namespace anomarank
