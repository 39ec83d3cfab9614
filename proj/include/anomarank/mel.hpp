#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anomarank/common.hpp"
#include "anomarank/dsp.hpp"

namespace anomarank {

// HTK mel scale, triangular filters, no area normalization.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Sparse triangular filterbank spanning 0 Hz .. sample_rate/2.
struct MelFilterbank {
    struct Filter {
        std::size_t start_bin = 0;
        std::vector<double> weights;
    };
    std::vector<Filter> filters;
    std::vector<double> center_hz;

    static MelFilterbank create(int sample_rate, std::size_t frame_size, std::size_t n_mels) {
        if (n_mels < 1) throw DataError("MelFilterbank: n_mels must be >= 1");
        const std::size_t bins = frame_size / 2 + 1;
        const double mel_lo = hz_to_mel(0.0);
        const double mel_hi = hz_to_mel(sample_rate / 2.0);

        std::vector<double> edges(n_mels + 2);
        for (std::size_t i = 0; i < edges.size(); ++i) {
            edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                              static_cast<double>(n_mels + 1));
        }

        MelFilterbank fb;
        fb.filters.resize(n_mels);
        fb.center_hz.resize(n_mels);
        for (std::size_t m = 0; m < n_mels; ++m) {
            const double f_lo = edges[m], f_c = edges[m + 1], f_hi = edges[m + 2];
            fb.center_hz[m] = f_c;
            Filter& filt = fb.filters[m];
            bool started = false;
            for (std::size_t b = 0; b < bins; ++b) {
                const double hz = static_cast<double>(b) * sample_rate / static_cast<double>(frame_size);
                double w = 0.0;
                if (hz > f_lo && hz < f_c) {
                    w = (hz - f_lo) / (f_c - f_lo);
                } else if (hz >= f_c && hz < f_hi) {
                    w = (f_hi - hz) / (f_hi - f_c);
                }
                if (w > 0.0) {
                    if (!started) {
                        filt.start_bin = b;
                        started = true;
                    }
                    filt.weights.push_back(w);
                } else if (started) {
                    break;
                }
            }
        }
        return fb;
    }
};

// frames x n_mels grid of log-energies. Values are log(filterbank . power + floor_epsilon),
// so every entry is >= log(floor_epsilon) and finite.
struct FeatureMatrix {
    std::vector<float> values;  // row-major frames x n_mels
    std::size_t frames = 0;
    std::size_t n_mels = 0;
    std::size_t frame_size = 0;
    std::size_t hop_size = 0;
    int sample_rate = 0;

    float& at(std::size_t frame, std::size_t mel) { return values[frame * n_mels + mel]; }
    float at(std::size_t frame, std::size_t mel) const { return values[frame * n_mels + mel]; }

    // Mean over frames per mel band; the vector the Gaussian backend models.
    std::vector<double> mean_vector() const {
        std::vector<double> mean(n_mels, 0.0);
        for (std::size_t f = 0; f < frames; ++f) {
            for (std::size_t m = 0; m < n_mels; ++m) mean[m] += at(f, m);
        }
        for (double& v : mean) v /= static_cast<double>(frames);
        return mean;
    }
};

inline constexpr double kDefaultFloorEpsilon = 1e-10;

// Power (magnitude^2) feeds the filterbank; log is taken on filter outputs.
inline FeatureMatrix log_mel(const Spectrogram& spec, std::size_t n_mels = 128,
                             double floor_epsilon = kDefaultFloorEpsilon) {
    const MelFilterbank fb = MelFilterbank::create(spec.sample_rate, spec.frame_size, n_mels);

    FeatureMatrix feat;
    feat.frames = spec.frames;
    feat.n_mels = n_mels;
    feat.frame_size = spec.frame_size;
    feat.hop_size = spec.hop_size;
    feat.sample_rate = spec.sample_rate;
    feat.values.resize(spec.frames * n_mels);

    std::vector<double> power(spec.bins);
    for (std::size_t f = 0; f < spec.frames; ++f) {
        for (std::size_t b = 0; b < spec.bins; ++b) {
            const double m = spec.at(f, b);
            power[b] = m * m;
        }
        for (std::size_t m = 0; m < n_mels; ++m) {
            const MelFilterbank::Filter& filt = fb.filters[m];
            double acc = 0.0;
            for (std::size_t i = 0; i < filt.weights.size(); ++i) {
                acc += filt.weights[i] * power[filt.start_bin + i];
            }
            feat.at(f, m) = static_cast<float>(std::log(acc + floor_epsilon));
        }
    }
    return feat;
}

// Canonical feature pipeline: 64 ms frames, 50% hop, Hann window, 128 mels.
inline FeatureMatrix extract_features(const AudioClip& clip, std::size_t frame_size = 1024,
                                      std::size_t hop_size = 512, std::size_t n_mels = 128) {
    return log_mel(stft(clip, frame_size, hop_size, Window::hann), n_mels);
}

}  // namespace anomarank
