#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "anomarank/audio.hpp"
#include "anomarank/common.hpp"

namespace anomarank {

enum class Window { hann, rectangular };

// Periodic Hann, the standard choice for 50%-overlap analysis.
inline std::vector<double> make_window(Window kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (kind == Window::hann) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        }
    }
    return w;
}

namespace fft_detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT with a per-size twiddle plan shared across frames.
struct FftPlan {
    std::size_t n = 0;
    std::vector<std::size_t> bit_rev;
    std::vector<std::complex<double>> twiddles;  // concatenated per stage

    explicit FftPlan(std::size_t size) : n(size) {
        bit_rev.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b) {
                r |= ((i >> b) & 1) << (log2n - 1 - b);
            }
            bit_rev[i] = r;
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
            for (std::size_t k = 0; k < len / 2; ++k) {
                twiddles.emplace_back(std::cos(ang * static_cast<double>(k)),
                                      std::sin(ang * static_cast<double>(k)));
            }
        }
    }

    void forward(std::vector<std::complex<double>>& a) const {
        for (std::size_t i = 0; i < n; ++i) {
            if (bit_rev[i] > i) std::swap(a[i], a[bit_rev[i]]);
        }
        std::size_t tw_off = 0;
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t half = len / 2;
            for (std::size_t start = 0; start < n; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    const std::complex<double> w = twiddles[tw_off + k];
                    const std::complex<double> u = a[start + k];
                    const std::complex<double> v = a[start + k + half] * w;
                    a[start + k] = u + v;
                    a[start + k + half] = u - v;
                }
            }
            tw_off += half;
        }
    }
};

// O(n^2) fallback keeps stft total for non-power-of-two frame sizes.
inline void naive_dft(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) {
    const std::size_t n = in.size();
    out.assign(n, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += in[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
}

}  // namespace fft_detail

// frames x bins grid of non-negative magnitudes; bins = frame_size/2 + 1.
// DFT normalization: unnormalized forward transform, so for one windowed
// frame sum_k |X_k|^2 over the full (two-sided) spectrum equals
// frame_size * sum_n x_n^2.
struct Spectrogram {
    std::vector<double> magnitudes;  // row-major frames x bins
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::size_t frame_size = 0;
    std::size_t hop_size = 0;
    int sample_rate = 0;

    double& at(std::size_t frame, std::size_t bin) { return magnitudes[frame * bins + bin]; }
    double at(std::size_t frame, std::size_t bin) const { return magnitudes[frame * bins + bin]; }
    double bin_hz(std::size_t bin) const {
        return static_cast<double>(bin) * sample_rate / static_cast<double>(frame_size);
    }
};

inline std::size_t stft_frame_count(std::size_t samples, std::size_t frame_size, std::size_t hop_size) {
    return (samples - frame_size) / hop_size + 1;
}

inline Spectrogram stft(const AudioClip& clip, std::size_t frame_size, std::size_t hop_size,
                        Window window = Window::hann) {
    if (hop_size < 1) throw DataError("stft: hop_size must be >= 1");
    if (frame_size < 2) throw DataError("stft: frame_size must be >= 2");
    if (clip.samples.size() < frame_size) throw DataError("stft: clip shorter than one frame");

    const std::vector<double> win = make_window(window, frame_size);
    const bool pow2 = fft_detail::is_pow2(frame_size);
    fft_detail::FftPlan plan(pow2 ? frame_size : 2);

    Spectrogram spec;
    spec.frames = stft_frame_count(clip.samples.size(), frame_size, hop_size);
    spec.bins = frame_size / 2 + 1;
    spec.frame_size = frame_size;
    spec.hop_size = hop_size;
    spec.sample_rate = clip.sample_rate;
    spec.magnitudes.resize(spec.frames * spec.bins);

    std::vector<std::complex<double>> buf(frame_size);
    std::vector<std::complex<double>> out(frame_size);
    for (std::size_t f = 0; f < spec.frames; ++f) {
        const std::size_t off = f * hop_size;
        for (std::size_t i = 0; i < frame_size; ++i) {
            buf[i] = {static_cast<double>(clip.samples[off + i]) * win[i], 0.0};
        }
        if (pow2) {
            plan.forward(buf);
            for (std::size_t b = 0; b < spec.bins; ++b) spec.at(f, b) = std::abs(buf[b]);
        } else {
            fft_detail::naive_dft(buf, out);
            for (std::size_t b = 0; b < spec.bins; ++b) spec.at(f, b) = std::abs(out[b]);
        }
    }
    return spec;
}

// --- spectral / envelope analysis helpers -----------------------------------

// Mean per-frame power summed over bins whose center frequency lies in [lo_hz, hi_hz].
inline double band_power(const Spectrogram& spec, double lo_hz, double hi_hz) {
    double acc = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) {
        for (std::size_t b = 0; b < spec.bins; ++b) {
            const double hz = spec.bin_hz(b);
            if (hz >= lo_hz && hz <= hi_hz) {
                const double m = spec.at(f, b);
                acc += m * m;
            }
        }
    }
    return spec.frames > 0 ? acc / static_cast<double>(spec.frames) : 0.0;
}

inline double spectral_centroid_hz(const Spectrogram& spec) {
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) {
        for (std::size_t b = 0; b < spec.bins; ++b) {
            const double p = spec.at(f, b) * spec.at(f, b);
            num += p * spec.bin_hz(b);
            den += p;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

// Mean per-frame geometric/arithmetic power ratio, in (0, 1].
inline double spectral_flatness(const Spectrogram& spec) {
    constexpr double tiny = 1e-12;
    double acc = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) {
        double log_sum = 0.0, lin_sum = 0.0;
        for (std::size_t b = 0; b < spec.bins; ++b) {
            const double p = spec.at(f, b) * spec.at(f, b) + tiny;
            log_sum += std::log(p);
            lin_sum += p;
        }
        const double n = static_cast<double>(spec.bins);
        acc += std::exp(log_sum / n) / (lin_sum / n);
    }
    return spec.frames > 0 ? acc / static_cast<double>(spec.frames) : 0.0;
}

// Moving-RMS amplitude envelope with the given window length in samples.
inline std::vector<double> rms_envelope(const std::vector<float>& x, std::size_t win) {
    const std::size_t n = x.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + static_cast<double>(x[i]) * x[i];
    }
    std::vector<double> env(n, 0.0);
    const std::size_t half = win / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i > half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        env[i] = std::sqrt((prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo));
    }
    return env;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

// Count of local envelope maxima exceeding `threshold`, with a refractory
// gap so one physical burst is not counted multiple times.
inline std::size_t count_envelope_peaks(const std::vector<double>& env, double threshold,
                                        std::size_t min_gap) {
    std::size_t count = 0;
    std::size_t last = 0;
    bool have_last = false;
    for (std::size_t i = 1; i + 1 < env.size(); ++i) {
        if (env[i] > threshold && env[i] >= env[i - 1] && env[i] >= env[i + 1]) {
            if (!have_last || i - last >= min_gap) {
                ++count;
                last = i;
                have_last = true;
            }
        }
    }
    return count;
}

// --- small biquad filters used by effects and procgen ------------------------

// Direct form I biquad; coefficients normalized by a0.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

    double process(double x) {
        const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        return y;
    }

    static Biquad lowpass(double fc, double sr, double q = 0.70710678) {
        const double w = 2.0 * std::numbers::pi * fc / sr;
        const double alpha = std::sin(w) / (2.0 * q);
        const double c = std::cos(w);
        const double a0 = 1.0 + alpha;
        Biquad f;
        f.b0 = (1.0 - c) / 2.0 / a0;
        f.b1 = (1.0 - c) / a0;
        f.b2 = f.b0;
        f.a1 = -2.0 * c / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }

    static Biquad highpass(double fc, double sr, double q = 0.70710678) {
        const double w = 2.0 * std::numbers::pi * fc / sr;
        const double alpha = std::sin(w) / (2.0 * q);
        const double c = std::cos(w);
        const double a0 = 1.0 + alpha;
        Biquad f;
        f.b0 = (1.0 + c) / 2.0 / a0;
        f.b1 = -(1.0 + c) / a0;
        f.b2 = f.b0;
        f.a1 = -2.0 * c / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }

    // Constant-peak-gain bandpass.
    static Biquad bandpass(double fc, double sr, double q) {
        const double w = 2.0 * std::numbers::pi * fc / sr;
        const double alpha = std::sin(w) / (2.0 * q);
        const double c = std::cos(w);
        const double a0 = 1.0 + alpha;
        Biquad f;
        f.b0 = alpha / a0;
        f.b1 = 0.0;
        f.b2 = -alpha / a0;
        f.a1 = -2.0 * c / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }
};

}  // namespace anomarank
