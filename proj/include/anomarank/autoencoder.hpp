#pragma once
// Convolutional autoencoder over log-mel patches, trained with Adam from
// scratch. The network core is templated on the scalar type so gradients can
// be verified in double precision while the production model runs in float.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "anomarank/common.hpp"
#include "anomarank/mel.hpp"
#include "anomarank/prng.hpp"

namespace anomarank {

struct AEConfig {
    std::vector<int> encoder_filters = {128, 64, 32};
    int kernel = 3;  // 3x3, zero-padded "same"
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int patch_mels = 128;
    int patch_frames = 32;
    int train_patch_hop = 16;
    // 0 trains on every hop-aligned patch; otherwise this many evenly spaced
    // patches per clip.
    int train_patches_per_clip = 0;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (encoder_filters.empty()) throw ConfigError("autoencoder needs at least one layer");
        for (int f : encoder_filters) {
            if (f <= 0) throw ConfigError("encoder filter counts must be positive");
        }
        if (kernel != 3) throw ConfigError("only 3x3 kernels are supported");
        if (epochs <= 0 || batch_size <= 0) throw ConfigError("epochs and batch_size must be positive");
        if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
        if (patch_mels <= 0 || patch_frames <= 0 || train_patch_hop <= 0) {
            throw ConfigError("patch geometry must be positive");
        }
        const int stride = 1 << encoder_filters.size();
        if (patch_mels % stride != 0 || patch_frames % stride != 0) {
            throw ConfigError("patch dimensions must be divisible by 2 per pooling layer");
        }
    }
};

// Small CI configuration; the full paper-style configuration is the default.
inline AEConfig fast_ae_config(std::uint64_t master_seed = 0) {
    AEConfig cfg;
    cfg.encoder_filters = {16, 8, 4};
    cfg.epochs = 24;
    cfg.train_patches_per_clip = 3;
    cfg.master_seed = master_seed;
    return cfg;
}

namespace ae_detail {

template <typename T>
struct Tensor {
    int ch = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c, int hh, int ww) : ch(c), h(hh), w(ww), v(static_cast<std::size_t>(c) * hh * ww) {}
    T& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * h + y) * w + x]; }
    T at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * h + y) * w + x]; }
    std::size_t size() const { return v.size(); }
};

template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0;
    std::vector<T> w;  // out_ch x in_ch x 3 x 3
    std::vector<T> b;  // out_ch

    void init(int in, int out, SplitMix64& rng) {
        in_ch = in;
        out_ch = out;
        w.resize(static_cast<std::size_t>(out) * in * 9);
        b.assign(out, T(0));
        const double limit = std::sqrt(6.0 / (in * 9.0));
        for (T& x : w) x = static_cast<T>(rng.uniform(-limit, limit));
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Tensor<T> y(out_ch, x.h, x.w);
        for (int oc = 0; oc < out_ch; ++oc) {
            for (int i = 0; i < x.h * x.w; ++i) {
                y.v[static_cast<std::size_t>(oc) * x.h * x.w + i] = b[oc];
            }
            for (int ic = 0; ic < in_ch; ++ic) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const T wv = w[((static_cast<std::size_t>(oc) * in_ch + ic) * 3 + ky) * 3 + kx];
                        for (int y0 = 0; y0 < x.h; ++y0) {
                            const int yy = y0 + ky - 1;
                            if (yy < 0 || yy >= x.h) continue;
                            const int x_lo = std::max(0, 1 - kx);
                            const int x_hi = std::min(x.w, x.w + 1 - kx);
                            T* out_row = &y.v[(static_cast<std::size_t>(oc) * x.h + y0) * x.w];
                            const T* in_row = &x.v[(static_cast<std::size_t>(ic) * x.h + yy) * x.w + kx - 1];
                            for (int x0 = x_lo; x0 < x_hi; ++x0) out_row[x0] += wv * in_row[x0];
                        }
                    }
                }
            }
        }
        return y;
    }

    // Accumulates parameter gradients into dw/db and returns dL/dx.
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, std::vector<T>& dw,
                       std::vector<T>& db) const {
        Tensor<T> dx(in_ch, x.h, x.w);
        for (int oc = 0; oc < out_ch; ++oc) {
            T bacc = T(0);
            const T* dy_base = &dy.v[static_cast<std::size_t>(oc) * x.h * x.w];
            for (int i = 0; i < x.h * x.w; ++i) bacc += dy_base[i];
            db[oc] += bacc;
            for (int ic = 0; ic < in_ch; ++ic) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const std::size_t wi = ((static_cast<std::size_t>(oc) * in_ch + ic) * 3 + ky) * 3 + kx;
                        const T wv = w[wi];
                        T wacc = T(0);
                        for (int y0 = 0; y0 < x.h; ++y0) {
                            const int yy = y0 + ky - 1;
                            if (yy < 0 || yy >= x.h) continue;
                            const int x_lo = std::max(0, 1 - kx);
                            const int x_hi = std::min(x.w, x.w + 1 - kx);
                            const T* dy_row = &dy.v[(static_cast<std::size_t>(oc) * x.h + y0) * x.w];
                            const T* in_row = &x.v[(static_cast<std::size_t>(ic) * x.h + yy) * x.w + kx - 1];
                            T* dx_row = &dx.v[(static_cast<std::size_t>(ic) * x.h + yy) * x.w + kx - 1];
                            for (int x0 = x_lo; x0 < x_hi; ++x0) {
                                wacc += dy_row[x0] * in_row[x0];
                                dx_row[x0] += wv * dy_row[x0];
                            }
                        }
                        dw[wi] += wacc;
                    }
                }
            }
        }
        return dx;
    }
};

template <typename T>
inline void relu_forward(Tensor<T>& x) {
    for (T& v : x.v) v = v > T(0) ? v : T(0);
}

template <typename T>
inline void relu_backward(const Tensor<T>& activated, Tensor<T>& grad) {
    for (std::size_t i = 0; i < grad.v.size(); ++i) {
        if (activated.v[i] <= T(0)) grad.v[i] = T(0);
    }
}

template <typename T>
inline Tensor<T> maxpool_forward(const Tensor<T>& x, std::vector<int>& argmax) {
    Tensor<T> y(x.ch, x.h / 2, x.w / 2);
    argmax.resize(y.size());
    std::size_t o = 0;
    for (int c = 0; c < x.ch; ++c) {
        for (int y0 = 0; y0 < y.h; ++y0) {
            for (int x0 = 0; x0 < y.w; ++x0, ++o) {
                int best = ((c * x.h + 2 * y0) * x.w) + 2 * x0;
                T bv = x.v[best];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = ((c * x.h + 2 * y0 + dy) * x.w) + 2 * x0 + dx;
                        if (x.v[idx] > bv) {
                            bv = x.v[idx];
                            best = idx;
                        }
                    }
                }
                y.v[o] = bv;
                argmax[o] = best;
            }
        }
    }
    return y;
}

template <typename T>
inline Tensor<T> maxpool_backward(const Tensor<T>& dy, const std::vector<int>& argmax, int in_h,
                                  int in_w) {
    Tensor<T> dx(dy.ch, in_h, in_w);
    for (std::size_t i = 0; i < dy.v.size(); ++i) dx.v[argmax[i]] += dy.v[i];
    return dx;
}

template <typename T>
inline Tensor<T> upsample2_forward(const Tensor<T>& x) {
    Tensor<T> y(x.ch, x.h * 2, x.w * 2);
    for (int c = 0; c < x.ch; ++c) {
        for (int y0 = 0; y0 < y.h; ++y0) {
            for (int x0 = 0; x0 < y.w; ++x0) y.at(c, y0, x0) = x.at(c, y0 / 2, x0 / 2);
        }
    }
    return y;
}

template <typename T>
inline Tensor<T> upsample2_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.ch, dy.h / 2, dy.w / 2);
    for (int c = 0; c < dy.ch; ++c) {
        for (int y0 = 0; y0 < dy.h; ++y0) {
            for (int x0 = 0; x0 < dy.w; ++x0) dx.at(c, y0 / 2, x0 / 2) += dy.at(c, y0, x0);
        }
    }
    return dx;
}

// Encoder: [conv -> relu -> pool] per level. Decoder mirrors it:
// [upsample -> conv -> relu] per level, except the last conv maps back to one
// channel and stays linear.
template <typename T>
struct AutoencoderNet {
    std::vector<Conv2d<T>> enc;
    std::vector<Conv2d<T>> dec;

    void init(const std::vector<int>& filters, std::uint64_t master_seed) {
        enc.clear();
        dec.clear();
        int in = 1;
        for (std::size_t i = 0; i < filters.size(); ++i) {
            SplitMix64 rng(derive_seed(master_seed, "init_enc", i));
            Conv2d<T> c;
            c.init(in, filters[i], rng);
            enc.push_back(std::move(c));
            in = filters[i];
        }
        for (std::size_t i = filters.size(); i-- > 0;) {
            SplitMix64 rng(derive_seed(master_seed, "init_dec", i));
            const int out = i == 0 ? 1 : filters[i - 1];
            Conv2d<T> c;
            c.init(filters[i], out, rng);
            dec.push_back(std::move(c));
        }
    }

    struct Cache {
        std::vector<Tensor<T>> enc_in;       // conv inputs per encoder level
        std::vector<Tensor<T>> enc_act;      // post-relu, pre-pool
        std::vector<std::vector<int>> argmax;
        std::vector<Tensor<T>> dec_in;       // conv inputs per decoder level (post-upsample)
        std::vector<Tensor<T>> dec_act;      // post-conv (post-relu except last)
    };

    Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
        Tensor<T> cur = x;
        Cache local;
        Cache& c = cache ? *cache : local;
        c.enc_in.clear();
        c.enc_act.clear();
        c.argmax.clear();
        c.dec_in.clear();
        c.dec_act.clear();
        for (const auto& layer : enc) {
            c.enc_in.push_back(cur);
            Tensor<T> a = layer.forward(cur);
            relu_forward(a);
            c.enc_act.push_back(a);
            c.argmax.emplace_back();
            cur = maxpool_forward(a, c.argmax.back());
        }
        for (std::size_t i = 0; i < dec.size(); ++i) {
            cur = upsample2_forward(cur);
            c.dec_in.push_back(cur);
            cur = dec[i].forward(cur);
            if (i + 1 < dec.size()) relu_forward(cur);
            c.dec_act.push_back(cur);
        }
        return cur;
    }

    struct Grads {
        std::vector<std::vector<T>> enc_w, enc_b, dec_w, dec_b;

        void init_like(const AutoencoderNet& net) {
            enc_w.clear();
            enc_b.clear();
            dec_w.clear();
            dec_b.clear();
            for (const auto& l : net.enc) {
                enc_w.emplace_back(l.w.size(), T(0));
                enc_b.emplace_back(l.b.size(), T(0));
            }
            for (const auto& l : net.dec) {
                dec_w.emplace_back(l.w.size(), T(0));
                dec_b.emplace_back(l.b.size(), T(0));
            }
        }
    };

    // Backpropagates dL/d(output); parameter gradients accumulate into g.
    void backward(const Cache& c, Tensor<T> grad, Grads& g) const {
        for (std::size_t i = dec.size(); i-- > 0;) {
            if (i + 1 < dec.size()) relu_backward(c.dec_act[i], grad);
            grad = dec[i].backward(c.dec_in[i], grad, g.dec_w[i], g.dec_b[i]);
            grad = upsample2_backward(grad);
        }
        for (std::size_t i = enc.size(); i-- > 0;) {
            grad = maxpool_backward(grad, c.argmax[i], c.enc_act[i].h, c.enc_act[i].w);
            relu_backward(c.enc_act[i], grad);
            grad = enc[i].backward(c.enc_in[i], grad, g.enc_w[i], g.enc_b[i]);
        }
    }
};

// Evenly spaced training patch offsets; the full hop grid when count == 0.
inline std::vector<std::size_t> train_patch_offsets(std::size_t frames, int patch_frames, int hop,
                                                    int count) {
    if (frames < static_cast<std::size_t>(patch_frames)) {
        throw DataError("clip has fewer frames than one patch");
    }
    const std::size_t last = frames - patch_frames;
    std::vector<std::size_t> offsets;
    if (count <= 0) {
        for (std::size_t o = 0;; o += hop) {
            offsets.push_back(o);
            if (o >= last) break;
            if (o + hop > last) {
                offsets.push_back(last);
                break;
            }
        }
    } else if (count == 1 || last == 0) {
        offsets.assign(static_cast<std::size_t>(count), 0);
        for (auto& o : offsets) o = last / 2;
    } else {
        for (int k = 0; k < count; ++k) {
            offsets.push_back(static_cast<std::size_t>(
                std::llround(static_cast<double>(k) * static_cast<double>(last) / (count - 1))));
        }
    }
    return offsets;
}

// Non-overlapping scoring grid plus one right-aligned patch over any tail.
inline std::vector<std::size_t> score_patch_offsets(std::size_t frames, int patch_frames) {
    if (frames < static_cast<std::size_t>(patch_frames)) {
        throw DataError("clip has fewer frames than one patch");
    }
    std::vector<std::size_t> offsets;
    std::size_t o = 0;
    for (; o + patch_frames <= frames; o += patch_frames) offsets.push_back(o);
    if (o < frames) offsets.push_back(frames - patch_frames);
    return offsets;
}

}  // namespace ae_detail

struct TrainedAutoencoder {
    AEConfig config;
    ae_detail::AutoencoderNet<float> net;
    std::vector<double> mel_mean;  // per-mel-bin standardization, from training data
    std::vector<double> mel_std;
    std::vector<double> loss_history;  // per-epoch mean patch loss
};

namespace ae_detail {

inline Tensor<float> standardized_patch(const FeatureMatrix& f, std::size_t offset,
                                        const AEConfig& cfg, const std::vector<double>& mean,
                                        const std::vector<double>& stdev) {
    Tensor<float> x(1, cfg.patch_mels, cfg.patch_frames);
    for (int m = 0; m < cfg.patch_mels; ++m) {
        for (int t = 0; t < cfg.patch_frames; ++t) {
            const double v = f.at(offset + t, m);
            x.at(0, m, t) = static_cast<float>((v - mean[m]) / stdev[m]);
        }
    }
    return x;
}

struct AdamState {
    std::vector<double> m, v;
    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

inline void adam_step(std::vector<float>& param, const std::vector<float>& grad, AdamState& st,
                      const AEConfig& cfg, long step) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        param[i] -= static_cast<float>(cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon));
    }
}

}  // namespace ae_detail

inline TrainedAutoencoder fit_autoencoder(const std::vector<FeatureMatrix>& features,
                                          const AEConfig& config) {
    using namespace ae_detail;
    config.validate();
    if (features.empty()) throw DataError("fit_autoencoder: empty training set");

    TrainedAutoencoder model;
    model.config = config;

    const auto n_mels = static_cast<std::size_t>(config.patch_mels);
    for (const auto& f : features) {
        if (f.n_mels != n_mels) throw DataError("fit_autoencoder: feature width mismatch");
    }

    // Per-mel-bin standardization statistics over all training frames.
    model.mel_mean.assign(n_mels, 0.0);
    model.mel_std.assign(n_mels, 0.0);
    std::size_t total_frames = 0;
    for (const auto& f : features) {
        total_frames += f.frames;
        for (std::size_t t = 0; t < f.frames; ++t) {
            for (std::size_t m = 0; m < n_mels; ++m) model.mel_mean[m] += f.at(t, m);
        }
    }
    for (double& v : model.mel_mean) v /= static_cast<double>(total_frames);
    for (const auto& f : features) {
        for (std::size_t t = 0; t < f.frames; ++t) {
            for (std::size_t m = 0; m < n_mels; ++m) {
                const double d = f.at(t, m) - model.mel_mean[m];
                model.mel_std[m] += d * d;
            }
        }
    }
    for (double& v : model.mel_std) {
        v = std::sqrt(v / static_cast<double>(total_frames));
        if (v < 1e-8) v = 1.0;
    }

    std::vector<Tensor<float>> patches;
    for (const auto& f : features) {
        for (std::size_t o : train_patch_offsets(f.frames, config.patch_frames,
                                                 config.train_patch_hop,
                                                 config.train_patches_per_clip)) {
            patches.push_back(standardized_patch(f, o, config, model.mel_mean, model.mel_std));
        }
    }

    model.net.init(config.encoder_filters, config.master_seed);
    auto& net = model.net;

    std::vector<AdamState> st_enc_w(net.enc.size()), st_enc_b(net.enc.size());
    std::vector<AdamState> st_dec_w(net.dec.size()), st_dec_b(net.dec.size());
    for (std::size_t i = 0; i < net.enc.size(); ++i) {
        st_enc_w[i].init(net.enc[i].w.size());
        st_enc_b[i].init(net.enc[i].b.size());
    }
    for (std::size_t i = 0; i < net.dec.size(); ++i) {
        st_dec_w[i].init(net.dec[i].w.size());
        st_dec_b[i].init(net.dec[i].b.size());
    }

    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0);
    const double inv_elems = 1.0 / (static_cast<double>(config.patch_mels) * config.patch_frames);
    long adam_step_count = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        SplitMix64 shuffle_rng(derive_seed(config.master_seed, "shuffle", epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        double epoch_loss = 0.0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += config.batch_size) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + config.batch_size);
            const auto batch_n = static_cast<double>(batch_end - batch_start);

            AutoencoderNet<float>::Grads grads;
            grads.init_like(net);
            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const Tensor<float>& x = patches[order[bi]];
                AutoencoderNet<float>::Cache cache;
                Tensor<float> y = net.forward(x, &cache);
                Tensor<float> dy(1, y.h, y.w);
                double loss = 0.0;
                for (std::size_t i = 0; i < y.v.size(); ++i) {
                    const double d = static_cast<double>(y.v[i]) - x.v[i];
                    loss += d * d;
                    dy.v[i] = static_cast<float>(2.0 * d * inv_elems / batch_n);
                }
                epoch_loss += loss * inv_elems;
                net.backward(cache, std::move(dy), grads);
            }

            ++adam_step_count;
            for (std::size_t i = 0; i < net.enc.size(); ++i) {
                adam_step(net.enc[i].w, grads.enc_w[i], st_enc_w[i], config, adam_step_count);
                adam_step(net.enc[i].b, grads.enc_b[i], st_enc_b[i], config, adam_step_count);
            }
            for (std::size_t i = 0; i < net.dec.size(); ++i) {
                adam_step(net.dec[i].w, grads.dec_w[i], st_dec_w[i], config, adam_step_count);
                adam_step(net.dec[i].b, grads.dec_b[i], st_dec_b[i], config, adam_step_count);
            }
        }
        epoch_loss /= static_cast<double>(patches.size());
        if (!std::isfinite(epoch_loss)) throw DataError("autoencoder training diverged");
        model.loss_history.push_back(epoch_loss);
    }
    return model;
}

// Mean squared reconstruction error in standardized feature space, averaged
// over a non-overlapping patch grid (plus a right-aligned tail patch).
inline double score_mse(const TrainedAutoencoder& model, const FeatureMatrix& features) {
    using namespace ae_detail;
    if (features.n_mels != static_cast<std::size_t>(model.config.patch_mels)) {
        throw DataError("score_mse: feature width does not match the model");
    }
    const auto offsets = score_patch_offsets(features.frames, model.config.patch_frames);
    const double inv_elems =
        1.0 / (static_cast<double>(model.config.patch_mels) * model.config.patch_frames);
    double total = 0.0;
    for (std::size_t o : offsets) {
        const Tensor<float> x =
            standardized_patch(features, o, model.config, model.mel_mean, model.mel_std);
        const Tensor<float> y = model.net.forward(x, nullptr);
        double loss = 0.0;
        for (std::size_t i = 0; i < y.v.size(); ++i) {
            const double d = static_cast<double>(y.v[i]) - x.v[i];
            loss += d * d;
        }
        total += loss * inv_elems;
    }
    return total / static_cast<double>(offsets.size());
}

}  // namespace anomarank
