#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "anomarank/autoencoder.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/model_io.hpp"
#include "anomarank/procgen.hpp"
#include "anomarank/prng.hpp"

using namespace anomarank;

namespace {

FeatureMatrix synth_features(std::size_t frames, std::uint64_t seed) {
    SplitMix64 rng(seed);
    FeatureMatrix f;
    f.frames = frames;
    f.n_mels = 128;
    f.values.resize(frames * 128);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t m = 0; m < 128; ++m) {
            const double shape = std::sin(0.07 * m) + 0.3 * std::cos(0.2 * t);
            f.at(t, m) = static_cast<float>(shape + 0.05 * rng.uniform(-1.0, 1.0));
        }
    }
    return f;
}

FeatureMatrix constant_features(std::size_t frames, float value) {
    FeatureMatrix f;
    f.frames = frames;
    f.n_mels = 128;
    f.values.assign(frames * 128, value);
    return f;
}

std::vector<float> flatten_weights(const TrainedAutoencoder& model) {
    std::vector<float> all;
    for (const auto& l : model.net.enc) {
        all.insert(all.end(), l.w.begin(), l.w.end());
        all.insert(all.end(), l.b.begin(), l.b.end());
    }
    for (const auto& l : model.net.dec) {
        all.insert(all.end(), l.w.begin(), l.w.end());
        all.insert(all.end(), l.b.begin(), l.b.end());
    }
    return all;
}

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/anomarank_test_" + name) {}
    ~TempPath() {
        std::remove(path.c_str());
        std::remove((path + ".json").c_str());
    }
};

}  // namespace

TEST_CASE("training is bit-deterministic under the master seed", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(314159);
    cfg.epochs = 2;
    const std::vector<FeatureMatrix> clips = {synth_features(64, 1), synth_features(64, 2)};

    TrainedAutoencoder a = fit_autoencoder(clips, cfg);
    TrainedAutoencoder b = fit_autoencoder(clips, cfg);
    CHECK(flatten_weights(a) == flatten_weights(b));
    CHECK(a.loss_history == b.loss_history);

    cfg.master_seed = 217;
    TrainedAutoencoder c = fit_autoencoder(clips, cfg);
    CHECK(flatten_weights(a) != flatten_weights(c));
}

TEST_CASE("analytic gradients match finite differences", "[autoencoder]") {
    using ae_detail::AutoencoderNet;
    using ae_detail::Tensor;

    AutoencoderNet<double> net;
    net.init({2, 2}, 8);

    Tensor<double> x(1, 8, 8);
    SplitMix64 rng(71);
    for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
    const double inv_elems = 1.0 / static_cast<double>(x.v.size());

    auto loss_of = [&]() {
        Tensor<double> y = net.forward(x, nullptr);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.v.size(); ++i) {
            const double d = y.v[i] - x.v[i];
            acc += d * d;
        }
        return acc * inv_elems;
    };

    AutoencoderNet<double>::Cache cache;
    Tensor<double> y = net.forward(x, &cache);
    Tensor<double> dy(1, 8, 8);
    for (std::size_t i = 0; i < y.v.size(); ++i) dy.v[i] = 2.0 * (y.v[i] - x.v[i]) * inv_elems;
    AutoencoderNet<double>::Grads grads;
    grads.init_like(net);
    net.backward(cache, dy, grads);

    const double h = 1e-5;
    auto check_param = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = loss_of();
        param = saved - h;
        const double down = loss_of();
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
        REQUIRE(rel <= 1e-4);
    };

    for (std::size_t l = 0; l < net.enc.size(); ++l) {
        for (std::size_t i = 0; i < net.enc[l].w.size(); ++i) {
            check_param(net.enc[l].w[i], grads.enc_w[l][i]);
        }
        for (std::size_t i = 0; i < net.enc[l].b.size(); ++i) {
            check_param(net.enc[l].b[i], grads.enc_b[l][i]);
        }
    }
    for (std::size_t l = 0; l < net.dec.size(); ++l) {
        for (std::size_t i = 0; i < net.dec[l].w.size(); ++i) {
            check_param(net.dec[l].w[i], grads.dec_w[l][i]);
        }
        for (std::size_t i = 0; i < net.dec[l].b.size(); ++i) {
            check_param(net.dec[l].b[i], grads.dec_b[l][i]);
        }
    }
}

TEST_CASE("decoder restores the input shape exactly", "[autoencoder]") {
    using ae_detail::AutoencoderNet;
    using ae_detail::Tensor;

    AutoencoderNet<float> big;
    big.init({16, 8, 4}, 1);
    Tensor<float> patch(1, 128, 32);
    Tensor<float> out = big.forward(patch, nullptr);
    CHECK(out.ch == 1);
    CHECK(out.h == 128);
    CHECK(out.w == 32);

    AutoencoderNet<float> mini;
    mini.init({2, 2}, 1);
    Tensor<float> tiny(1, 8, 8);
    Tensor<float> tout = mini.forward(tiny, nullptr);
    CHECK(tout.h == 8);
    CHECK(tout.w == 8);
}

TEST_CASE("constant features train to near-zero loss", "[autoencoder]") {
    AEConfig cfg;
    cfg.encoder_filters = {4, 2};
    cfg.epochs = 100;
    cfg.train_patches_per_clip = 2;
    cfg.master_seed = 5;
    const std::vector<FeatureMatrix> clips = {constant_features(32, 3.5f),
                                              constant_features(32, 3.5f)};
    TrainedAutoencoder model = fit_autoencoder(clips, cfg);
    REQUIRE(model.loss_history.size() == 100);
    CHECK(model.loss_history.back() < 1e-6);
}

TEST_CASE("training reduces the loss on structured features", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(99);
    std::vector<FeatureMatrix> clips;
    for (int i = 0; i < 6; ++i) clips.push_back(synth_features(64, 100 + i));
    TrainedAutoencoder model = fit_autoencoder(clips, cfg);
    REQUIRE(model.loss_history.size() == static_cast<std::size_t>(cfg.epochs));
    for (double loss : model.loss_history) REQUIRE(std::isfinite(loss));
    CHECK(model.loss_history.back() < model.loss_history.front());
}

TEST_CASE("late epochs do not regress", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(4);
    cfg.epochs = 30;
    std::vector<FeatureMatrix> clips;
    for (int i = 0; i < 6; ++i) clips.push_back(synth_features(64, 300 + i));
    TrainedAutoencoder model = fit_autoencoder(clips, cfg);
    for (std::size_t e = 10; e < model.loss_history.size(); ++e) {
        CHECK(model.loss_history[e] <= model.loss_history[e - 1] * (1.0 + 1e-6));
    }
}

TEST_CASE("a zero network scores constant clips at exactly zero", "[autoencoder]") {
    TrainedAutoencoder model;
    model.config = fast_ae_config(0);
    model.net.init(model.config.encoder_filters, 0);
    for (auto& l : model.net.enc) {
        std::fill(l.w.begin(), l.w.end(), 0.0f);
        std::fill(l.b.begin(), l.b.end(), 0.0f);
    }
    for (auto& l : model.net.dec) {
        std::fill(l.w.begin(), l.w.end(), 0.0f);
        std::fill(l.b.begin(), l.b.end(), 0.0f);
    }
    model.mel_mean.assign(128, 2.5);
    model.mel_std.assign(128, 1.0);
    CHECK(score_mse(model, constant_features(32, 2.5f)) == 0.0);
}

TEST_CASE("scores are concatenation-invariant", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(11);
    cfg.epochs = 2;
    const std::vector<FeatureMatrix> clips = {synth_features(64, 21), synth_features(64, 22)};
    TrainedAutoencoder model = fit_autoencoder(clips, cfg);

    FeatureMatrix once = synth_features(32, 77);
    FeatureMatrix twice = once;
    twice.frames = 64;
    twice.values.insert(twice.values.end(), once.values.begin(), once.values.end());

    CHECK(score_mse(model, twice) == score_mse(model, once));
}

TEST_CASE("added broadband noise raises the reconstruction score", "[autoencoder]") {
    const auto& bearing = profile_for("bearing");
    std::vector<AudioClip> clips;
    std::vector<FeatureMatrix> features;
    for (int i = 0; i < 4; ++i) {
        clips.push_back(synth_normal(bearing, 4.0, 16000, 9000 + i));
        features.push_back(extract_features(clips.back()));
    }
    TrainedAutoencoder model = fit_autoencoder(features, fast_ae_config(17));

    EffectSpec noise;
    noise.kind = EffectKind::broadband_noise;
    noise.params = {{"snr_db", 10.0}};
    noise.seed = 1;
    noise.start_time = 0.0;
    const AudioClip noisy = apply_effect(clips[0], noise);

    CHECK(score_mse(model, features[0]) <= score_mse(model, extract_features(noisy)));
}

TEST_CASE("autoencoder rejects bad input", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(1);
    CHECK_THROWS_AS(fit_autoencoder({}, cfg), DataError);
    CHECK_THROWS_AS(fit_autoencoder({synth_features(16, 1)}, cfg), DataError);

    AEConfig bad = cfg;
    bad.encoder_filters = {};
    CHECK_THROWS_AS(fit_autoencoder({synth_features(64, 1)}, bad), ConfigError);
    bad = cfg;
    bad.kernel = 5;
    CHECK_THROWS_AS(fit_autoencoder({synth_features(64, 1)}, bad), ConfigError);
    bad = cfg;
    bad.patch_frames = 30;  // not divisible by the pooling stride
    CHECK_THROWS_AS(fit_autoencoder({synth_features(64, 1)}, bad), ConfigError);

    cfg.epochs = 1;
    TrainedAutoencoder model = fit_autoencoder({synth_features(64, 1)}, cfg);
    FeatureMatrix narrow;
    narrow.frames = 64;
    narrow.n_mels = 64;
    narrow.values.assign(64 * 64, 0.0f);
    CHECK_THROWS_AS(score_mse(model, narrow), DataError);
    CHECK_THROWS_AS(score_mse(model, synth_features(16, 2)), DataError);
}

TEST_CASE("autoencoders round-trip through disk bit-exactly", "[autoencoder]") {
    AEConfig cfg = fast_ae_config(23);
    cfg.epochs = 3;
    const std::vector<FeatureMatrix> clips = {synth_features(64, 31), synth_features(64, 32)};
    TrainedAutoencoder model = fit_autoencoder(clips, cfg);

    TempPath tmp("autoencoder.anrk");
    save_autoencoder(model, tmp.path);
    TrainedAutoencoder loaded = load_autoencoder(tmp.path);

    CHECK(loaded.config.encoder_filters == model.config.encoder_filters);
    CHECK(loaded.config.master_seed == model.config.master_seed);
    CHECK(loaded.loss_history == model.loss_history);
    CHECK(flatten_weights(loaded) == flatten_weights(model));

    const FeatureMatrix probe = synth_features(48, 41);
    CHECK(score_mse(loaded, probe) == score_mse(model, probe));

    CHECK_THROWS_AS(load_autoencoder("/tmp/anomarank_no_such_model.anrk"), DataError);
    TempPath junk("not_a_model.anrk");
    {
        std::ofstream out(junk.path, std::ios::binary);
        out << "this is not a model";
    }
    CHECK_THROWS_AS(load_autoencoder(junk.path), DataError);
}
