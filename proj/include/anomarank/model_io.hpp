#pragma once
// Model persistence: a little-endian binary container (magic, version, JSON
// config block, named tensor table) plus a JSON sidecar carrying the config
// and training history. Weights are stored raw, so reloaded models score
// bit-identically.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomarank/autoencoder.hpp"
#include "anomarank/common.hpp"
#include "anomarank/gaussian.hpp"

namespace anomarank {

namespace model_io_detail {

constexpr char kMagic[4] = {'A', 'N', 'R', 'K'};
constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> f32;
    std::vector<double> f64;
    bool is_f64 = false;
};

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("model file is truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_container(const std::string& path, const nlohmann::json& config,
                            const std::map<std::string, NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    const std::string cfg = config.dump();
    write_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        out.put(t.is_f64 ? 1 : 0);
        write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (std::uint32_t d : t.dims) write_u32(out, d);
        if (t.is_f64) {
            out.write(reinterpret_cast<const char*>(t.f64.data()),
                      static_cast<std::streamsize>(t.f64.size() * sizeof(double)));
        } else {
            out.write(reinterpret_cast<const char*>(t.f32.data()),
                      static_cast<std::streamsize>(t.f32.size() * sizeof(float)));
        }
    }
    if (!out) throw DataError("failed writing model file '" + path + "'");
}

inline std::pair<nlohmann::json, std::map<std::string, NamedTensor>> read_container(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("'" + path + "' is not a model file (bad magic)");
    }
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw DataError("unsupported model file version " + std::to_string(version));
    }
    const std::uint32_t cfg_len = read_u32(in);
    std::string cfg(cfg_len, '\0');
    in.read(cfg.data(), cfg_len);
    if (!in) throw DataError("model file is truncated");
    nlohmann::json config = nlohmann::json::parse(cfg, nullptr, false);
    if (config.is_discarded()) throw DataError("model config block is not valid JSON");

    std::map<std::string, NamedTensor> tensors;
    const std::uint32_t n_tensors = read_u32(in);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        NamedTensor t;
        t.is_f64 = in.get() == 1;
        const std::uint32_t ndims = read_u32(in);
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < ndims; ++d) {
            t.dims.push_back(read_u32(in));
            count *= t.dims.back();
        }
        if (t.is_f64) {
            t.f64.resize(count);
            in.read(reinterpret_cast<char*>(t.f64.data()),
                    static_cast<std::streamsize>(count * sizeof(double)));
        } else {
            t.f32.resize(count);
            in.read(reinterpret_cast<char*>(t.f32.data()),
                    static_cast<std::streamsize>(count * sizeof(float)));
        }
        if (!in) throw DataError("model file is truncated");
        tensors.emplace(std::move(name), std::move(t));
    }
    return {std::move(config), std::move(tensors)};
}

inline const NamedTensor& need_tensor(const std::map<std::string, NamedTensor>& tensors,
                                      const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("model file is missing tensor '" + name + "'");
    return it->second;
}

inline nlohmann::json ae_config_to_json(const AEConfig& c) {
    return {{"encoder_filters", c.encoder_filters},
            {"kernel", c.kernel},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_epsilon", c.adam_epsilon},
            {"patch_mels", c.patch_mels},
            {"patch_frames", c.patch_frames},
            {"train_patch_hop", c.train_patch_hop},
            {"train_patches_per_clip", c.train_patches_per_clip},
            {"master_seed", c.master_seed}};
}

inline AEConfig ae_config_from_json(const nlohmann::json& j) {
    AEConfig c;
    c.encoder_filters = j.at("encoder_filters").get<std::vector<int>>();
    c.kernel = j.at("kernel").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_epsilon = j.at("adam_epsilon").get<double>();
    c.patch_mels = j.at("patch_mels").get<int>();
    c.patch_frames = j.at("patch_frames").get<int>();
    c.train_patch_hop = j.at("train_patch_hop").get<int>();
    c.train_patches_per_clip = j.at("train_patches_per_clip").get<int>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    return c;
}

}  // namespace model_io_detail

inline void save_autoencoder(const TrainedAutoencoder& model, const std::string& path) {
    using namespace model_io_detail;
    nlohmann::json config = {{"kind", "autoencoder"},
                             {"config", ae_config_to_json(model.config)}};
    std::map<std::string, NamedTensor> tensors;
    auto put_f64 = [&](const std::string& name, const std::vector<double>& v) {
        NamedTensor t;
        t.is_f64 = true;
        t.dims = {static_cast<std::uint32_t>(v.size())};
        t.f64 = v;
        tensors.emplace(name, std::move(t));
    };
    put_f64("mel_mean", model.mel_mean);
    put_f64("mel_std", model.mel_std);
    auto put_conv = [&](const std::string& prefix, const ae_detail::Conv2d<float>& layer) {
        NamedTensor w;
        w.dims = {static_cast<std::uint32_t>(layer.out_ch), static_cast<std::uint32_t>(layer.in_ch),
                  3, 3};
        w.f32 = layer.w;
        tensors.emplace(prefix + ".w", std::move(w));
        NamedTensor b;
        b.dims = {static_cast<std::uint32_t>(layer.b.size())};
        b.f32 = layer.b;
        tensors.emplace(prefix + ".b", std::move(b));
    };
    for (std::size_t i = 0; i < model.net.enc.size(); ++i) {
        put_conv("enc" + std::to_string(i), model.net.enc[i]);
    }
    for (std::size_t i = 0; i < model.net.dec.size(); ++i) {
        put_conv("dec" + std::to_string(i), model.net.dec[i]);
    }
    write_container(path, config, tensors);

    nlohmann::json sidecar = {{"kind", "autoencoder"},
                              {"config", ae_config_to_json(model.config)},
                              {"loss_history", model.loss_history}};
    std::ofstream side(path + ".json");
    if (!side) throw DataError("cannot open '" + path + ".json' for writing");
    side << sidecar.dump(2) << "\n";
}

inline TrainedAutoencoder load_autoencoder(const std::string& path) {
    using namespace model_io_detail;
    auto [config, tensors] = read_container(path);
    if (config.value("kind", "") != "autoencoder") {
        throw DataError("'" + path + "' does not contain an autoencoder");
    }
    TrainedAutoencoder model;
    model.config = ae_config_from_json(config.at("config"));
    model.mel_mean = need_tensor(tensors, "mel_mean").f64;
    model.mel_std = need_tensor(tensors, "mel_std").f64;

    model.net.init(model.config.encoder_filters, model.config.master_seed);
    auto load_conv = [&](const std::string& prefix, ae_detail::Conv2d<float>& layer) {
        const NamedTensor& w = need_tensor(tensors, prefix + ".w");
        const NamedTensor& b = need_tensor(tensors, prefix + ".b");
        if (w.f32.size() != layer.w.size() || b.f32.size() != layer.b.size()) {
            throw DataError("tensor '" + prefix + "' has unexpected shape");
        }
        layer.w = w.f32;
        layer.b = b.f32;
    };
    for (std::size_t i = 0; i < model.net.enc.size(); ++i) {
        load_conv("enc" + std::to_string(i), model.net.enc[i]);
    }
    for (std::size_t i = 0; i < model.net.dec.size(); ++i) {
        load_conv("dec" + std::to_string(i), model.net.dec[i]);
    }

    std::ifstream side(path + ".json");
    if (side) {
        nlohmann::json sidecar = nlohmann::json::parse(side, nullptr, false);
        if (!sidecar.is_discarded() && sidecar.contains("loss_history")) {
            model.loss_history = sidecar["loss_history"].get<std::vector<double>>();
        }
    }
    return model;
}

inline void save_gaussian(const GaussianModel& model, const std::string& path) {
    using namespace model_io_detail;
    nlohmann::json config = {{"kind", "gaussian"},
                             {"shrinkage", model.shrinkage},
                             {"epsilon", model.epsilon}};
    std::map<std::string, NamedTensor> tensors;
    const auto dim = static_cast<std::uint32_t>(model.dim());
    auto put = [&](const std::string& name, const std::vector<double>& v,
                   std::vector<std::uint32_t> dims) {
        NamedTensor t;
        t.is_f64 = true;
        t.dims = std::move(dims);
        t.f64 = v;
        tensors.emplace(name, std::move(t));
    };
    put("mean", model.mean, {dim});
    put("covariance", model.covariance, {dim, dim});
    put("chol", model.chol, {dim, dim});
    write_container(path, config, tensors);

    std::ofstream side(path + ".json");
    if (!side) throw DataError("cannot open '" + path + ".json' for writing");
    side << config.dump(2) << "\n";
}

inline GaussianModel load_gaussian(const std::string& path) {
    using namespace model_io_detail;
    auto [config, tensors] = read_container(path);
    if (config.value("kind", "") != "gaussian") {
        throw DataError("'" + path + "' does not contain a gaussian model");
    }
    GaussianModel model;
    model.shrinkage = config.at("shrinkage").get<double>();
    model.epsilon = config.at("epsilon").get<double>();
    model.mean = need_tensor(tensors, "mean").f64;
    model.covariance = need_tensor(tensors, "covariance").f64;
    model.chol = need_tensor(tensors, "chol").f64;
    if (model.covariance.size() != model.mean.size() * model.mean.size() ||
        model.chol.size() != model.covariance.size()) {
        throw DataError("gaussian model tensors have inconsistent shapes");
    }
    return model;
}

}  // namespace anomarank
