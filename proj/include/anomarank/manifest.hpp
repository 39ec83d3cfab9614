#pragma once
// Run configuration and the dataset manifest. The manifest is the single
// source of truth for clip labels and provenance: downstream stages consume
// manifest rows and never re-derive labels from file paths.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomarank/autoencoder.hpp"
#include "anomarank/common.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/procgen.hpp"
#include "anomarank/selector.hpp"

namespace anomarank {

// Master seed for the bundled desk-scale experiment configs.
inline constexpr std::uint64_t kBundledMasterSeed = 73;

enum class ClipRole { train_normal, test_normal, test_synthetic_anomaly, test_real_anomaly };

inline const char* to_string(ClipRole role) {
    switch (role) {
        case ClipRole::train_normal: return "train_normal";
        case ClipRole::test_normal: return "test_normal";
        case ClipRole::test_synthetic_anomaly: return "test_synthetic_anomaly";
        case ClipRole::test_real_anomaly: return "test_real_anomaly";
    }
    throw ConfigError("invalid ClipRole value");
}

inline ClipRole clip_role_from_string(const std::string& name) {
    if (name == "train_normal") return ClipRole::train_normal;
    if (name == "test_normal") return ClipRole::test_normal;
    if (name == "test_synthetic_anomaly") return ClipRole::test_synthetic_anomaly;
    if (name == "test_real_anomaly") return ClipRole::test_real_anomaly;
    throw DataError("unknown clip role '" + name + "'");
}

struct RunConfig {
    std::string dataset_root = "data";
    std::string output_dir = "out";
    std::vector<std::string> machines = {"bearing", "fan", "gearbox", "slide_rail", "valve"};
    // Desk-scale counts; the paper-scale preset uses 900/50/50/50.
    int train_normals_per_machine = 100;
    int test_normals_per_machine = 20;
    int synthetic_per_machine = 20;
    int surrogate_per_machine = 20;
    double duration_s = 10.0;
    int sample_rate = 16000;
    std::vector<double> surrogate_severities = default_severities();
    SelectorConfig selector;
    std::string ae_preset = "fast";  // "fast" or "paper"
    double gaussian_shrinkage = 0.1;
    std::uint64_t master_seed = kBundledMasterSeed;

    void validate() const {
        if (dataset_root.empty()) throw ConfigError("config: dataset_root is empty");
        if (output_dir.empty()) throw ConfigError("config: output_dir is empty");
        if (machines.empty()) throw ConfigError("config: machine list is empty");
        for (const std::string& machine : machines) profile_for(machine);
        if (train_normals_per_machine < 1 || test_normals_per_machine < 1 ||
            synthetic_per_machine < 1 || surrogate_per_machine < 1) {
            throw ConfigError("config: per-machine clip counts must be at least 1");
        }
        if (duration_s <= 0.0) throw ConfigError("config: duration must be positive");
        if (sample_rate <= 0) throw ConfigError("config: sample rate must be positive");
        if (surrogate_severities.empty()) throw ConfigError("config: no surrogate severities");
        for (double s : surrogate_severities) {
            if (!(s > 0.0) || s > 1.0) throw ConfigError("config: severities must be in (0, 1]");
        }
        if (ae_preset != "fast" && ae_preset != "paper") {
            throw ConfigError("config: ae_preset must be 'fast' or 'paper'");
        }
        if (!(gaussian_shrinkage >= 0.0) || gaussian_shrinkage > 1.0) {
            throw ConfigError("config: gaussian_shrinkage must be in [0, 1]");
        }
        selector.validate();
    }

    AEConfig ae_config() const {
        AEConfig cfg;
        if (ae_preset == "fast") cfg = fast_ae_config();
        cfg.master_seed = derive_seed(master_seed, "training");
        return cfg;
    }
};

inline void apply_paper_scale(RunConfig& config) {
    config.train_normals_per_machine = 900;
    config.test_normals_per_machine = 50;
    config.synthetic_per_machine = 50;
    config.surrogate_per_machine = 50;
    config.ae_preset = "paper";
}

inline nlohmann::json selector_config_to_json(const SelectorConfig& selector) {
    nlohmann::json j = {{"strategy", to_string(selector.strategy)},
                        {"endpoint", selector.endpoint},
                        {"model", selector.model},
                        {"api_key_env", selector.api_key_env},
                        {"replay_fixture", selector.replay_fixture}};
    nlohmann::json table = nlohmann::json::array();
    for (const KeywordRule& rule : selector.keyword_table) {
        table.push_back({{"keyword", rule.keyword}, {"kind", to_string(rule.kind)}});
    }
    j["keyword_table"] = table;
    return j;
}

inline SelectorConfig selector_config_from_json(const nlohmann::json& j) {
    SelectorConfig selector;
    if (j.contains("strategy")) {
        selector.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    }
    if (j.contains("endpoint")) selector.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model")) selector.model = j.at("model").get<std::string>();
    if (j.contains("api_key_env")) selector.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("replay_fixture")) {
        selector.replay_fixture = j.at("replay_fixture").get<std::string>();
    }
    if (j.contains("keyword_table")) {
        selector.keyword_table.clear();
        for (const auto& entry : j.at("keyword_table")) {
            selector.keyword_table.push_back(
                {entry.at("keyword").get<std::string>(),
                 effect_kind_from_string(entry.at("kind").get<std::string>())});
        }
    }
    return selector;
}

inline nlohmann::json run_config_to_json(const RunConfig& config) {
    return {{"dataset_root", config.dataset_root},
            {"output_dir", config.output_dir},
            {"machines", config.machines},
            {"train_normals_per_machine", config.train_normals_per_machine},
            {"test_normals_per_machine", config.test_normals_per_machine},
            {"synthetic_per_machine", config.synthetic_per_machine},
            {"surrogate_per_machine", config.surrogate_per_machine},
            {"duration_s", config.duration_s},
            {"sample_rate", config.sample_rate},
            {"surrogate_severities", config.surrogate_severities},
            {"selector", selector_config_to_json(config.selector)},
            {"ae_preset", config.ae_preset},
            {"gaussian_shrinkage", config.gaussian_shrinkage},
            {"master_seed", config.master_seed}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig config;
    try {
        if (j.contains("dataset_root")) config.dataset_root = j.at("dataset_root");
        if (j.contains("output_dir")) config.output_dir = j.at("output_dir");
        if (j.contains("machines")) config.machines = j.at("machines").get<std::vector<std::string>>();
        if (j.contains("train_normals_per_machine")) {
            config.train_normals_per_machine = j.at("train_normals_per_machine").get<int>();
        }
        if (j.contains("test_normals_per_machine")) {
            config.test_normals_per_machine = j.at("test_normals_per_machine").get<int>();
        }
        if (j.contains("synthetic_per_machine")) {
            config.synthetic_per_machine = j.at("synthetic_per_machine").get<int>();
        }
        if (j.contains("surrogate_per_machine")) {
            config.surrogate_per_machine = j.at("surrogate_per_machine").get<int>();
        }
        if (j.contains("duration_s")) config.duration_s = j.at("duration_s").get<double>();
        if (j.contains("sample_rate")) config.sample_rate = j.at("sample_rate").get<int>();
        if (j.contains("surrogate_severities")) {
            config.surrogate_severities = j.at("surrogate_severities").get<std::vector<double>>();
        }
        if (j.contains("selector")) config.selector = selector_config_from_json(j.at("selector"));
        if (j.contains("ae_preset")) config.ae_preset = j.at("ae_preset").get<std::string>();
        if (j.contains("gaussian_shrinkage")) {
            config.gaussian_shrinkage = j.at("gaussian_shrinkage").get<double>();
        }
        if (j.contains("master_seed")) config.master_seed = j.at("master_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed field: ") + e.what());
    }
    config.validate();
    return config;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

// One clip the pipeline produced. `path` is relative to the dataset root.
struct ManifestRow {
    std::string id;
    std::string machine_type;
    ClipRole role = ClipRole::train_normal;
    std::string origin;    // "real", "synthetic", or "surrogate"
    std::string strategy;  // synthetic anomaly rows only
    std::string caption;   // synthetic anomaly rows only
    std::string path;
    std::uint64_t seed = 0;
    std::optional<EffectSpec> effect;
    std::optional<SurrogateSpec> surrogate;
};

struct DatasetManifest {
    std::uint64_t master_seed = 0;
    int sample_rate = 16000;
    double duration_s = 10.0;
    std::vector<ManifestRow> rows;

    // Uniqueness of ids plus existence of every referenced file.
    void validate(const std::filesystem::path& dataset_root) const {
        std::set<std::string> seen;
        for (const ManifestRow& row : rows) {
            if (!seen.insert(row.id).second) {
                throw DataError("manifest: duplicate clip id '" + row.id + "'");
            }
            const std::filesystem::path file = dataset_root / row.path;
            if (!std::filesystem::exists(file)) {
                throw DataError("manifest: missing clip file " + file.string());
            }
        }
    }

    std::vector<const ManifestRow*> rows_with_role(ClipRole role) const {
        std::vector<const ManifestRow*> out;
        for (const ManifestRow& row : rows) {
            if (row.role == role) out.push_back(&row);
        }
        return out;
    }
};

inline nlohmann::json manifest_row_to_json(const ManifestRow& row) {
    nlohmann::json j = {{"id", row.id},
                        {"machine_type", row.machine_type},
                        {"role", to_string(row.role)},
                        {"origin", row.origin},
                        {"path", row.path},
                        {"seed", row.seed}};
    if (!row.strategy.empty()) j["strategy"] = row.strategy;
    if (!row.caption.empty()) j["caption"] = row.caption;
    if (row.effect) j["effect"] = spec_to_json(*row.effect);
    if (row.surrogate) j["surrogate"] = surrogate_spec_to_json(*row.surrogate);
    return j;
}

inline ManifestRow manifest_row_from_json(const nlohmann::json& j) {
    ManifestRow row;
    row.id = j.at("id").get<std::string>();
    row.machine_type = j.at("machine_type").get<std::string>();
    row.role = clip_role_from_string(j.at("role").get<std::string>());
    row.origin = j.at("origin").get<std::string>();
    row.path = j.at("path").get<std::string>();
    row.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("strategy")) row.strategy = j.at("strategy").get<std::string>();
    if (j.contains("caption")) row.caption = j.at("caption").get<std::string>();
    if (j.contains("effect")) row.effect = spec_from_json(j.at("effect"));
    if (j.contains("surrogate")) row.surrogate = surrogate_spec_from_json(j.at("surrogate"));
    return row;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ManifestRow& row : manifest.rows) rows.push_back(manifest_row_to_json(row));
    return {{"version", 1},
            {"master_seed", manifest.master_seed},
            {"sample_rate", manifest.sample_rate},
            {"duration_s", manifest.duration_s},
            {"clips", rows}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest manifest;
    try {
        if (j.at("version").get<int>() != 1) throw DataError("manifest: unsupported version");
        manifest.master_seed = j.at("master_seed").get<std::uint64_t>();
        manifest.sample_rate = j.at("sample_rate").get<int>();
        manifest.duration_s = j.at("duration_s").get<double>();
        for (const auto& row : j.at("clips")) manifest.rows.push_back(manifest_row_from_json(row));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: malformed field: ") + e.what());
    }
    return manifest;
}

inline std::filesystem::path manifest_path(const RunConfig& config) {
    return std::filesystem::path(config.dataset_root) / "manifest.json";
}

inline void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << manifest_to_json(manifest).dump(2) << "\n";
    if (!out.flush()) throw DataError("manifest write failed for " + path.string());
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string() + " (run gen-normals first)");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace anomarank
