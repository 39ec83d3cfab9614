#pragma once
// End-to-end stages: dataset generation, strategy-driven anomaly synthesis,
// detector training, scoring, report building, and the three-strategy
// ablation. Every stage is deterministic given the run config: all randomness
// flows from the master seed through named sub-streams.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "anomarank/autoencoder.hpp"
#include "anomarank/common.hpp"
#include "anomarank/effects.hpp"
#include "anomarank/evaluation.hpp"
#include "anomarank/gaussian.hpp"
#include "anomarank/llm.hpp"
#include "anomarank/manifest.hpp"
#include "anomarank/mel.hpp"
#include "anomarank/model_io.hpp"
#include "anomarank/procgen.hpp"
#include "anomarank/selector.hpp"
#include "anomarank/wav.hpp"

namespace anomarank {

inline std::filesystem::path models_dir(const RunConfig& config) {
    return std::filesystem::path(config.output_dir) / "models";
}

namespace pipeline_detail {

inline std::string padded_index(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return buf;
}

inline void write_clip(const RunConfig& config, const std::string& relative_path,
                       const AudioClip& clip) {
    const std::filesystem::path file = std::filesystem::path(config.dataset_root) / relative_path;
    std::filesystem::create_directories(file.parent_path());
    write_wav(clip, file);
}

inline Caption caption_for(const MachineProfile& profile) {
    return generate_caption({profile.machine_type, profile.operating_condition, ""});
}

}  // namespace pipeline_detail

// Generates everything that stands in for collected recordings: training and
// test normals plus the surrogate-real anomalies. Synthetic anomalies are the
// one strategy-dependent product and belong to synth().
inline DatasetManifest gen_normals(const RunConfig& config) {
    config.validate();
    DatasetManifest manifest;
    manifest.master_seed = config.master_seed;
    manifest.sample_rate = config.sample_rate;
    manifest.duration_s = config.duration_s;

    for (const std::string& machine : config.machines) {
        const MachineProfile& profile = profile_for(machine);
        for (int i = 0; i < config.train_normals_per_machine; ++i) {
            ManifestRow row;
            row.id = machine + "_train_normal_" + pipeline_detail::padded_index(i);
            row.machine_type = machine;
            row.role = ClipRole::train_normal;
            row.origin = "real";
            row.path = machine + "/train_normal/" + pipeline_detail::padded_index(i) + ".wav";
            row.seed = derive_seed(config.master_seed, "procgen/train_normal/" + machine,
                                   static_cast<std::uint64_t>(i));
            pipeline_detail::write_clip(
                config, row.path,
                synth_normal(profile, config.duration_s, config.sample_rate, row.seed));
            manifest.rows.push_back(std::move(row));
        }
        for (int i = 0; i < config.test_normals_per_machine; ++i) {
            ManifestRow row;
            row.id = machine + "_test_normal_" + pipeline_detail::padded_index(i);
            row.machine_type = machine;
            row.role = ClipRole::test_normal;
            row.origin = "real";
            row.path = machine + "/test_normal/" + pipeline_detail::padded_index(i) + ".wav";
            row.seed = derive_seed(config.master_seed, "procgen/test_normal/" + machine,
                                   static_cast<std::uint64_t>(i));
            pipeline_detail::write_clip(
                config, row.path,
                synth_normal(profile, config.duration_s, config.sample_rate, row.seed));
            manifest.rows.push_back(std::move(row));
        }
        for (int i = 0; i < config.surrogate_per_machine; ++i) {
            ManifestRow row;
            row.id = machine + "_surrogate_" + pipeline_detail::padded_index(i);
            row.machine_type = machine;
            row.role = ClipRole::test_real_anomaly;
            row.origin = "surrogate";
            row.path = machine + "/test_real_anomaly/" + pipeline_detail::padded_index(i) + ".wav";
            row.seed = derive_seed(config.master_seed, "procgen/surrogate/" + machine,
                                   static_cast<std::uint64_t>(i));
            SurrogateSpec spec;
            spec.kind = default_surrogate_kind(machine);
            spec.severity = config.surrogate_severities[static_cast<std::size_t>(i) %
                                                        config.surrogate_severities.size()];
            spec.seed = row.seed;
            row.surrogate = spec;
            pipeline_detail::write_clip(
                config, row.path,
                synth_surrogate_anomaly(profile, spec, config.duration_s, config.sample_rate));
            manifest.rows.push_back(std::move(row));
        }
    }
    save_manifest(manifest, manifest_path(config));
    return manifest;
}

// Synthesizes the strategy's anomalies: one caption per machine, one selected
// effect per clip, applied to a fresh normal draw. Effect application seeds
// come from a strategy-independent stream, so strategies differ only in what
// the selector chose. All selections run before any audio is rendered; any
// selector failure aborts the stage with a per-clip summary.
inline DatasetManifest synth(const RunConfig& config,
                             std::shared_ptr<Transport> live_transport = nullptr) {
    config.validate();
    DatasetManifest manifest = load_manifest(manifest_path(config));
    if (manifest.rows_with_role(ClipRole::train_normal).empty() ||
        manifest.rows_with_role(ClipRole::test_normal).empty()) {
        throw DataError("synth: manifest has no normal clips; run gen-normals first");
    }
    const std::string strategy_name = to_string(config.selector.strategy);

    LlmClient client;
    if (config.selector.strategy == Strategy::llm) {
        if (!config.selector.replay_fixture.empty()) {
            client.transport = std::make_shared<ReplayTransport>(
                ReplayTransport::from_file(config.selector.replay_fixture));
        } else if (live_transport) {
            client.transport = std::move(live_transport);
        } else {
            client.transport = std::make_shared<HttpTransport>(config.selector.endpoint,
                                                               config.selector.api_key_env);
        }
        client.model = config.selector.model;
    }

    struct PlannedClip {
        std::string machine;
        int index = 0;
        std::string caption;
        EffectSpec spec;
    };
    std::vector<PlannedClip> planned;
    std::vector<std::string> failures;
    for (const std::string& machine : config.machines) {
        const Caption caption = pipeline_detail::caption_for(profile_for(machine));
        for (int i = 0; i < config.synthetic_per_machine; ++i) {
            const std::uint64_t select_seed = derive_seed(
                config.master_seed, "selector/" + machine, static_cast<std::uint64_t>(i));
            try {
                EffectSpec spec;
                switch (config.selector.strategy) {
                    case Strategy::llm:
                        spec = select_effect_llm(caption, client, select_seed);
                        break;
                    case Strategy::keyword:
                        spec = select_effect_keyword(caption, config.selector.keyword_table,
                                                     select_seed);
                        break;
                    case Strategy::random:
                        spec = select_effect_random(caption, select_seed);
                        break;
                }
                // Application seed comes from its own stream: selection picks
                // the effect, never where or how its randomness lands.
                spec.seed = derive_seed(config.master_seed, "effect/" + machine,
                                        static_cast<std::uint64_t>(i));
                planned.push_back({machine, i, caption.text, std::move(spec)});
            } catch (const Error& e) {
                failures.push_back(machine + "[" + std::to_string(i) + "]: " + e.what());
            }
        }
    }
    if (!failures.empty()) {
        std::string summary = "synth: selection failed for " + std::to_string(failures.size()) +
                              " clip(s):";
        for (const std::string& f : failures) summary += "\n  " + f;
        throw SelectorError(summary);
    }

    std::erase_if(manifest.rows, [&](const ManifestRow& row) {
        return row.role == ClipRole::test_synthetic_anomaly && row.strategy == strategy_name;
    });
    for (const PlannedClip& plan : planned) {
        const MachineProfile& profile = profile_for(plan.machine);
        ManifestRow row;
        row.id = plan.machine + "_synthetic_" + strategy_name + "_" +
                 pipeline_detail::padded_index(plan.index);
        row.machine_type = plan.machine;
        row.role = ClipRole::test_synthetic_anomaly;
        row.origin = "synthetic";
        row.strategy = strategy_name;
        row.caption = plan.caption;
        row.path = plan.machine + "/test_synthetic_anomaly/" + strategy_name + "_" +
                   pipeline_detail::padded_index(plan.index) + ".wav";
        row.seed = derive_seed(config.master_seed, "procgen/synth_base/" + plan.machine,
                               static_cast<std::uint64_t>(plan.index));
        row.effect = plan.spec;
        const AudioClip base =
            synth_normal(profile, config.duration_s, config.sample_rate, row.seed);
        pipeline_detail::write_clip(config, row.path, apply_effect(base, plan.spec));
        manifest.rows.push_back(std::move(row));
    }
    save_manifest(manifest, manifest_path(config));
    return manifest;
}

// Trains one autoencoder and one Gaussian on the pooled train normals of all
// machines and persists both models.
inline void train(const RunConfig& config) {
    config.validate();
    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const auto train_rows = manifest.rows_with_role(ClipRole::train_normal);
    if (train_rows.empty()) throw DataError("train: manifest has no train_normal clips");

    std::vector<FeatureMatrix> features;
    features.reserve(train_rows.size());
    for (const ManifestRow* row : train_rows) {
        const AudioClip clip =
            read_wav(std::filesystem::path(config.dataset_root) / row->path);
        features.push_back(extract_features(clip));
    }
    const TrainedAutoencoder ae = fit_autoencoder(features, config.ae_config());
    const GaussianModel gaussian = fit_gaussian(features, config.gaussian_shrinkage);

    const std::filesystem::path dir = models_dir(config);
    std::filesystem::create_directories(dir);
    save_autoencoder(ae, (dir / "autoencoder.model").string());
    save_gaussian(gaussian, (dir / "gaussian.model").string());
}

// Scores every test clip belonging to the configured strategy under both
// metrics. `models_from` overrides where the models are loaded from, so the
// ablation can share one trained pair across strategy runs.
inline std::vector<ScoreRecord> score(const RunConfig& config,
                                      const std::string& models_from = "") {
    config.validate();
    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const std::filesystem::path dir =
        models_from.empty() ? models_dir(config) : std::filesystem::path(models_from);
    const TrainedAutoencoder ae = load_autoencoder((dir / "autoencoder.model").string());
    const GaussianModel gaussian = load_gaussian((dir / "gaussian.model").string());
    const std::string strategy_name = to_string(config.selector.strategy);

    std::vector<const ManifestRow*> to_score;
    for (const ManifestRow& row : manifest.rows) {
        if (row.role == ClipRole::test_normal || row.role == ClipRole::test_real_anomaly) {
            to_score.push_back(&row);
        } else if (row.role == ClipRole::test_synthetic_anomaly &&
                   row.strategy == strategy_name) {
            to_score.push_back(&row);
        }
    }
    bool any_synthetic = false;
    for (const ManifestRow* row : to_score) {
        any_synthetic |= row->role == ClipRole::test_synthetic_anomaly;
    }
    if (!any_synthetic) {
        throw DataError("score: no synthetic anomalies for strategy '" + strategy_name +
                        "'; run synth first");
    }

    std::vector<ScoreRecord> records;
    records.reserve(to_score.size());
    for (const ManifestRow* row : to_score) {
        const AudioClip clip =
            read_wav(std::filesystem::path(config.dataset_root) / row->path);
        const FeatureMatrix features = extract_features(clip);
        ScoreRecord rec;
        rec.clip_id = row->id;
        rec.machine_type = row->machine_type;
        rec.label = row->role == ClipRole::test_normal ? "normal" : "anomalous";
        rec.origin = row->origin;
        rec.score_mse = score_mse(ae, features);
        rec.score_mahalanobis = score_mahalanobis(gaussian, features);
        records.push_back(std::move(rec));
    }
    std::filesystem::create_directories(config.output_dir);
    write_score_csv((std::filesystem::path(config.output_dir) / "scores.csv").string(), records);
    return records;
}

// Builds the rank report from the stage's score CSV and emits all three
// artifacts. Exclusions are returned in the report; the caller decides
// whether they are fatal.
inline RankReport evaluate(const RunConfig& config) {
    config.validate();
    const std::filesystem::path out(config.output_dir);
    const RankReport report = build_report(read_score_csv((out / "scores.csv").string()));
    write_report_csv(report, (out / "report.csv").string());
    write_report_md(report, (out / "report.md").string());
    write_correlation_json(report, (out / "correlation.json").string());
    return report;
}

struct AblationResult {
    // Strategy name -> its full report, in run order: llm, keyword, random.
    std::vector<std::pair<std::string, RankReport>> reports;
};

namespace pipeline_detail {

inline nlohmann::json comparison_json(const RunConfig& config, const AblationResult& result) {
    nlohmann::json strategies = nlohmann::json::object();
    for (const auto& [name, report] : result.reports) {
        nlohmann::json machines = nlohmann::json::object();
        for (const std::string& machine : report.machines) {
            const ReportRow& row = report.row(machine, Metric::mse, Origin::synthetic);
            machines[machine] = {{"auc_mse", row.auc_value}, {"rank", row.rank}};
        }
        const CorrelationEntry& corr = report.correlation(Metric::mse);
        nlohmann::json entry = {{"machines", machines}};
        if (corr.valid) {
            entry["spearman_mse"] = corr.spearman;
            entry["kendall_mse"] = corr.kendall;
        }
        strategies[name] = entry;
    }
    nlohmann::json real_machines = nlohmann::json::object();
    const RankReport& first = result.reports.front().second;
    for (const std::string& machine : first.machines) {
        const ReportRow& row = first.row(machine, Metric::mse, Origin::real);
        real_machines[machine] = {{"auc_mse", row.auc_value}, {"rank", row.rank}};
    }
    return {{"master_seed", config.master_seed},
            {"strategies", strategies},
            {"real", {{"machines", real_machines}}}};
}

inline void write_comparison_md(const AblationResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write comparison table " + path.string());
    out << "# Ablation: selection strategy vs. surrogate-real ranking (MSE AUC)\n\n";
    out << "| Machine type |";
    for (const auto& [name, report] : result.reports) out << " " << name << " AUC | rank |";
    out << " real AUC | rank |\n|---|";
    for (std::size_t i = 0; i < result.reports.size(); ++i) out << "---|---|";
    out << "---|---|\n";
    const RankReport& first = result.reports.front().second;
    char buf[32];
    for (const std::string& machine : first.machines) {
        out << "| " << machine << " |";
        for (const auto& [name, report] : result.reports) {
            const ReportRow& row = report.row(machine, Metric::mse, Origin::synthetic);
            std::snprintf(buf, sizeof buf, "%.3f", row.auc_value);
            out << " " << buf << " | " << row.rank << " |";
        }
        const ReportRow& real_row = first.row(machine, Metric::mse, Origin::real);
        std::snprintf(buf, sizeof buf, "%.3f", real_row.auc_value);
        out << " " << buf << " | " << real_row.rank << " |\n";
    }
    out << "\nSpearman rho against the surrogate-real ranking (MSE):\n\n";
    for (const auto& [name, report] : result.reports) {
        const CorrelationEntry& corr = report.correlation(Metric::mse);
        out << "- " << name << ": ";
        if (corr.valid) {
            std::snprintf(buf, sizeof buf, "%.4f", corr.spearman);
            out << buf << "\n";
        } else {
            out << "not available\n";
        }
    }
    if (!out.flush()) throw DataError("comparison write failed for " + path.string());
}

}  // namespace pipeline_detail

// Runs synth + score + evaluate once per selection strategy against the
// shared dataset and models, then emits the cross-strategy comparison.
inline AblationResult ablate(const RunConfig& config,
                             std::shared_ptr<Transport> live_transport = nullptr) {
    config.validate();
    {
        const DatasetManifest manifest = load_manifest(manifest_path(config));
        if (manifest.rows_with_role(ClipRole::test_normal).empty()) {
            throw DataError("ablate: manifest has no test normals; run gen-normals first");
        }
        if (manifest.rows_with_role(ClipRole::test_real_anomaly).empty()) {
            throw DataError("ablate: manifest has no surrogate anomalies; run gen-normals first");
        }
    }
    const std::filesystem::path shared_models = models_dir(config);
    if (!std::filesystem::exists(shared_models / "autoencoder.model")) {
        throw DataError("ablate: no trained models under " + shared_models.string() +
                        "; run train first");
    }

    AblationResult result;
    for (Strategy strategy : {Strategy::llm, Strategy::keyword, Strategy::random}) {
        RunConfig sub = config;
        sub.selector.strategy = strategy;
        sub.output_dir =
            (std::filesystem::path(config.output_dir) / to_string(strategy)).string();
        synth(sub, live_transport);
        score(sub, shared_models.string());
        result.reports.emplace_back(to_string(strategy), evaluate(sub));
    }

    const std::filesystem::path out(config.output_dir);
    std::filesystem::create_directories(out);
    pipeline_detail::write_comparison_md(result, out / "comparison.md");
    std::ofstream json_out(out / "comparison.json", std::ios::trunc);
    if (!json_out) throw DataError("cannot write " + (out / "comparison.json").string());
    json_out << pipeline_detail::comparison_json(config, result).dump(2) << "\n";
    if (!json_out.flush()) {
        throw DataError("comparison write failed for " + (out / "comparison.json").string());
    }
    return result;
}

}  // namespace anomarank
