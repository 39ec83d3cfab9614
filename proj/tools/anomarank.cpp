// Command-line front end: wires the pipeline stages to subcommands and maps
// the error taxonomy onto exit codes (2 config, 3 data, 4 selector/transport).

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anomarank/pipeline.hpp"

namespace {

anomarank::RunConfig resolve_config(const std::string& config_path, bool paper_scale,
                                    const std::string& strategy) {
    anomarank::RunConfig config;
    if (!config_path.empty()) config = anomarank::load_run_config(config_path);
    if (paper_scale) apply_paper_scale(config);
    if (!strategy.empty()) {
        config.selector.strategy = anomarank::strategy_from_string(strategy);
    }
    config.validate();
    return config;
}

void print_report_summary(const anomarank::RankReport& report) {
    for (const anomarank::CorrelationEntry& c : report.correlations) {
        if (c.valid) {
            std::printf("%s: spearman %.4f, kendall %.4f\n", to_string(c.metric).c_str(),
                        c.spearman, c.kendall);
        } else {
            std::printf("%s: correlation not available (fewer than 2 machines)\n",
                        to_string(c.metric).c_str());
        }
    }
    for (const std::string& note : report.excluded) {
        std::printf("excluded %s\n", note.c_str());
    }
}

void regenerate_fixture(const std::string& out_path, const std::string& model) {
    std::vector<std::pair<anomarank::Caption, anomarank::EffectKind>> picks;
    for (const anomarank::MachineProfile& profile : anomarank::default_profiles()) {
        const anomarank::Caption caption = anomarank::generate_caption(
            {profile.machine_type, profile.operating_condition, ""});
        picks.emplace_back(caption,
                           anomarank::select_effect_keyword(
                               caption, anomarank::default_keyword_table(), 0)
                               .kind);
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw anomarank::DataError("cannot write fixture '" + out_path + "'");
    out << anomarank::make_replay_fixture_json(picks, model).dump(2) << "\n";
    std::printf("wrote %s (%zu entries)\n", out_path.c_str(), picks.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic-anomaly rank-consistency pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    bool paper_scale = false;
    std::string strategy;
    bool allow_partial = false;
    app.add_option("--config", config_path, "Run config JSON file (defaults: desk scale)");
    app.add_flag("--paper-scale", paper_scale, "Use full-scale counts and the full AE config");

    CLI::App* gen = app.add_subcommand("gen-normals",
                                       "Generate normal clips and surrogate anomalies");
    CLI::App* synth_cmd = app.add_subcommand("synth", "Synthesize strategy-driven anomalies");
    synth_cmd->add_option("--strategy", strategy, "Override the selector strategy");
    CLI::App* train_cmd = app.add_subcommand("train", "Train the autoencoder and Gaussian");
    CLI::App* score_cmd = app.add_subcommand("score", "Score all test clips under both metrics");
    score_cmd->add_option("--strategy", strategy, "Override the selector strategy");
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Build rank report from scores");
    eval_cmd->add_flag("--allow-partial", allow_partial,
                       "Exit zero even when machines were excluded");
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "Compare llm, keyword, and random arms");
    ablate_cmd->add_flag("--allow-partial", allow_partial,
                         "Exit zero even when machines were excluded");

    std::string fixture_out = "fixtures/llm_replay.json";
    std::string fixture_model = "gpt-4o";
    CLI::App* fixture_cmd =
        app.add_subcommand("regen-fixture", "Rebuild the offline replay fixture");
    fixture_cmd->add_option("--out", fixture_out, "Fixture output path");
    fixture_cmd->add_option("--model", fixture_model, "Model name baked into requests");

    // Let `anomarank evaluate --config x` resolve --config on the parent.
    for (CLI::App* sub : {gen, synth_cmd, train_cmd, score_cmd, eval_cmd, ablate_cmd, fixture_cmd}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixture_cmd->parsed()) {
            regenerate_fixture(fixture_out, fixture_model);
            return 0;
        }
        const anomarank::RunConfig config = resolve_config(config_path, paper_scale, strategy);
        if (gen->parsed()) {
            const anomarank::DatasetManifest manifest = anomarank::gen_normals(config);
            std::printf("wrote %zu clips under %s\n", manifest.rows.size(),
                        config.dataset_root.c_str());
        } else if (synth_cmd->parsed()) {
            const anomarank::DatasetManifest manifest = anomarank::synth(config);
            std::printf("manifest now has %zu rows\n", manifest.rows.size());
        } else if (train_cmd->parsed()) {
            anomarank::train(config);
            std::printf("models written to %s\n", models_dir(config).string().c_str());
        } else if (score_cmd->parsed()) {
            const auto records = anomarank::score(config);
            std::printf("scored %zu clips\n", records.size());
        } else if (eval_cmd->parsed()) {
            const anomarank::RankReport report = anomarank::evaluate(config);
            print_report_summary(report);
            if (!report.excluded.empty() && !allow_partial) return 3;
        } else if (ablate_cmd->parsed()) {
            const anomarank::AblationResult result = anomarank::ablate(config);
            bool any_excluded = false;
            for (const auto& [name, report] : result.reports) {
                std::printf("[%s]\n", name.c_str());
                print_report_summary(report);
                any_excluded |= !report.excluded.empty();
            }
            if (any_excluded && !allow_partial) return 3;
        }
    } catch (const anomarank::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const anomarank::SelectorError& e) {
        std::fprintf(stderr, "selector error: %s\n", e.what());
        return 4;
    } catch (const anomarank::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
