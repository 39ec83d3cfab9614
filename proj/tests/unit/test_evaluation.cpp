#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "anomarank/evaluation.hpp"
#include "anomarank/prng.hpp"

using namespace anomarank;

namespace {

// Definitional all-pairs oracle for the strict-step AUC.
double brute_auc(const std::vector<double>& normals, const std::vector<double>& anomalies) {
    std::uint64_t hits = 0;
    for (double a : anomalies) {
        for (double n : normals) {
            if (a > n) ++hits;
        }
    }
    return static_cast<double>(hits) /
           (static_cast<double>(normals.size()) * static_cast<double>(anomalies.size()));
}

EvalSet make_set(std::vector<double> normals, std::vector<double> anomalies) {
    EvalSet set;
    set.machine_type = "fan";
    set.normal_scores = std::move(normals);
    set.anomaly_scores = std::move(anomalies);
    return set;
}

// Scores with sizes 1..50 drawn partly from a coarse lattice so duplicates
// appear both within and across classes.
std::vector<double> random_scores(SplitMix64& rng) {
    const std::size_t count = static_cast<std::size_t>(rng.below(50)) + 1;
    std::vector<double> scores(count);
    for (double& s : scores) {
        s = rng.below(2) == 0 ? static_cast<double>(rng.below(16)) / 8.0 : rng.uniform01();
    }
    return scores;
}

Ranking ranking_from(const std::map<std::string, double>& aucs) { return rank_machines(aucs); }

// Pearson correlation of the two rank vectors, paired by machine.
double pearson_on_ranks(const Ranking& a, const Ranking& b) {
    std::map<std::string, double> ra, rb;
    for (const RankEntry& e : a.entries) ra[e.machine_type] = e.rank;
    for (const RankEntry& e : b.entries) rb[e.machine_type] = e.rank;
    const double m = static_cast<double>(ra.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (const auto& [machine, rank] : ra) {
        mean_a += rank;
        mean_b += rb.at(machine);
    }
    mean_a /= m;
    mean_b /= m;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (const auto& [machine, rank] : ra) {
        const double da = rank - mean_a;
        const double db = rb.at(machine) - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    return cov / std::sqrt(var_a * var_b);
}

// Ten normal scores 0..9 plus ten anomaly scores engineered so the strict
// AUC equals hits/100 for a chosen hit count.
void fill_class(std::vector<double>& anomalies, double target_auc) {
    int hits = static_cast<int>(std::llround(target_auc * 100.0));
    anomalies.clear();
    for (int j = 0; j < 10; ++j) {
        const int count = std::min(hits, 10);
        hits -= count;
        anomalies.push_back(static_cast<double>(count) - 0.5);
    }
}

// Records for one machine: 10 normals, 10 synthetic and 10 surrogate
// anomalies, with per-metric score columns engineered to hit the four AUCs.
void append_machine_records(std::vector<ScoreRecord>& records, const std::string& machine,
                            double auc_mse_synth, double auc_mahala_synth, double auc_mse_real,
                            double auc_mahala_real) {
    for (int i = 0; i < 10; ++i) {
        ScoreRecord rec;
        rec.clip_id = machine + "_normal_" + std::to_string(i);
        rec.machine_type = machine;
        rec.label = "normal";
        rec.origin = "real";
        rec.score_mse = static_cast<double>(i);
        rec.score_mahalanobis = static_cast<double>(i);
        records.push_back(rec);
    }
    std::vector<double> mse_scores, mahala_scores;
    fill_class(mse_scores, auc_mse_synth);
    fill_class(mahala_scores, auc_mahala_synth);
    for (int j = 0; j < 10; ++j) {
        ScoreRecord rec;
        rec.clip_id = machine + "_synth_" + std::to_string(j);
        rec.machine_type = machine;
        rec.label = "anomalous";
        rec.origin = "synthetic";
        rec.score_mse = mse_scores[static_cast<std::size_t>(j)];
        rec.score_mahalanobis = mahala_scores[static_cast<std::size_t>(j)];
        records.push_back(rec);
    }
    fill_class(mse_scores, auc_mse_real);
    fill_class(mahala_scores, auc_mahala_real);
    for (int j = 0; j < 10; ++j) {
        ScoreRecord rec;
        rec.clip_id = machine + "_surrogate_" + std::to_string(j);
        rec.machine_type = machine;
        rec.label = "anomalous";
        rec.origin = "surrogate";
        rec.score_mse = mse_scores[static_cast<std::size_t>(j)];
        rec.score_mahalanobis = mahala_scores[static_cast<std::size_t>(j)];
        records.push_back(rec);
    }
}

// Five-machine score records matching the reference detection scenario:
// identical difficulty ordering on both origins.
std::vector<ScoreRecord> reference_records() {
    std::vector<ScoreRecord> records;
    append_machine_records(records, "bearing", 0.85, 0.82, 0.57, 0.61);
    append_machine_records(records, "gearbox", 0.88, 0.86, 0.62, 0.67);
    append_machine_records(records, "fan", 0.92, 0.95, 0.90, 0.93);
    append_machine_records(records, "slide_rail", 0.80, 0.79, 0.55, 0.57);
    append_machine_records(records, "valve", 0.78, 0.72, 0.53, 0.52);
    return records;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("anomarank_eval_" + std::to_string(SplitMix64(std::random_device{}()).next_u64()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("auc separates the documented score examples", "[evaluation]") {
    CHECK(auc(make_set({0.1, 0.2}, {0.3, 0.4})) == 1.0);
    CHECK(auc(make_set({0.5}, {0.5})) == 0.0);
    CHECK(auc(make_set({0.3, 0.4}, {0.1, 0.2})) == 0.0);
    // Hand count: anomaly 0.2 beats one normal, 0.3 beats one (ties excluded),
    // 0.4 beats all three.
    CHECK(auc(make_set({0.1, 0.3, 0.3}, {0.2, 0.3, 0.4})) == 5.0 / 9.0);
}

TEST_CASE("fast auc equals the brute-force double loop", "[evaluation]") {
    SplitMix64 rng(20260818);
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> normals = random_scores(rng);
        const std::vector<double> anomalies = random_scores(rng);
        REQUIRE(auc(make_set(normals, anomalies)) == brute_auc(normals, anomalies));
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms", "[evaluation]") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> normals = random_scores(rng);
        std::vector<double> anomalies = random_scores(rng);
        const double before = auc(make_set(normals, anomalies));
        auto monotone = [](double x) { return x * x * x + 2.0 * x + 1.0; };
        for (double& s : normals) s = monotone(s);
        for (double& s : anomalies) s = monotone(s);
        REQUIRE(auc(make_set(normals, anomalies)) == before);
    }
}

TEST_CASE("auc complement sums to one without ties", "[evaluation]") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        // Disjoint integer lattices guarantee no cross-class ties.
        std::vector<double> normals(rng.below(20) + 1), anomalies(rng.below(20) + 1);
        for (double& s : normals) s = 2.0 * static_cast<double>(rng.below(1000));
        for (double& s : anomalies) s = 2.0 * static_cast<double>(rng.below(1000)) + 1.0;
        const double forward = auc(make_set(normals, anomalies));
        const double backward = auc(make_set(anomalies, normals));
        REQUIRE(forward + backward == 1.0);
    }
}

TEST_CASE("auc rejects empty or non-finite input", "[evaluation]") {
    CHECK_THROWS_AS(auc(make_set({}, {1.0})), DataError);
    CHECK_THROWS_AS(auc(make_set({1.0}, {})), DataError);
    CHECK_THROWS_AS(auc(make_set({std::nan("")}, {1.0})), DataError);
    CHECK_THROWS_AS(auc(make_set({1.0}, {std::numeric_limits<double>::infinity()})), DataError);
}

TEST_CASE("rank_machines orders by auc with rank 1 highest", "[evaluation]") {
    const std::map<std::string, double> aucs = {{"bearing", 0.85},
                                                {"gearbox", 0.88},
                                                {"fan", 0.92},
                                                {"slide_rail", 0.80},
                                                {"valve", 0.78}};
    const Ranking ranking = rank_machines(aucs);
    REQUIRE(ranking.entries.size() == 5);
    CHECK(ranking.entries[0].machine_type == "fan");
    CHECK(ranking.rank_of("fan") == 1);
    CHECK(ranking.rank_of("gearbox") == 2);
    CHECK(ranking.rank_of("bearing") == 3);
    CHECK(ranking.rank_of("slide_rail") == 4);
    CHECK(ranking.rank_of("valve") == 5);
    CHECK(ranking.tie_audit.empty());
    CHECK_THROWS_AS(ranking.rank_of("pump"), DataError);

    // Ranks are a permutation of 1..M regardless of insertion order.
    std::map<std::string, double> reversed;
    for (auto it = aucs.rbegin(); it != aucs.rend(); ++it) reversed.insert(*it);
    const Ranking again = rank_machines(reversed);
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        CHECK(again.entries[i].machine_type == ranking.entries[i].machine_type);
        CHECK(again.entries[i].rank == ranking.entries[i].rank);
    }
}

TEST_CASE("rank_machines breaks exact ties lexicographically and audits them", "[evaluation]") {
    const Ranking all_equal =
        rank_machines({{"valve", 0.5}, {"bearing", 0.5}, {"fan", 0.5}, {"gearbox", 0.5}});
    REQUIRE(all_equal.entries.size() == 4);
    CHECK(all_equal.entries[0].machine_type == "bearing");
    CHECK(all_equal.entries[1].machine_type == "fan");
    CHECK(all_equal.entries[2].machine_type == "gearbox");
    CHECK(all_equal.entries[3].machine_type == "valve");
    REQUIRE(all_equal.tie_audit.size() == 1);
    CHECK(all_equal.tie_audit[0].find("bearing") != std::string::npos);
    CHECK(all_equal.tie_audit[0].find("valve") != std::string::npos);

    const Ranking two_groups =
        rank_machines({{"fan", 0.9}, {"valve", 0.7}, {"gearbox", 0.9}, {"bearing", 0.7}});
    CHECK(two_groups.rank_of("fan") == 1);
    CHECK(two_groups.rank_of("gearbox") == 2);
    CHECK(two_groups.rank_of("bearing") == 3);
    CHECK(two_groups.rank_of("valve") == 4);
    CHECK(two_groups.tie_audit.size() == 2);

    CHECK_THROWS_AS(rank_machines({}), DataError);
}

TEST_CASE("spearman matches closed forms and the pearson oracle", "[evaluation]") {
    const Ranking real = ranking_from(
        {{"bearing", 0.57}, {"gearbox", 0.62}, {"fan", 0.90}, {"slide_rail", 0.55}, {"valve", 0.53}});
    CHECK(spearman_rho(real, real) == 1.0);
    CHECK(kendall_tau(real, real) == 1.0);

    // Exactly reversed difficulty ordering.
    const Ranking reversed = ranking_from(
        {{"bearing", 0.43}, {"gearbox", 0.38}, {"fan", 0.10}, {"slide_rail", 0.45}, {"valve", 0.47}});
    CHECK(spearman_rho(real, reversed) == -1.0);
    CHECK(kendall_tau(real, reversed) == -1.0);

    // Swapping one adjacent pair: sum d^2 = 2 and one discordant pair of 10.
    const Ranking swapped = ranking_from(
        {{"bearing", 0.57}, {"gearbox", 0.91}, {"fan", 0.90}, {"slide_rail", 0.55}, {"valve", 0.53}});
    CHECK(spearman_rho(real, swapped) == Catch::Approx(0.9).margin(1e-15));
    CHECK(kendall_tau(real, swapped) == Catch::Approx(0.8).margin(1e-15));

    SplitMix64 rng(42);
    const std::vector<std::string> machines = {"a", "b", "c", "d", "e", "f", "g"};
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, double> lhs, rhs;
        for (const std::string& machine : machines) {
            lhs[machine] = rng.uniform01();
            rhs[machine] = rng.uniform01();
        }
        const Ranking a = ranking_from(lhs);
        const Ranking b = ranking_from(rhs);
        REQUIRE(spearman_rho(a, b) == Catch::Approx(pearson_on_ranks(a, b)).margin(1e-12));
    }
}

TEST_CASE("rank correlation rejects mismatched machine sets", "[evaluation]") {
    const Ranking three = ranking_from({{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
    const Ranking other = ranking_from({{"a", 0.9}, {"b", 0.8}, {"d", 0.7}});
    const Ranking two = ranking_from({{"a", 0.9}, {"b", 0.8}});
    CHECK_THROWS_AS(spearman_rho(three, other), DataError);
    CHECK_THROWS_AS(spearman_rho(three, two), DataError);
    CHECK_THROWS_AS(kendall_tau(three, other), DataError);

    const Ranking single = ranking_from({{"a", 0.9}});
    CHECK_THROWS_AS(spearman_rho(single, single), DataError);
    CHECK_THROWS_AS(kendall_tau(single, single), DataError);
}

TEST_CASE("rank correlation on the fixed five-machine ablation scenario", "[evaluation]") {
    // Context-blind anomaly choice: the easy machines draw hard effects and
    // vice versa, so the ordering largely inverts against the real ranking.
    const Ranking random_arm = ranking_from(
        {{"bearing", 0.81}, {"gearbox", 0.85}, {"fan", 0.82}, {"slide_rail", 0.86}, {"valve", 0.89}});
    CHECK(random_arm.rank_of("valve") == 1);
    CHECK(random_arm.rank_of("slide_rail") == 2);
    CHECK(random_arm.rank_of("gearbox") == 3);
    CHECK(random_arm.rank_of("fan") == 4);
    CHECK(random_arm.rank_of("bearing") == 5);

    const Ranking real = ranking_from(
        {{"bearing", 0.57}, {"gearbox", 0.62}, {"fan", 0.90}, {"slide_rail", 0.55}, {"valve", 0.53}});
    // Rank vectors (5,3,4,2,1) vs (3,2,1,4,5): sum d^2 = 34, so rho = -0.7;
    // 2 concordant pairs of 10 give tau = -0.6.
    CHECK(spearman_rho(random_arm, real) == Catch::Approx(-0.7).margin(1e-15));
    CHECK(kendall_tau(random_arm, real) == Catch::Approx(-0.6).margin(1e-15));
}

TEST_CASE("build_report assembles aucs, ranks, and correlations", "[evaluation]") {
    const RankReport report = build_report(reference_records());
    REQUIRE(report.machines ==
            std::vector<std::string>{"bearing", "fan", "gearbox", "slide_rail", "valve"});
    REQUIRE(report.rows.size() == 20);
    CHECK(report.excluded.empty());
    CHECK(report.tie_audit.empty());

    CHECK(report.row("bearing", Metric::mse, Origin::synthetic).auc_value ==
          Catch::Approx(0.85).margin(1e-12));
    CHECK(report.row("fan", Metric::mahala, Origin::synthetic).auc_value ==
          Catch::Approx(0.95).margin(1e-12));
    CHECK(report.row("valve", Metric::mahala, Origin::real).auc_value ==
          Catch::Approx(0.52).margin(1e-12));

    // Identical difficulty ordering on every metric/origin combination.
    for (Metric metric : kAllMetrics) {
        for (Origin origin : kAllOrigins) {
            CHECK(report.row("fan", metric, origin).rank == 1);
            CHECK(report.row("gearbox", metric, origin).rank == 2);
            CHECK(report.row("bearing", metric, origin).rank == 3);
            CHECK(report.row("slide_rail", metric, origin).rank == 4);
            CHECK(report.row("valve", metric, origin).rank == 5);
        }
        const CorrelationEntry& c = report.correlation(metric);
        CHECK(c.valid);
        CHECK(c.spearman == 1.0);
        CHECK(c.kendall == 1.0);
    }
}

TEST_CASE("build_report excludes machines missing a class", "[evaluation]") {
    std::vector<ScoreRecord> records = reference_records();
    // Strip the surrogate anomalies from one machine.
    std::erase_if(records, [](const ScoreRecord& rec) {
        return rec.machine_type == "valve" && rec.origin == "surrogate";
    });
    const RankReport report = build_report(records);
    REQUIRE(report.machines ==
            std::vector<std::string>{"bearing", "fan", "gearbox", "slide_rail"});
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].find("valve") != std::string::npos);
    CHECK(report.excluded[0].find("real") != std::string::npos);
    CHECK(report.rows.size() == 16);
    CHECK(report.correlation(Metric::mse).valid);
    CHECK_THROWS_AS(report.row("valve", Metric::mse, Origin::synthetic), DataError);

    // Every machine incomplete leaves nothing to rank.
    std::vector<ScoreRecord> normals_only;
    for (const ScoreRecord& rec : reference_records()) {
        if (rec.label == "normal") normals_only.push_back(rec);
    }
    CHECK_THROWS_AS(build_report(normals_only), DataError);
    CHECK_THROWS_AS(build_report({}), DataError);

    std::vector<ScoreRecord> bad_label = reference_records();
    bad_label[0].label = "healthy";
    CHECK_THROWS_AS(build_report(bad_label), DataError);
    std::vector<ScoreRecord> bad_origin = reference_records();
    bad_origin[12].origin = "imagined";
    CHECK_THROWS_AS(build_report(bad_origin), DataError);
}

TEST_CASE("build_report on a single machine leaves correlations empty", "[evaluation]") {
    std::vector<ScoreRecord> records;
    append_machine_records(records, "fan", 0.9, 0.92, 0.8, 0.82);
    const RankReport report = build_report(records);
    REQUIRE(report.machines == std::vector<std::string>{"fan"});
    REQUIRE(report.rows.size() == 4);
    for (const ReportRow& row : report.rows) CHECK(row.rank == 1);
    CHECK_FALSE(report.correlation(Metric::mse).valid);
    CHECK_FALSE(report.correlation(Metric::mahala).valid);

    TempDir dir;
    write_correlation_json(report, dir.file("correlation.json"));
    std::ifstream in(dir.file("correlation.json"));
    const nlohmann::json doc = nlohmann::json::parse(in);
    CHECK(doc.at("mse").empty());
    CHECK(doc.at("mahala").empty());
}

TEST_CASE("score csv round-trips exactly", "[evaluation]") {
    TempDir dir;
    const std::string path = dir.file("scores.csv");
    std::vector<ScoreRecord> records = reference_records();
    records[0].score_mse = 0.12345678901234567;
    records[1].score_mahalanobis = 1e-300;
    write_score_csv(path, records);
    const std::vector<ScoreRecord> loaded = read_score_csv(path);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].clip_id == records[i].clip_id);
        CHECK(loaded[i].machine_type == records[i].machine_type);
        CHECK(loaded[i].label == records[i].label);
        CHECK(loaded[i].origin == records[i].origin);
        CHECK(loaded[i].score_mse == records[i].score_mse);
        CHECK(loaded[i].score_mahalanobis == records[i].score_mahalanobis);
    }

    CHECK_THROWS_AS(read_score_csv(dir.file("missing.csv")), DataError);
    {
        std::ofstream bad(dir.file("bad_header.csv"));
        bad << "clip,machine\n";
    }
    CHECK_THROWS_AS(read_score_csv(dir.file("bad_header.csv")), DataError);
    {
        std::ofstream bad(dir.file("bad_row.csv"));
        bad << kScoreCsvHeader << "\nonly,three,fields\n";
    }
    CHECK_THROWS_AS(read_score_csv(dir.file("bad_row.csv")), DataError);
    {
        std::ofstream bad(dir.file("bad_score.csv"));
        bad << kScoreCsvHeader << "\nid,fan,normal,real,notanumber,1.0\n";
    }
    CHECK_THROWS_AS(read_score_csv(dir.file("bad_score.csv")), DataError);
}

TEST_CASE("report emission writes all three artifacts", "[evaluation]") {
    TempDir dir;
    const RankReport report = build_report(reference_records());
    write_report_csv(report, dir.file("report.csv"));
    write_report_md(report, dir.file("report.md"));
    write_correlation_json(report, dir.file("correlation.json"));

    std::ifstream csv(dir.file("report.csv"));
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "machine,metric,origin,auc,rank");
    std::size_t rows = 0;
    bool saw_fan_rank_one = false;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        if (line.find("fan,mse,synthetic,") == 0) {
            CHECK(line.substr(line.size() - 2) == ",1");
            saw_fan_rank_one = true;
        }
    }
    CHECK(rows == 20);
    CHECK(saw_fan_rank_one);

    std::ifstream md(dir.file("report.md"));
    std::string md_text((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
    CHECK(md_text.find("| Machine type |") != std::string::npos);
    CHECK(md_text.find("| fan | 0.920 | 0.950 | 1 | 1 | 0.900 | 0.930 | 1 | 1 |") !=
          std::string::npos);
    CHECK(md_text.find("Spearman rho = 1.0000") != std::string::npos);

    std::ifstream corr(dir.file("correlation.json"));
    const nlohmann::json doc = nlohmann::json::parse(corr);
    CHECK(doc.at("mse").at("spearman").get<double>() == 1.0);
    CHECK(doc.at("mse").at("kendall").get<double>() == 1.0);
    CHECK(doc.at("mahala").at("spearman").get<double>() == 1.0);
}
