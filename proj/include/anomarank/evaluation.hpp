#pragma once
// AUC scoring with a strict Heaviside step (ties score zero), per-machine
// ranking with a deterministic lexicographic tie-break, Spearman/Kendall rank
// correlation between anomaly origins, and report emission (CSV, Markdown,
// JSON).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomarank/common.hpp"

namespace anomarank {

enum class Metric { mse, mahala };
enum class Origin { synthetic, real };

inline std::string to_string(Metric metric) {
    return metric == Metric::mse ? "mse" : "mahala";
}

inline std::string to_string(Origin origin) {
    return origin == Origin::synthetic ? "synthetic" : "real";
}

inline constexpr Metric kAllMetrics[] = {Metric::mse, Metric::mahala};
inline constexpr Origin kAllOrigins[] = {Origin::synthetic, Origin::real};

// One scored clip as emitted by the scoring stage. `label` is "normal" or
// "anomalous"; `origin` is "real", "synthetic", or "surrogate". Surrogate
// anomalies stand in for real ones on the evaluation side.
struct ScoreRecord {
    std::string clip_id;
    std::string machine_type;
    std::string label;
    std::string origin;
    double score_mse = 0.0;
    double score_mahalanobis = 0.0;
};

// Scores for one machine under one metric and one anomaly origin.
struct EvalSet {
    std::string machine_type;
    std::vector<double> normal_scores;
    std::vector<double> anomaly_scores;
    Metric metric = Metric::mse;
    Origin origin = Origin::synthetic;
};

namespace evaluation_detail {

inline void require_finite(const std::vector<double>& scores, const char* what) {
    for (double s : scores) {
        if (!std::isfinite(s)) throw DataError(std::string("auc: non-finite ") + what + " score");
    }
}

inline std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace evaluation_detail

// Area under the ROC curve with a strict step: a normal/anomaly pair counts
// only when the anomaly scores strictly higher, so ties contribute zero.
// Counting normals below each anomaly in a sorted copy gives the same integer
// numerator as the all-pairs double loop.
inline double auc(const EvalSet& set) {
    if (set.normal_scores.empty()) throw DataError("auc: no normal scores");
    if (set.anomaly_scores.empty()) throw DataError("auc: no anomaly scores");
    evaluation_detail::require_finite(set.normal_scores, "normal");
    evaluation_detail::require_finite(set.anomaly_scores, "anomaly");

    std::vector<double> sorted_normals = set.normal_scores;
    std::sort(sorted_normals.begin(), sorted_normals.end());
    std::uint64_t hits = 0;
    for (double a : set.anomaly_scores) {
        hits += static_cast<std::uint64_t>(
            std::lower_bound(sorted_normals.begin(), sorted_normals.end(), a) -
            sorted_normals.begin());
    }
    return static_cast<double>(hits) /
           (static_cast<double>(set.normal_scores.size()) *
            static_cast<double>(set.anomaly_scores.size()));
}

struct RankEntry {
    std::string machine_type;
    double auc_value = 0.0;
    int rank = 0;
};

struct Ranking {
    std::vector<RankEntry> entries;      // rank ascending, rank 1 first
    std::vector<std::string> tie_audit;  // one note per group of tied AUCs

    int rank_of(const std::string& machine_type) const {
        for (const RankEntry& e : entries) {
            if (e.machine_type == machine_type) return e.rank;
        }
        throw DataError("rank_of: unknown machine " + machine_type);
    }
};

// Rank 1 is the highest AUC. Machines with exactly equal AUCs are ordered by
// identifier ascending, and each tied group is recorded in the audit trail.
inline Ranking rank_machines(const std::map<std::string, double>& aucs) {
    if (aucs.empty()) throw DataError("rank_machines: no machines");
    Ranking ranking;
    for (const auto& [machine, value] : aucs) {
        if (!std::isfinite(value)) throw DataError("rank_machines: non-finite AUC for " + machine);
        ranking.entries.push_back({machine, value, 0});
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const RankEntry& a, const RankEntry& b) {
                  if (a.auc_value != b.auc_value) return a.auc_value > b.auc_value;
                  return a.machine_type < b.machine_type;
              });
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        ranking.entries[i].rank = static_cast<int>(i + 1);
    }
    for (std::size_t i = 0; i < ranking.entries.size();) {
        std::size_t j = i + 1;
        while (j < ranking.entries.size() &&
               ranking.entries[j].auc_value == ranking.entries[i].auc_value) {
            ++j;
        }
        if (j - i > 1) {
            std::string note =
                "auc " + evaluation_detail::format_double(ranking.entries[i].auc_value) +
                " tied between";
            for (std::size_t k = i; k < j; ++k) {
                note += (k == i ? " " : ", ") + ranking.entries[k].machine_type;
            }
            note += "; broken by identifier";
            ranking.tie_audit.push_back(note);
        }
        i = j;
    }
    return ranking;
}

namespace evaluation_detail {

// Rank vectors of the two rankings over the shared machine list, sorted by
// machine identifier. Throws when the machine sets differ.
inline std::vector<std::pair<int, int>> paired_ranks(const Ranking& a, const Ranking& b) {
    if (a.entries.size() != b.entries.size()) {
        throw DataError("rank_correlation: machine sets differ in size");
    }
    std::map<std::string, int> rank_b;
    for (const RankEntry& e : b.entries) rank_b[e.machine_type] = e.rank;
    std::map<std::string, std::pair<int, int>> by_machine;
    for (const RankEntry& e : a.entries) {
        auto it = rank_b.find(e.machine_type);
        if (it == rank_b.end()) {
            throw DataError("rank_correlation: machine " + e.machine_type +
                            " missing from second ranking");
        }
        by_machine[e.machine_type] = {e.rank, it->second};
    }
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(by_machine.size());
    for (const auto& [machine, ranks] : by_machine) pairs.push_back(ranks);
    return pairs;
}

}  // namespace evaluation_detail

// Spearman's rho on two tie-free rankings: 1 - 6*sum(d^2) / (M(M^2-1)).
inline double spearman_rho(const Ranking& a, const Ranking& b) {
    const auto pairs = evaluation_detail::paired_ranks(a, b);
    const std::size_t m = pairs.size();
    if (m < 2) throw DataError("spearman_rho: need at least 2 machines");
    std::int64_t d2 = 0;
    for (const auto& [ra, rb] : pairs) {
        const std::int64_t d = ra - rb;
        d2 += d * d;
    }
    const double mm = static_cast<double>(m);
    return 1.0 - 6.0 * static_cast<double>(d2) / (mm * (mm * mm - 1.0));
}

// Kendall's tau on two tie-free rankings: (concordant - discordant) pairs
// over M(M-1)/2.
inline double kendall_tau(const Ranking& a, const Ranking& b) {
    const auto pairs = evaluation_detail::paired_ranks(a, b);
    const std::size_t m = pairs.size();
    if (m < 2) throw DataError("kendall_tau: need at least 2 machines");
    std::int64_t concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const int da = pairs[i].first - pairs[j].first;
            const int db = pairs[i].second - pairs[j].second;
            if (da * db > 0) {
                ++concordant;
            } else {
                ++discordant;  // tie-free ranks make da*db == 0 impossible
            }
        }
    }
    return static_cast<double>(concordant - discordant) /
           (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

struct ReportRow {
    std::string machine_type;
    Metric metric = Metric::mse;
    Origin origin = Origin::synthetic;
    double auc_value = 0.0;
    int rank = 0;
};

struct CorrelationEntry {
    Metric metric = Metric::mse;
    bool valid = false;  // false when fewer than 2 machines were ranked
    double spearman = 0.0;
    double kendall = 0.0;
};

struct RankReport {
    std::vector<std::string> machines;           // included, identifier ascending
    std::vector<ReportRow> rows;                 // machine-major, then metric, then origin
    std::vector<CorrelationEntry> correlations;  // one entry per metric
    std::vector<std::string> tie_audit;
    std::vector<std::string> excluded;  // "machine: reason" for dropped machines

    const ReportRow& row(const std::string& machine_type, Metric metric, Origin origin) const {
        for (const ReportRow& r : rows) {
            if (r.machine_type == machine_type && r.metric == metric && r.origin == origin) {
                return r;
            }
        }
        throw DataError("RankReport: no row for " + machine_type);
    }

    const CorrelationEntry& correlation(Metric metric) const {
        for (const CorrelationEntry& c : correlations) {
            if (c.metric == metric) return c;
        }
        throw DataError("RankReport: no correlation entry");
    }
};

namespace evaluation_detail {

struct MachineScores {
    std::vector<double> normal_mse, normal_mahala;
    std::vector<double> synthetic_mse, synthetic_mahala;
    std::vector<double> real_mse, real_mahala;
};

inline const std::vector<double>& class_scores(const MachineScores& s, Metric metric,
                                               Origin origin, bool normals) {
    if (normals) return metric == Metric::mse ? s.normal_mse : s.normal_mahala;
    if (origin == Origin::synthetic) {
        return metric == Metric::mse ? s.synthetic_mse : s.synthetic_mahala;
    }
    return metric == Metric::mse ? s.real_mse : s.real_mahala;
}

}  // namespace evaluation_detail

// Groups score records per machine, computes AUC and rank per metric and
// origin, and correlates the synthetic ranking against the real one. A
// machine missing normals or either anomaly origin is excluded and recorded;
// the caller decides whether exclusions are fatal.
inline RankReport build_report(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw DataError("build_report: no score records");

    std::map<std::string, evaluation_detail::MachineScores> by_machine;
    for (const ScoreRecord& rec : records) {
        if (rec.machine_type.empty()) throw DataError("build_report: record without machine_type");
        if (!std::isfinite(rec.score_mse) || !std::isfinite(rec.score_mahalanobis)) {
            throw DataError("build_report: non-finite score for clip " + rec.clip_id);
        }
        auto& scores = by_machine[rec.machine_type];
        if (rec.label == "normal") {
            scores.normal_mse.push_back(rec.score_mse);
            scores.normal_mahala.push_back(rec.score_mahalanobis);
        } else if (rec.label == "anomalous") {
            if (rec.origin == "synthetic") {
                scores.synthetic_mse.push_back(rec.score_mse);
                scores.synthetic_mahala.push_back(rec.score_mahalanobis);
            } else if (rec.origin == "real" || rec.origin == "surrogate") {
                scores.real_mse.push_back(rec.score_mse);
                scores.real_mahala.push_back(rec.score_mahalanobis);
            } else {
                throw DataError("build_report: unknown origin '" + rec.origin + "' for clip " +
                                rec.clip_id);
            }
        } else {
            throw DataError("build_report: unknown label '" + rec.label + "' for clip " +
                            rec.clip_id);
        }
    }

    RankReport report;
    for (const auto& [machine, scores] : by_machine) {
        if (scores.normal_mse.empty()) {
            report.excluded.push_back(machine + ": no normal scores");
        } else if (scores.synthetic_mse.empty()) {
            report.excluded.push_back(machine + ": no synthetic anomaly scores");
        } else if (scores.real_mse.empty()) {
            report.excluded.push_back(machine + ": no real anomaly scores");
        } else {
            report.machines.push_back(machine);
        }
    }
    if (report.machines.empty()) {
        throw DataError("build_report: every machine is missing a class");
    }

    std::map<std::string, int> ranks[2][2];
    std::map<std::string, double> aucs[2][2];
    for (int mi = 0; mi < 2; ++mi) {
        for (int oi = 0; oi < 2; ++oi) {
            const Metric metric = kAllMetrics[mi];
            const Origin origin = kAllOrigins[oi];
            std::map<std::string, double> per_machine;
            for (const std::string& machine : report.machines) {
                const auto& scores = by_machine.at(machine);
                EvalSet set;
                set.machine_type = machine;
                set.normal_scores = evaluation_detail::class_scores(scores, metric, origin, true);
                set.anomaly_scores =
                    evaluation_detail::class_scores(scores, metric, origin, false);
                set.metric = metric;
                set.origin = origin;
                per_machine[machine] = auc(set);
            }
            Ranking ranking = rank_machines(per_machine);
            for (const std::string& note : ranking.tie_audit) {
                report.tie_audit.push_back(to_string(metric) + "/" + to_string(origin) + ": " +
                                           note);
            }
            for (const RankEntry& e : ranking.entries) {
                ranks[mi][oi][e.machine_type] = e.rank;
                aucs[mi][oi][e.machine_type] = e.auc_value;
            }
        }
    }

    for (const std::string& machine : report.machines) {
        for (int mi = 0; mi < 2; ++mi) {
            for (int oi = 0; oi < 2; ++oi) {
                ReportRow row;
                row.machine_type = machine;
                row.metric = kAllMetrics[mi];
                row.origin = kAllOrigins[oi];
                row.auc_value = aucs[mi][oi].at(machine);
                row.rank = ranks[mi][oi].at(machine);
                report.rows.push_back(row);
            }
        }
    }

    for (int mi = 0; mi < 2; ++mi) {
        CorrelationEntry entry;
        entry.metric = kAllMetrics[mi];
        if (report.machines.size() >= 2) {
            Ranking synthetic, real;
            for (const std::string& machine : report.machines) {
                synthetic.entries.push_back(
                    {machine, aucs[mi][0].at(machine), ranks[mi][0].at(machine)});
                real.entries.push_back({machine, aucs[mi][1].at(machine), ranks[mi][1].at(machine)});
            }
            entry.valid = true;
            entry.spearman = spearman_rho(synthetic, real);
            entry.kendall = kendall_tau(synthetic, real);
        }
        report.correlations.push_back(entry);
    }
    return report;
}

// --- score CSV ---

inline constexpr const char* kScoreCsvHeader =
    "clip_id,machine_type,label,origin,score_mse,score_mahalanobis";

inline void write_score_csv(const std::string& path, const std::vector<ScoreRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_score_csv: cannot open " + path);
    out << kScoreCsvHeader << "\n";
    for (const ScoreRecord& rec : records) {
        out << rec.clip_id << ',' << rec.machine_type << ',' << rec.label << ',' << rec.origin
            << ',' << evaluation_detail::format_double(rec.score_mse) << ','
            << evaluation_detail::format_double(rec.score_mahalanobis) << "\n";
    }
    if (!out.flush()) throw DataError("write_score_csv: write failed for " + path);
}

inline std::vector<ScoreRecord> read_score_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_score_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("read_score_csv: empty file " + path);
    if (line != kScoreCsvHeader) throw DataError("read_score_csv: unexpected header in " + path);
    std::vector<ScoreRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != 6) {
            throw DataError("read_score_csv: malformed row in " + path + ": " + line);
        }
        ScoreRecord rec;
        rec.clip_id = fields[0];
        rec.machine_type = fields[1];
        rec.label = fields[2];
        rec.origin = fields[3];
        try {
            rec.score_mse = std::stod(fields[4]);
            rec.score_mahalanobis = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw DataError("read_score_csv: bad score in " + path + ": " + line);
        }
        records.push_back(rec);
    }
    return records;
}

// --- report emission ---

inline void write_report_csv(const RankReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_report_csv: cannot open " + path);
    out << "machine,metric,origin,auc,rank\n";
    for (const ReportRow& row : report.rows) {
        out << row.machine_type << ',' << to_string(row.metric) << ',' << to_string(row.origin)
            << ',' << evaluation_detail::format_double(row.auc_value) << ',' << row.rank << "\n";
    }
    if (!out.flush()) throw DataError("write_report_csv: write failed for " + path);
}

inline void write_report_md(const RankReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_report_md: cannot open " + path);
    out << "# Detection performance: synthetic vs. real anomalies\n\n";
    out << "| Machine type | Synthetic MSE AUC | Synthetic MAHALA AUC | Synthetic MSE rank | "
           "Synthetic MAHALA rank | Real MSE AUC | Real MAHALA AUC | Real MSE rank | Real "
           "MAHALA rank |\n";
    out << "| --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";
    char buf[32];
    for (const std::string& machine : report.machines) {
        out << "| " << machine;
        for (Origin origin : kAllOrigins) {
            for (Metric metric : kAllMetrics) {
                std::snprintf(buf, sizeof buf, "%.3f",
                              report.row(machine, metric, origin).auc_value);
                out << " | " << buf;
            }
            for (Metric metric : kAllMetrics) {
                out << " | " << report.row(machine, metric, origin).rank;
            }
        }
        out << " |\n";
    }
    out << "\nRank correlation between synthetic and real anomaly rankings:\n\n";
    for (const CorrelationEntry& c : report.correlations) {
        out << "- " << to_string(c.metric) << ": ";
        if (c.valid) {
            std::snprintf(buf, sizeof buf, "%.4f", c.spearman);
            out << "Spearman rho = " << buf;
            std::snprintf(buf, sizeof buf, "%.4f", c.kendall);
            out << ", Kendall tau = " << buf << "\n";
        } else {
            out << "not available (fewer than 2 machines)\n";
        }
    }
    if (!report.tie_audit.empty()) {
        out << "\nTie-break audit:\n\n";
        for (const std::string& note : report.tie_audit) out << "- " << note << "\n";
    }
    if (!report.excluded.empty()) {
        out << "\nExcluded machines:\n\n";
        for (const std::string& note : report.excluded) out << "- " << note << "\n";
    }
    if (!out.flush()) throw DataError("write_report_md: write failed for " + path);
}

inline void write_correlation_json(const RankReport& report, const std::string& path) {
    nlohmann::json doc = nlohmann::json::object();
    for (const CorrelationEntry& c : report.correlations) {
        nlohmann::json entry = nlohmann::json::object();
        if (c.valid) {
            entry["spearman"] = c.spearman;
            entry["kendall"] = c.kendall;
        }
        doc[to_string(c.metric)] = entry;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_correlation_json: cannot open " + path);
    out << doc.dump(2) << "\n";
    if (!out.flush()) throw DataError("write_correlation_json: write failed for " + path);
}

}  // namespace anomarank
