#pragma once

/// @file cli.hpp
/// @brief The `tasksim` command-line driver.
///
/// Commands: analytic-matrix, empirical-matrix, convergence,
/// transfer-efficiency, ets-csv, validate. Exit codes: 0 success,
/// 1 runtime failure, 2 invalid input. Every command writes its outputs plus
/// a `<command>.meta.json` sidecar (config, config hash, version, outputs)
/// into --out-dir. Outputs contain no timestamps, so a fixed --seed gives
/// byte-identical files.

#include "tasksim/distributions.hpp"
#include "tasksim/empirical.hpp"
#include "tasksim/io.hpp"
#include "tasksim/learners.hpp"
#include "tasksim/similarity.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef TASKSIM_VERSION
#define TASKSIM_VERSION "0.0.0"
#endif
#ifndef TASKSIM_GIT_DESCRIBE
#define TASKSIM_GIT_DESCRIBE "unknown"
#endif

namespace tasksim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;

inline std::string version_string() { return std::string("tasksim ") + TASKSIM_VERSION + "-" + TASKSIM_GIT_DESCRIBE; }

/// Every knob any command reads. Unused fields are ignored by a command.
struct ExperimentConfig {
    std::vector<std::string> distributions{"xor", "quads", "rxor", "fxor"};
    std::string learner = "tree";
    std::size_t depth = 8;
    std::size_t min_leaf = 1;
    std::size_t bins = 2;
    bool overpartition = false;
    std::size_t n_train = 5000;
    std::size_t n_eval = 2000;
    std::size_t n_source = 5000;
    std::vector<std::size_t> n_target{100};
    std::size_t replications = 30;
    std::optional<std::uint64_t> seed;
    double tie_tol = kDefaultTieTol;
    bool in_sample = false;
    double train_fraction = 0.7;
    std::string target = "xor";
    std::vector<std::size_t> grids{1, 2, 3, 4, 5, 6, 7, 8};
    std::string target_csv;
    std::vector<std::string> source_csvs;
    std::string out_dir = ".";
    std::vector<std::string> formats{"csv"};
    std::size_t workers = 0;

    [[nodiscard]] LearnerConfig learner_config() const {
        LearnerConfig c;
        if (learner == "histogram") c.kind = LearnerConfig::Kind::histogram;
        else if (learner != "tree") throw InputError("unknown learner '" + learner + "'");
        c.tree.max_depth = depth;
        c.tree.min_leaf = min_leaf;
        c.tree.split_pure = overpartition;
        c.bins = bins;
        return c;
    }

    [[nodiscard]] bool wants(const std::string& fmt) const {
        return std::find(formats.begin(), formats.end(), fmt) != formats.end();
    }
};

inline json config_to_json(const ExperimentConfig& c) {
    return {{"distributions", c.distributions},
            {"learner", c.learner},
            {"depth", c.depth},
            {"min_leaf", c.min_leaf},
            {"bins", c.bins},
            {"overpartition", c.overpartition},
            {"n_train", c.n_train},
            {"n_eval", c.n_eval},
            {"n_source", c.n_source},
            {"n_target", c.n_target},
            {"replications", c.replications},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"tie_tol", c.tie_tol},
            {"in_sample", c.in_sample},
            {"train_fraction", c.train_fraction},
            {"target", c.target},
            {"grids", c.grids},
            {"target_csv", c.target_csv},
            {"source_csvs", c.source_csvs},
            {"formats", c.formats}};
}

/// FNV-1a over the canonical config dump.
inline std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Output helpers

class OutputDir {
public:
    explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory '" + dir_ + "'");
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = std::filesystem::path(dir_) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        out << content;
        written_.push_back(name);
    }

    void write_sidecar(const std::string& command, const ExperimentConfig& cfg, json extra = json::object()) {
        const json config = config_to_json(cfg);
        json meta{{"command", command},
                  {"version", version_string()},
                  {"config", config},
                  {"config_hash", config_hash(config)},
                  {"outputs", written_}};
        for (auto& [k, v] : extra.items()) meta[k] = v;
        write(command + ".meta.json", meta.dump(2) + "\n");
    }

    [[nodiscard]] const std::vector<std::string>& written() const noexcept { return written_; }

private:
    std::string dir_;
    std::vector<std::string> written_;
};

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string matrix_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& m) {
    std::ostringstream out;
    out << "target\\source";
    for (const auto& n : names) out << ',' << csv_escape(n);
    out << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << csv_escape(names[i]);
        for (double v : m[i]) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

/// Heatmap with the color scale pinned to [0, 1].
inline std::string heatmap_svg(const std::string& title, const std::vector<std::string>& names,
                               const std::vector<std::vector<double>>& m) {
    const int cell = 70, left = 90, top = 60;
    const int n = static_cast<int>(names.size());
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + n * cell + 20 << "\" height=\""
      << top + n * cell + 20 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << " (row = target, column = source)</text>\n";
    for (int j = 0; j < n; ++j)
        s << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
          << names[static_cast<std::size_t>(j)] << "</text>\n";
    for (int i = 0; i < n; ++i) {
        s << "<text x=\"" << left - 8 << "\" y=\"" << top + i * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
          << names[static_cast<std::size_t>(i)] << "</text>\n";
        for (int j = 0; j < n; ++j) {
            const double v = std::clamp(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0, 1.0);
            const int r = static_cast<int>(255 * (1.0 - v)), g = static_cast<int>(255 * (1.0 - 0.6 * v)),
                      b = 255;
            char val[16];
            std::snprintf(val, sizeof val, "%.2f", m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            s << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"rgb(" << r << ',' << g << ',' << b
              << ")\" stroke=\"white\"/>\n";
            s << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top + i * cell + cell / 2 + 4
              << "\" text-anchor=\"middle\">" << val << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

inline PartitionDistribution resolve_distribution(const std::string& token) {
    const bool is_file = token.find('/') != std::string::npos || token.find('.') != std::string::npos;
    if (is_file && token.rfind("rxor", 0) != 0) return load_distribution(token);
    try {
        return builtin(token);
    } catch (const DistributionError& e) {
        throw InputError(e.what());
    }
}

inline std::vector<PartitionDistribution> resolve_distributions(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw InputError("no distributions given");
    std::vector<PartitionDistribution> out;
    for (const auto& s : tokens) out.push_back(resolve_distribution(s));
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!out[0].domain().approx_equal(out[i].domain()))
            throw InputError("distributions '" + out[0].name() + "' and '" + out[i].name() + "' differ in domain");
    return out;
}

inline std::uint64_t require_seed(const ExperimentConfig& c) {
    if (!c.seed) throw InputError("--seed is required for empirical commands");
    return *c.seed;
}

inline json report_to_json(const ReplicationReport& r) {
    return {{"statistic", r.statistic}, {"mean", r.mean},           {"std_dev", r.std_dev},
            {"ci90_half_width", r.ci_half_width}, {"values", r.values}, {"seeds", r.seeds}};
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_analytic_matrix(const ExperimentConfig& cfg, std::ostream& log) {
    const auto dists = resolve_distributions(cfg.distributions);
    const auto m = analytic_matrix(dists, cfg.tie_tol);
    OutputDir out(cfg.out_dir);
    if (cfg.wants("csv") || cfg.formats.empty()) {
        out.write("ts.csv", matrix_csv(m.names, m.ts));
        out.write("ats.csv", matrix_csv(m.names, m.ats));
    }
    if (cfg.wants("json")) {
        json pairs = json::array();
        for (std::size_t i = 0; i < dists.size(); ++i)
            for (std::size_t j = 0; j < dists.size(); ++j) {
                const auto r = ats(dists[i], dists[j], cfg.tie_tol);
                json cells = json::array();
                for (const auto& p : r.per_cell)
                    cells.push_back({{"source_cell", p.source_cell},
                                     {"mass_by_target_label", p.mass_by_target_label},
                                     {"argmax_set", p.argmax_set},
                                     {"cell_total_mass", p.cell_total_mass}});
                pairs.push_back({{"target", m.names[i]},
                                 {"source", m.names[j]},
                                 {"ts", m.ts[i][j]},
                                 {"ats", m.ats[i][j]},
                                 {"excluded_mass", r.excluded_mass},
                                 {"per_cell", std::move(cells)}});
            }
        out.write("analytic.json", json{{"names", m.names}, {"ts", m.ts}, {"ats", m.ats}, {"pairs", pairs}}.dump(2) +
                                       "\n");
    }
    if (cfg.wants("svg")) {
        out.write("ts.svg", heatmap_svg("TS", m.names, m.ts));
        out.write("ats.svg", heatmap_svg("ATS", m.names, m.ats));
    }
    out.write_sidecar("analytic-matrix", cfg);
    log << matrix_csv(m.names, m.ats);
    return kExitOk;
}

inline int cmd_empirical_matrix(const ExperimentConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    const auto dists = resolve_distributions(cfg.distributions);
    EtsConfig ets_cfg{cfg.learner_config(), cfg.n_train, cfg.n_eval, cfg.in_sample};
    const auto reports = empirical_matrix(dists, ets_cfg, cfg.replications, seed, cfg.workers);

    std::vector<std::string> names;
    for (const auto& d : dists) names.push_back(d.name());
    const std::size_t n = dists.size();
    std::vector<std::vector<double>> mean(n, std::vector<double>(n)), ci(n, std::vector<double>(n));
    std::ostringstream reps;
    reps << "target,source,replication,seed,ets\n";
    json entries = json::array();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto& r = reports[i][j];
            mean[i][j] = r.mean;
            ci[i][j] = r.ci_half_width;
            for (std::size_t k = 0; k < r.values.size(); ++k)
                reps << csv_escape(names[i]) << ',' << csv_escape(names[j]) << ',' << k << ',' << r.seeds[k] << ','
                     << format_double(r.values[k]) << '\n';
            json e = report_to_json(r);
            e["target"] = names[i];
            e["source"] = names[j];
            entries.push_back(std::move(e));
        }
    OutputDir out(cfg.out_dir);
    out.write("ets_mean.csv", matrix_csv(names, mean));
    out.write("ets_ci90.csv", matrix_csv(names, ci));
    out.write("ets_replications.csv", reps.str());
    const json config = config_to_json(cfg);
    out.write("empirical.json",
              json{{"names", names}, {"config_hash", config_hash(config)}, {"entries", entries}}.dump(2) + "\n");
    if (cfg.wants("svg")) out.write("ets.svg", heatmap_svg("ETS", names, mean));
    out.write_sidecar("empirical-matrix", cfg);
    log << matrix_csv(names, mean);
    return kExitOk;
}

inline int cmd_convergence(const ExperimentConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    const auto target = resolve_distribution(cfg.target);
    if (cfg.grids.empty()) throw InputError("no grid sizes given");
    for (auto g : cfg.grids)
        if (g == 0) throw InputError("grid sizes must be positive");
    EtsConfig ets_cfg{cfg.learner_config(), cfg.n_train, cfg.n_eval, cfg.in_sample};
    const auto rows = convergence_study(target, cfg.grids, ets_cfg, cfg.replications, seed, cfg.workers);
    std::ostringstream csv;
    csv << "n,max_cell_diameter,analytic_ts,ets_mean,ets_ci90_half_width\n";
    for (const auto& r : rows) {
        const double diam = make_grid_partition(r.grid, target.domain()).max_cell_diameter();
        csv << r.grid << ',' << format_double(diam) << ',' << format_double(r.analytic_ts) << ','
            << format_double(r.ets.mean) << ',' << format_double(r.ets.ci_half_width) << '\n';
    }
    OutputDir out(cfg.out_dir);
    out.write("convergence.csv", csv.str());
    out.write_sidecar("convergence", cfg);
    log << csv.str();
    return kExitOk;
}

inline int cmd_transfer_efficiency(const ExperimentConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    const auto dists = resolve_distributions(cfg.distributions);
    if (cfg.n_target.empty()) throw InputError("no target sample sizes given");
    std::ostringstream csv, reps;
    csv << "target,source,n_target,n_source,adapted_risk_mean,adapted_risk_ci90,scratch_risk_mean,"
           "scratch_risk_ci90,baseline_accuracy,te_adapted_over_scratch,te_scratch_over_adapted\n";
    reps << "target,source,n_target,replication,seed,adapted_risk,scratch_risk\n";
    auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
    for (const auto& target : dists)
        for (const auto& source : dists)
            for (std::size_t nt : cfg.n_target) {
                TransferConfig tc{cfg.learner_config(), cfg.n_source, nt, cfg.n_eval};
                const auto r = transfer_study(target, source, tc, cfg.replications, seed, cfg.workers);
                csv << csv_escape(target.name()) << ',' << csv_escape(source.name()) << ',' << nt << ','
                    << cfg.n_source << ',' << num(r.adapted_risk.mean) << ',' << num(r.adapted_risk.ci_half_width)
                    << ',' << num(r.scratch_risk.mean) << ',' << num(r.scratch_risk.ci_half_width) << ','
                    << num(1.0 - r.scratch_risk.mean) << ',' << num(r.efficiency) << ','
                    << num(r.efficiency_reciprocal) << '\n';
                for (std::size_t k = 0; k < r.adapted_risk.values.size(); ++k)
                    reps << csv_escape(target.name()) << ',' << csv_escape(source.name()) << ',' << nt << ',' << k
                         << ',' << r.adapted_risk.seeds[k] << ',' << num(r.adapted_risk.values[k]) << ','
                         << num(r.scratch_risk.values[k]) << '\n';
            }
    OutputDir out(cfg.out_dir);
    out.write("transfer_efficiency.csv", csv.str());
    out.write("transfer_replications.csv", reps.str());
    out.write_sidecar("transfer-efficiency", cfg);
    log << csv.str();
    return kExitOk;
}

/// Relabels y to 0..k-1 in increasing order of the original labels.
inline std::size_t dense_code_labels(std::vector<LabeledSample>& rows) {
    std::map<Label, Label> code;
    for (const auto& r : rows) code.emplace(r.y, 0);
    Label next = 0;
    for (auto& [k, v] : code) v = next++;
    for (auto& r : rows) r.y = code[r.y];
    return code.size();
}

struct RankedSource {
    std::string path;
    EtsEstimate estimate;
};

/// Trains per-task models and ranks source files by ETS against the target file.
inline std::vector<RankedSource> rank_sources(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.target_csv.empty()) throw InputError("--target-csv is required");
    if (cfg.source_csvs.empty()) throw InputError("at least one --source-csv is required");
    auto load = [](const std::string& path, int task) {
        auto rows = read_samples_csv(path);
        if (rows.empty()) throw InputError("'" + path + "' has no samples");
        for (auto& r : rows) r.t = task;
        if (dense_code_labels(rows) < 2) throw InputError("'" + path + "' has fewer than 2 classes");
        return rows;
    };
    auto target = load(cfg.target_csv, 1);
    std::vector<std::vector<LabeledSample>> sources;
    for (const auto& p : cfg.source_csvs) sources.push_back(load(p, 0));
    const std::size_t dim = target.front().x.size();
    for (std::size_t s = 0; s < sources.size(); ++s)
        if (sources[s].front().x.size() != dim)
            throw InputError("'" + cfg.source_csvs[s] + "' has dimension " +
                             std::to_string(sources[s].front().x.size()) + ", target has " + std::to_string(dim));

    std::vector<LabeledSample> all = target;
    for (const auto& s : sources) all.insert(all.end(), s.begin(), s.end());
    const Domain domain = bounding_domain(all);

    Rng rng = make_rng(seed);
    std::vector<std::size_t> order(target.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    std::vector<LabeledSample> train, eval;
    if (cfg.in_sample) {
        train = target;
        eval = target;
    } else {
        if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
            throw InputError("--train-fraction must lie in (0, 1)");
        const auto n_train = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(target.size()))), 1,
            target.size() - 1);
        if (target.size() < 2) throw InputError("target needs at least 2 samples for a held-out split");
        for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? train : eval).push_back(target[order[i]]);
    }
    const std::size_t k = num_classes_of(target);
    const auto learner = cfg.learner_config();
    const auto target_model = learner.fit(train, domain, seed);
    std::vector<RankedSource> ranked;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto source_model = learner.fit(sources[s], domain, seed);
        const auto adapted = adapt_to_target(source_model, train, k);
        ranked.push_back({cfg.source_csvs[s], ets(target_model.fn, adapted, eval)});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedSource& a, const RankedSource& b) { return a.estimate.value > b.estimate.value; });
    return ranked;
}

inline int cmd_ets_csv(const ExperimentConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    const auto ranked = rank_sources(cfg, seed);
    std::ostringstream csv;
    csv << "rank,source,ets,agreements,n_eval\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
        csv << i + 1 << ',' << csv_escape(ranked[i].path) << ',' << format_double(ranked[i].estimate.value) << ','
            << ranked[i].estimate.agreements << ',' << ranked[i].estimate.n_eval << '\n';
    OutputDir out(cfg.out_dir);
    out.write("ets_ranking.csv", csv.str());
    out.write_sidecar("ets-csv", cfg);
    log << csv.str();
    return kExitOk;
}

/// Lints a partition or distribution JSON file. Exit 2 when it does not tile its domain.
inline int cmd_validate(const std::string& path, double tol, std::ostream& log) {
    const json j = parse_json_file(path);
    const bool is_dist = j.contains("labels");
    const Partition p = partition_from_json(j);
    const auto d = validate_partition(p, tol);
    log << "cells: " << p.size() << "\ncoverage_gap: " << format_double(d.coverage_gap)
        << "\nmax_overlap: " << format_double(d.max_overlap);
    if (d.max_overlap > 0.0) log << " (cells " << d.overlap_i << ", " << d.overlap_j << ")";
    log << "\noutside_area: " << format_double(d.outside_area) << '\n';
    if (is_dist) {
        const auto dist = distribution_from_json(j);
        log << "classes: " << dist.num_classes() << "\nbayes_risk: " << format_double(bayes_risk(dist)) << '\n';
        for (const auto& [a, b] : minimality_warnings(dist))
            log << "warning: cells " << a << " and " << b
                << " share an edge and a Bayes label; the partition is not minimal\n";
    }
    log << (d.ok ? "ok" : "invalid: cells do not tile the domain") << '\n';
    return d.ok ? kExitOk : kExitInput;
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Task similarity between partition-defined classification distributions", "tasksim"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    ExperimentConfig cfg;
    std::string validate_path;
    double validate_tol = kAreaEps;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out-dir", cfg.out_dir, "Output directory");
        sub->add_option("--format", cfg.formats, "Output formats: csv, json, svg")
            ->check(CLI::IsMember({"csv", "json", "svg"}))
            ->delimiter(',');
    };
    auto add_learner = [&](CLI::App* sub) {
        sub->add_option("--learner", cfg.learner, "tree or histogram")->check(CLI::IsMember({"tree", "histogram"}));
        sub->add_option("--depth", cfg.depth, "Tree max depth");
        sub->add_option("--min-leaf", cfg.min_leaf, "Tree min samples per leaf")->check(CLI::PositiveNumber);
        sub->add_option("--bins", cfg.bins, "Histogram bins per dimension")->check(CLI::PositiveNumber);
        sub->add_flag("--overpartition", cfg.overpartition, "Trees keep splitting pure nodes up to --depth");
        sub->add_option("--seed", seed_value, "Base seed (replication i uses seed + i)")->required();
        sub->add_option("--replications", cfg.replications, "Replications per statistic")
            ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
        sub->add_option("--workers", cfg.workers, "Worker threads (0 = logical cores)");
    };

    auto* analytic = app.add_subcommand("analytic-matrix", "Exact directed TS and ATS matrices");
    analytic->add_option("--dist", cfg.distributions, "Built-in name (xor, quads, rxor[:deg], fxor) or JSON path");
    analytic->add_option("--tie-tol", cfg.tie_tol, "Absolute mass tolerance for argmax ties");
    add_common(analytic);

    auto* empirical = app.add_subcommand("empirical-matrix", "Directed ETS matrix with 90% intervals");
    empirical->add_option("--dist", cfg.distributions, "Built-in name or JSON path");
    empirical->add_option("--n-train", cfg.n_train, "Training samples per task")->check(CLI::PositiveNumber);
    empirical->add_option("--n-eval", cfg.n_eval, "Held-out target samples")->check(CLI::PositiveNumber);
    empirical->add_flag("--in-sample", cfg.in_sample, "Measure agreement on the target training set");
    add_learner(empirical);
    add_common(empirical);

    auto* convergence = app.add_subcommand("convergence", "TS and ETS against n x n grid sources");
    convergence->add_option("--target", cfg.target, "Target distribution");
    convergence->add_option("--grids", cfg.grids, "Grid sizes")->delimiter(',');
    convergence->add_option("--n-train", cfg.n_train, "Training samples per task")->check(CLI::PositiveNumber);
    convergence->add_option("--n-eval", cfg.n_eval, "Held-out target samples")->check(CLI::PositiveNumber);
    add_learner(convergence);
    add_common(convergence);

    auto* te = app.add_subcommand("transfer-efficiency", "Adapted vs target-only risk for every ordered pair");
    te->add_option("--dist", cfg.distributions, "Built-in name or JSON path");
    te->add_option("--n-source", cfg.n_source, "Source samples")->check(CLI::PositiveNumber);
    te->add_option("--n-target", cfg.n_target, "Target sample sizes")->delimiter(',');
    te->add_option("--n-eval", cfg.n_eval, "Fresh target samples for risk")->check(CLI::PositiveNumber);
    add_learner(te);
    add_common(te);

    auto* ets_csv = app.add_subcommand("ets-csv", "Rank source datasets by ETS to a target dataset");
    ets_csv->add_option("--target-csv", cfg.target_csv, "Target samples (f0..fd-1,y,t)")->required();
    ets_csv->add_option("--source-csv", cfg.source_csvs, "Source samples, repeatable")->required();
    ets_csv->add_option("--train-fraction", cfg.train_fraction, "Target training fraction");
    ets_csv->add_flag("--in-sample", cfg.in_sample, "Measure agreement on the target training set");
    add_learner(ets_csv);
    add_common(ets_csv);

    auto* validate = app.add_subcommand("validate", "Lint a partition or distribution JSON file");
    validate->add_option("path", validate_path, "JSON file")->required();
    validate->add_option("--tol", validate_tol, "Area tolerance");

    // empirical commands default to more replications than the 2-minimum
    const std::size_t te_default_reps = 50;
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }
    cfg.seed = seed_value;
    if (te->parsed() && te->count("--replications") == 0) cfg.replications = te_default_reps;
    if (convergence->parsed() && convergence->count("--bins") == 0) cfg.bins = 16;
    if (convergence->parsed() && convergence->count("--learner") == 0) cfg.learner = "histogram";

    try {
        if (analytic->parsed()) return cmd_analytic_matrix(cfg, out);
        if (empirical->parsed()) return cmd_empirical_matrix(cfg, out);
        if (convergence->parsed()) return cmd_convergence(cfg, out);
        if (te->parsed()) return cmd_transfer_efficiency(cfg, out);
        if (ets_csv->parsed()) return cmd_ets_csv(cfg, out);
        if (validate->parsed()) return cmd_validate(validate_path, validate_tol, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace tasksim::cli
