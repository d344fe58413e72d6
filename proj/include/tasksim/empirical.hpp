#pragma once

/// @file empirical.hpp
/// @brief Empirical task similarity (ETS), transfer efficiency, and the
/// seeded replication harness.
///
/// Replication i always runs with seed base_seed + i. Matrix entries that
/// share a replication draw from streams derived from (seed, row, column).

#include "tasksim/distributions.hpp"
#include "tasksim/learners.hpp"
#include "tasksim/random.hpp"
#include "tasksim/similarity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tasksim {

class ExperimentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// z-quantile for two-sided 90% normal intervals.
inline constexpr double kZ90 = 1.645;

struct EtsEstimate {
    double value = 0.0;
    std::size_t agreements = 0;
    std::size_t n_eval = 0;
};

/// Agreement fraction between the target model and the adapted source model
/// on target-task patterns.
inline EtsEstimate ets(const ComposeableDecisionFunction& target_model,
                       const ComposeableDecisionFunction& adapted_source, std::span<const LabeledSample> eval) {
    if (eval.empty()) throw ExperimentError("ETS needs at least one evaluation sample");
    EtsEstimate e;
    for (const auto& s : eval) {
        if (s.t != 1) throw ExperimentError("ETS evaluation samples must come from the target task");
        e.agreements += target_model.predict(s.x) == adapted_source.predict(s.x);
    }
    e.n_eval = eval.size();
    e.value = static_cast<double>(e.agreements) / static_cast<double>(e.n_eval);
    return e;
}

/// Ratio of mean target risks, transfer learner over target-only learner.
/// Values below 1 mean the source data helped.
inline double transfer_efficiency(double adapted_risk_mean, double scratch_risk_mean) {
    if (!(scratch_risk_mean > 0.0)) throw ExperimentError("transfer efficiency needs a positive baseline risk");
    if (!(adapted_risk_mean >= 0.0)) throw ExperimentError("risk must be non-negative");
    return adapted_risk_mean / scratch_risk_mean;
}

// ---------------------------------------------------------------------------
// Replications

struct ReplicationReport {
    std::string statistic;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    double mean = 0.0;
    double std_dev = 0.0;        ///< sample standard deviation
    double ci_half_width = 0.0;  ///< kZ90 * std_dev / sqrt(R)

    [[nodiscard]] double lower() const noexcept { return mean - ci_half_width; }
    [[nodiscard]] double upper() const noexcept { return mean + ci_half_width; }
    [[nodiscard]] std::size_t replications() const noexcept { return values.size(); }
};

inline ReplicationReport summarize(std::string statistic, std::vector<double> values,
                                   std::vector<std::uint64_t> seeds = {}) {
    if (values.size() < 2) throw ExperimentError("a confidence interval needs at least 2 replications");
    ReplicationReport r{std::move(statistic), std::move(values), std::move(seeds)};
    const double n = static_cast<double>(r.values.size());
    double s = 0.0;
    for (double v : r.values) s += v;
    r.mean = s / n;
    double ss = 0.0;
    for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
    r.std_dev = std::sqrt(ss / (n - 1.0));
    r.ci_half_width = kZ90 * r.std_dev / std::sqrt(n);
    return r;
}

/// True when the two 90% intervals are disjoint.
inline bool intervals_disjoint(const ReplicationReport& a, const ReplicationReport& b) {
    return a.upper() < b.lower() || b.upper() < a.lower();
}

inline std::size_t default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Runs `task(i)` for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
    if (workers == 0) workers = default_workers();
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// R replications of a multi-valued statistic; replication i uses seed base_seed + i.
inline std::vector<ReplicationReport> run_replications(
    const std::vector<std::string>& statistics, std::size_t replications, std::uint64_t base_seed,
    const std::function<std::vector<double>(std::uint64_t)>& experiment, std::size_t workers = 1) {
    if (replications < 2) throw ExperimentError("a confidence interval needs at least 2 replications");
    std::vector<std::vector<double>> rows(replications);
    parallel_for(replications, workers, [&](std::size_t i) {
        rows[i] = experiment(base_seed + i);
        if (rows[i].size() != statistics.size()) throw ExperimentError("experiment returned the wrong arity");
    });
    std::vector<std::uint64_t> seeds(replications);
    for (std::size_t i = 0; i < replications; ++i) seeds[i] = base_seed + i;
    std::vector<ReplicationReport> out;
    for (std::size_t s = 0; s < statistics.size(); ++s) {
        std::vector<double> v(replications);
        for (std::size_t i = 0; i < replications; ++i) v[i] = rows[i][s];
        out.push_back(summarize(statistics[s], std::move(v), seeds));
    }
    return out;
}

inline ReplicationReport run_replications(const std::string& statistic, std::size_t replications,
                                          std::uint64_t base_seed,
                                          const std::function<double(std::uint64_t)>& experiment,
                                          std::size_t workers = 1) {
    return run_replications(
               {statistic}, replications, base_seed,
               [&](std::uint64_t seed) { return std::vector<double>{experiment(seed)}; }, workers)
        .front();
}

// ---------------------------------------------------------------------------
// ETS experiments on built-in or user distributions

struct EtsConfig {
    LearnerConfig learner{};
    std::size_t n_train = 5000;  ///< per task
    std::size_t n_eval = 2000;   ///< held-out target patterns
    bool in_sample = false;      ///< evaluate on the target training set instead
};

/// Data for one ETS replication. The target pool is split by index:
/// [0, n_train) trains, [n_train, n_train + n_eval) evaluates.
struct EtsTrial {
    std::vector<LabeledSample> source_train;
    std::vector<LabeledSample> target_train;
    std::vector<LabeledSample> target_eval;
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> eval_index;
};

inline EtsTrial draw_ets_trial(const PartitionDistribution& target, const PartitionDistribution& source,
                               const EtsConfig& cfg, Rng& rng) {
    if (cfg.n_train == 0) throw ExperimentError("n_train must be positive");
    if (!cfg.in_sample && cfg.n_eval == 0) throw ExperimentError("n_eval must be positive");
    EtsTrial t;
    t.source_train = sample(source, cfg.n_train, rng, nullptr, 0);
    auto pool = sample(target, cfg.n_train + (cfg.in_sample ? 0 : cfg.n_eval), rng, nullptr, 1);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i < cfg.n_train) {
            t.train_index.push_back(i);
            t.target_train.push_back(pool[i]);
        } else {
            t.eval_index.push_back(i);
            t.target_eval.push_back(pool[i]);
        }
    }
    if (cfg.in_sample) {
        t.eval_index = t.train_index;
        t.target_eval = t.target_train;
    }
    return t;
}

/// Fits target and source models, adapts the source to target training data,
/// and measures agreement on the evaluation split.
inline EtsEstimate ets_from_trial(const EtsTrial& trial, const LearnerConfig& learner, const Domain& domain,
                                  std::size_t target_classes, std::uint64_t seed) {
    const auto target_model = learner.fit(trial.target_train, domain, seed);
    const auto source_model = learner.fit(trial.source_train, domain, seed);
    const auto adapted = adapt_to_target(source_model, trial.target_train, target_classes);
    return ets(target_model.fn, adapted, trial.target_eval);
}

inline double ets_replication(const PartitionDistribution& target, const PartitionDistribution& source,
                              const EtsConfig& cfg, Rng& rng, std::uint64_t seed) {
    const auto trial = draw_ets_trial(target, source, cfg, rng);
    return ets_from_trial(trial, cfg.learner, box_domain(target.domain()), target.num_classes(), seed).value;
}

/// Directed ETS matrix (row = target, column = source) with 90% intervals.
inline std::vector<std::vector<ReplicationReport>> empirical_matrix(const std::vector<PartitionDistribution>& dists,
                                                                    const EtsConfig& cfg, std::size_t replications,
                                                                    std::uint64_t base_seed, std::size_t workers = 1) {
    const std::size_t n = dists.size();
    for (std::size_t i = 1; i < n; ++i) require_same_domain(dists[0], dists[i]);
    std::vector<std::vector<ReplicationReport>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i].push_back(run_replications(
                "ets", replications, base_seed,
                [&](std::uint64_t seed) {
                    Rng rng = make_rng(seed, i, j);
                    return ets_replication(dists[i], dists[j], cfg, rng, seed);
                },
                workers));
    return out;
}

// ---------------------------------------------------------------------------
// Transfer efficiency

struct TransferConfig {
    LearnerConfig learner{};
    std::size_t n_source = 5000;
    std::size_t n_target = 100;
    std::size_t n_eval = 2000;
};

struct TransferReport {
    ReplicationReport adapted_risk;  ///< source transformer, target voter
    ReplicationReport scratch_risk;  ///< target data only
    double efficiency = std::numeric_limits<double>::quiet_NaN();             ///< adapted / scratch
    double efficiency_reciprocal = std::numeric_limits<double>::quiet_NaN();  ///< scratch / adapted
};

/// One replication: {adapted risk, scratch risk} on fresh target data.
inline std::vector<double> transfer_replication(const PartitionDistribution& target,
                                                const PartitionDistribution& source, const TransferConfig& cfg,
                                                Rng& rng, std::uint64_t seed) {
    if (cfg.n_source == 0 || cfg.n_target == 0 || cfg.n_eval == 0)
        throw ExperimentError("sample sizes must be positive");
    const auto domain = box_domain(target.domain());
    const auto src = sample(source, cfg.n_source, rng, nullptr, 0);
    const auto tgt = sample(target, cfg.n_target, rng, nullptr, 1);
    const auto eval = sample(target, cfg.n_eval, rng, nullptr, 1);
    const std::size_t k = target.num_classes();
    const auto source_model = cfg.learner.fit(src, domain, seed);
    const auto adapted = adapt_to_target(source_model, tgt, k);
    const auto scratch = cfg.learner.fit(tgt, domain, seed);
    return {empirical_risk(adapted, eval), empirical_risk(scratch, eval)};
}

inline TransferReport transfer_study(const PartitionDistribution& target, const PartitionDistribution& source,
                                     const TransferConfig& cfg, std::size_t replications, std::uint64_t base_seed,
                                     std::size_t workers = 1) {
    require_same_domain(target, source);
    auto reps = run_replications(
        {"adapted_risk", "scratch_risk"}, replications, base_seed,
        [&](std::uint64_t seed) {
            Rng rng = make_rng(seed);
            return transfer_replication(target, source, cfg, rng, seed);
        },
        workers);
    TransferReport r{std::move(reps[0]), std::move(reps[1])};
    if (r.scratch_risk.mean > 0.0) r.efficiency = transfer_efficiency(r.adapted_risk.mean, r.scratch_risk.mean);
    if (r.adapted_risk.mean > 0.0) r.efficiency_reciprocal = r.scratch_risk.mean / r.adapted_risk.mean;
    return r;
}

// ---------------------------------------------------------------------------
// Convergence against grid-partitioned sources

struct ConvergenceRow {
    std::size_t grid = 0;
    double analytic_ts = 0.0;
    ReplicationReport ets;
};

/// For each n: exact TS(target, grid(n)) and ETS with the source learned by an
/// n-bin histogram. The target model uses `cfg.learner`.
inline std::vector<ConvergenceRow> convergence_study(const PartitionDistribution& target,
                                                     const std::vector<std::size_t>& grids, const EtsConfig& cfg,
                                                     std::size_t replications, std::uint64_t base_seed,
                                                     std::size_t workers = 1) {
    std::vector<ConvergenceRow> rows;
    const auto domain = box_domain(target.domain());
    for (std::size_t gi = 0; gi < grids.size(); ++gi) {
        const std::size_t n = grids[gi];
        const auto source = make_grid_distribution(n, target.domain());
        ConvergenceRow row{n, ts(target, source).value, {}};
        LearnerConfig source_learner;
        source_learner.kind = LearnerConfig::Kind::histogram;
        source_learner.bins = n;
        row.ets = run_replications(
            "ets", replications, base_seed,
            [&](std::uint64_t seed) {
                Rng rng = make_rng(seed, gi, n);
                const auto trial = draw_ets_trial(target, source, cfg, rng);
                const auto target_model = cfg.learner.fit(trial.target_train, domain, seed);
                const auto source_model = source_learner.fit(trial.source_train, domain, seed);
                const auto adapted = adapt_to_target(source_model, trial.target_train, target.num_classes());
                return ets(target_model.fn, adapted, trial.target_eval).value;
            },
            workers);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace tasksim
