#include "tasksim/empirical.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace tasksim;

namespace {

const Domain kSquare = box_domain(Box{});

EtsConfig small_config(std::size_t n_train = 1000, std::size_t n_eval = 500) {
    EtsConfig c;
    c.n_train = n_train;
    c.n_eval = n_eval;
    return c;
}

}  // namespace

TEST(Ets, SameModelIsOne) {
    Rng rng = make_rng(1);
    const auto s = sample(builtins::rxor(), 1000, rng);
    const auto m = fit_tree(s, TreeParams{}, kSquare);
    const auto e = ets(m.fn, m.fn, s);
    EXPECT_DOUBLE_EQ(e.value, 1.0);
    EXPECT_EQ(e.agreements, e.n_eval);
}

TEST(Ets, ValueIsAgreementFraction) {
    Rng rng = make_rng(2);
    const auto eval = sample(builtins::xor_dist(), 777, rng);
    const auto a = fit_histogram(sample(builtins::xor_dist(), 500, rng), 2, kSquare);
    const auto b = fit_histogram(sample(builtins::quads(), 500, rng), 3, kSquare);
    const auto e = ets(a.fn, adapt_to_target(b, eval), eval);
    std::size_t agree = 0;
    for (const auto& v : eval) agree += a.predict(v.x) == adapt_to_target(b, eval).predict(v.x);
    EXPECT_EQ(e.agreements, agree);
    EXPECT_EQ(e.value, static_cast<double>(agree) / 777.0);
}

TEST(Ets, RejectsEmptyOrSourceFlaggedEval) {
    Rng rng = make_rng(3);
    const auto s = sample(builtins::xor_dist(), 100, rng);
    const auto m = fit_histogram(s, 2, kSquare);
    EXPECT_THROW(ets(m.fn, m.fn, std::vector<LabeledSample>{}), ExperimentError);
    auto flagged = s;
    flagged[0].t = 0;
    EXPECT_THROW(ets(m.fn, m.fn, flagged), ExperimentError);
}

TEST(Ets, XorVersusQuads) {
    Rng rng = make_rng(4);
    EXPECT_GE(ets_replication(builtins::xor_dist(), builtins::quads(), EtsConfig{}, rng, 4), 0.95);
}

TEST(TransferEfficiency, Arithmetic) {
    EXPECT_DOUBLE_EQ(transfer_efficiency(0.3, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(transfer_efficiency(0.1, 0.2), 0.5);
    EXPECT_THROW(transfer_efficiency(0.1, 0.0), ExperimentError);
}

TEST(Summarize, ConstantStatisticHasZeroWidth) {
    const auto r = run_replications("c", 10, 5, [](std::uint64_t) { return 0.25; });
    EXPECT_DOUBLE_EQ(r.mean, 0.25);
    EXPECT_DOUBLE_EQ(r.ci_half_width, 0.0);
}

TEST(Summarize, NormalInterval) {
    const auto r = summarize("x", {1.0, 2.0, 3.0, 4.0}, {0, 1, 2, 3});
    EXPECT_DOUBLE_EQ(r.mean, 2.5);
    EXPECT_NEAR(r.std_dev, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(r.ci_half_width, 1.645 * std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_THROW(summarize("x", {1.0}, {0}), ExperimentError);
}

TEST(RunReplications, SeedsAreRecordedVerbatim) {
    std::vector<std::uint64_t> seen(7);
    const auto r = run_replications(
        "s", 7, 40, [&](std::uint64_t seed) { return static_cast<double>(seed); }, 3);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(r.seeds[i], 40 + i);
        EXPECT_EQ(r.values[i], static_cast<double>(40 + i));
    }
    EXPECT_THROW(run_replications("s", 1, 0, [](std::uint64_t) { return 0.0; }), ExperimentError);
}

TEST(RunReplications, IntervalShrinksLikeRootR) {
    auto noisy = [](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return uniform01(rng);
    };
    // average the ratio over independent blocks to tame the variance of the sd estimate
    double ratio = 0.0;
    const int blocks = 20;
    for (int b = 0; b < blocks; ++b) {
        const auto r1 = run_replications("u", 200, 100000 * b, noisy);
        const auto r2 = run_replications("u", 400, 100000 * b + 50000, noisy);
        ratio += r2.ci_half_width / r1.ci_half_width;
    }
    EXPECT_NEAR(ratio / blocks, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(RunReplications, ParallelMatchesSerial) {
    auto f = [](std::uint64_t seed) {
        Rng rng = make_rng(seed);
        return ets_replication(builtins::xor_dist(), builtins::rxor(), small_config(), rng, seed);
    };
    const auto a = run_replications("e", 6, 9, f, 1), b = run_replications("e", 6, 9, f, 4);
    EXPECT_EQ(a.values, b.values);
}

TEST(RunReplications, PropagatesErrors) {
    EXPECT_THROW(run_replications(
                     "e", 4, 0, [](std::uint64_t s) -> double { throw ExperimentError(std::to_string(s)); }, 2),
                 ExperimentError);
}

TEST(EtsTrial, TrainAndEvalAreDisjoint) {
    Rng rng = make_rng(10);
    const auto t = draw_ets_trial(builtins::xor_dist(), builtins::quads(), small_config(300, 200), rng);
    EXPECT_EQ(t.train_index.size(), 300u);
    EXPECT_EQ(t.eval_index.size(), 200u);
    std::set<std::size_t> train(t.train_index.begin(), t.train_index.end());
    for (auto i : t.eval_index) EXPECT_FALSE(train.count(i));
    for (const auto& e : t.target_eval)
        for (const auto& s : t.target_train) ASSERT_NE(e.x, s.x);
    for (const auto& s : t.source_train) EXPECT_EQ(s.t, 0);
    for (const auto& s : t.target_train) EXPECT_EQ(s.t, 1);
}

TEST(EtsTrial, InSampleReusesTrainingSet) {
    Rng rng = make_rng(11);
    auto cfg = small_config(300, 200);
    cfg.in_sample = true;
    const auto t = draw_ets_trial(builtins::xor_dist(), builtins::quads(), cfg, rng);
    EXPECT_EQ(t.eval_index, t.train_index);
}

TEST(EmpiricalMatrix, DiagonalAndRange) {
    const std::vector<PartitionDistribution> d{builtins::xor_dist(), builtins::quads(), builtins::rxor(),
                                               builtins::fxor()};
    EtsConfig cfg;
    cfg.learner.tree.max_depth = 8;
    const auto m = empirical_matrix(d, cfg, 5, 1, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_GE(m[i][i].mean, 0.9) << d[i].name();
        for (std::size_t j = 0; j < d.size(); ++j)
            for (double v : m[i][j].values) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
    }
}

TEST(EmpiricalMatrix, QuadsBeatsShuffledGeometryControl) {
    // the control keeps Quads' labels but on a 45-degree rotated geometry
    const auto control = make_uniform_distribution(builtins::rxor().partition(), {0, 1, 2, 3}, 4, "Quads-rotated");
    const std::vector<PartitionDistribution> d{builtins::xor_dist(), builtins::quads(), control};
    const auto m = empirical_matrix(d, small_config(2000, 1000), 10, 2, 0);
    EXPECT_GT(m[0][1].mean, m[0][2].mean);
    EXPECT_TRUE(intervals_disjoint(m[0][1], m[0][2]));
}

TEST(EmpiricalMatrix, ReproducibleUnderSeed) {
    const std::vector<PartitionDistribution> d{builtins::xor_dist(), builtins::rxor()};
    const auto a = empirical_matrix(d, small_config(), 3, 7, 2), b = empirical_matrix(d, small_config(), 3, 7, 1);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(a[i][j].values, b[i][j].values);
}

TEST(TransferStudy, SameDistributionDoesNotHurt) {
    TransferConfig c;
    c.n_source = 3000;
    const auto r = transfer_study(builtins::xor_dist(), builtins::xor_dist(), c, 20, 3, 0);
    EXPECT_LE(r.adapted_risk.mean, r.scratch_risk.mean + r.scratch_risk.ci_half_width + r.adapted_risk.ci_half_width);
}

TEST(TransferStudy, BothOrientationsReported) {
    TransferConfig c;
    c.n_source = 2000;
    const auto r = transfer_study(builtins::xor_dist(), builtins::quads(), c, 10, 4, 0);
    ASSERT_GT(r.adapted_risk.mean, 0.0);
    EXPECT_NEAR(r.efficiency * r.efficiency_reciprocal, 1.0, 1e-12);
    EXPECT_EQ(r.adapted_risk.seeds, r.scratch_risk.seeds);
}

TEST(Convergence, AnalyticColumn) {
    EtsConfig c = small_config(2000, 500);
    c.learner.kind = LearnerConfig::Kind::histogram;
    c.learner.bins = 16;
    const auto rows = convergence_study(builtins::xor_dist(), {1, 2, 3, 4, 5, 7, 9}, c, 3, 1, 0);
    double prev_odd = 0.0;
    for (const auto& r : rows) {
        if (r.grid % 2 == 0) {
            EXPECT_NEAR(r.analytic_ts, 1.0, 1e-12);
        } else {
            const double n = static_cast<double>(r.grid);
            EXPECT_NEAR(r.analytic_ts, ((n - 1) * (n - 1) + (2 * n - 1) / 2) / (n * n), 1e-9);
            EXPECT_GE(r.analytic_ts, prev_odd);
            prev_odd = r.analytic_ts;
        }
        EXPECT_GE(r.ets.mean, 0.0);
        EXPECT_LE(r.ets.mean, 1.0);
    }
    EXPECT_GT(rows.back().ets.mean, rows.front().ets.mean);
}
