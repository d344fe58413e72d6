// Acceptance suite: one PASS/FAIL line per check, exit status 1 if any fail.

#include "oracles.hpp"
#include "tasksim/empirical.hpp"
#include "tasksim/io.hpp"
#include "tasksim/similarity.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>

using namespace tasksim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, double secs, double budget, const std::string& detail) {
    const bool in_time = secs <= budget;
    if (!ok || !in_time) ++failures;
    std::printf("[%s] %d %-24s %7.2fs (budget %.0fs)  %s%s\n", ok && in_time ? "PASS" : "FAIL", id, name, secs, budget,
                detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

PartitionDistribution random_grid(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<Label> labels(n * n);
    for (auto& l : labels) l = static_cast<Label>(uniform_index(rng, k));
    return make_uniform_distribution(make_grid_partition(n), labels, k);
}

PartitionDistribution random_soft_grid(const Partition& grid, std::size_t k, Rng& rng) {
    std::vector<std::vector<double>> probs;
    std::vector<double> mass;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        std::vector<double> p(k);
        for (auto& v : p) v = uniform01(rng);
        p[uniform_index(rng, k)] += 1.0;
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= s;
        probs.push_back(std::move(p));
        mass.push_back(0.1 + uniform01(rng));
    }
    const double s = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (auto& m : mass) m /= s;
    return PartitionDistribution(grid, std::move(probs), std::move(mass));
}

void exact_matrix() {
    const auto t0 = Clock::now();
    const auto X = builtins::xor_dist(), Q = builtins::quads(), R = builtins::rxor(), F = builtins::fxor();
    const auto m = analytic_matrix({X, Q, R, F});
    const double secs = seconds_since(t0);
    // row = target, column = source; order X, Q, R, F
    const bool values = near(m.ats[0][1], 1, 1e-9) && near(m.ats[1][0], 1, 1e-9) && near(m.ats[0][2], 0, 1e-9) &&
                        near(m.ats[2][0], 0, 1e-9) && near(m.ats[0][3], 1, 1e-9) && near(m.ats[3][0], 0, 1e-9) &&
                        near(m.ats[3][2], 0, 1e-9) && near(m.ats[2][3], 0.5, 1e-9);
    const auto raster = oracle::raster(oracle::rxor_label, 2, [](double a, double b) { return oracle::grid_cell(a, b, 4); }, 16);
    const double by_hand = 8 * (0.5 * 0.5) / 4.0;  // 8 unsplit squares of side 1/2 under a uniform marginal on area 4
    const bool oracles = near(raster.ats, m.ats[2][3], 1e-3) && near(by_hand, m.ats[2][3], 1e-12);
    report(1, "exact-matrix", values && oracles, secs, 1,
           "ATS(R-XOR,F-XOR)=" + fmt("%.12f", m.ats[2][3]) + " raster=" + fmt("%.6f", raster.ats) +
               " hand=" + fmt("%.3f", by_hand));
}

void structural_properties() {
    const auto t0 = Clock::now();
    Rng rng = make_rng(2024);
    int bad_a = 0, bad_b = 0, bad_c = 0, bad_d = 0;
    for (int i = 0; i < 200; ++i) {
        const auto a = random_grid(1 + uniform_index(rng, 8), 2 + uniform_index(rng, 3), rng);
        const auto b = random_grid(1 + uniform_index(rng, 8), 2 + uniform_index(rng, 3), rng);
        bad_a += ats(a, b).value > ts(a, b).value;
    }
    for (int i = 0; i < 50; ++i) {
        const auto grid = make_grid_partition(1 + uniform_index(rng, 8));
        const auto a = random_soft_grid(grid, 2 + uniform_index(rng, 3), rng);
        const auto b = random_soft_grid(grid, 2 + uniform_index(rng, 3), rng);
        bad_b += !near(ats(a, b).value, 1, 1e-9) || !near(ats(b, a).value, 1, 1e-9);
    }
    for (const auto& f : {builtins::xor_dist(), builtins::quads(), builtins::fxor()})
        for (std::size_t n = 1; n <= 8; ++n)
            bad_c += ts(f, make_grid_distribution(2 * n)).value < ts(f, make_grid_distribution(n)).value - 1e-12;
    const auto X = builtins::xor_dist();
    for (int n = 1; n <= 31; ++n)
        bad_d += !near(ts(X, make_grid_distribution(static_cast<std::size_t>(n))).value, oracle::ts_xor_grid(n), 1e-9);
    const double mc = oracle::monte_carlo_ts(oracle::xor_label, 2, [](double a, double b) { return oracle::grid_cell(a, b, 3); }, 9,
                                             1000000, 7);
    const bool mc_ok = near(mc, 13.0 / 18.0, 0.01) && near(oracle::ts_xor_grid(3), 13.0 / 18.0, 1e-15);
    std::ostringstream d;
    d << "violations a=" << bad_a << " b=" << bad_b << " c=" << bad_c << " d=" << bad_d << " mc(n=3)=" << fmt("%.4f", mc);
    report(2, "structural-properties", bad_a + bad_b + bad_c + bad_d == 0 && mc_ok, seconds_since(t0), 30, d.str());
}

void invariances() {
    const auto t0 = Clock::now();
    Rng rng = make_rng(99);
    const std::vector<PartitionDistribution> all{builtins::xor_dist(), builtins::quads(), builtins::rxor(),
                                                 builtins::fxor()};
    double worst = 0.0;
    for (const auto& d : all)
        for (int i = 0; i < 20; ++i) {
            std::vector<Label> perm(d.num_classes());
            std::iota(perm.begin(), perm.end(), 0);
            shuffle(perm, rng);
            const auto p = permute_labels(d, perm);
            for (const auto& o : all) {
                worst = std::max({worst, std::abs(ts(p, o).value - ts(d, o).value),
                                  std::abs(ats(p, o).value - ats(d, o).value), std::abs(ts(o, p).value - ts(o, d).value),
                                  std::abs(ats(o, p).value - ats(o, d).value)});
            }
        }
    bool mixed_k = true;
    try {
        (void)ts(all[1], all[0]);
        (void)ats(all[1], all[0]);
        (void)ts(all[0], all[1]);
        (void)ats(all[0], all[1]);
    } catch (const std::exception&) {
        mixed_k = false;
    }
    report(3, "invariances", worst < 1e-12 && mixed_k, seconds_since(t0), 10,
           "max change under permutation=" + fmt("%.3g", worst) + (mixed_k ? " k^T!=k^S ok" : " k^T!=k^S threw"));
}

void rank_order() {
    const auto t0 = Clock::now();
    EtsConfig cfg;
    cfg.learner.tree.max_depth = 2;
    cfg.n_train = 5000;
    cfg.n_eval = 2000;
    const auto X = builtins::xor_dist(), Q = builtins::quads(), R = builtins::rxor();
    auto study = [&](const PartitionDistribution& source) {
        return run_replications(
            "ets", 30, 1,
            [&](std::uint64_t seed) {
                Rng rng = make_rng(seed);
                return ets_replication(X, source, cfg, rng, seed);
            },
            0);
    };
    const auto q = study(Q), r = study(R);
    std::ostringstream d;
    d << "ETS(XOR;Quads)=" << fmt("%.4f", q.mean) << "+-" << fmt("%.4f", q.ci_half_width)
      << " ETS(XOR;R-XOR)=" << fmt("%.4f", r.mean) << "+-" << fmt("%.4f", r.ci_half_width);
    report(4, "rank-order", q.mean > r.mean && intervals_disjoint(q, r), seconds_since(t0), 120, d.str());
}

void overpartitioning() {
    const auto t0 = Clock::now();
    const auto X = builtins::xor_dist(), R = builtins::rxor();
    std::vector<ReplicationReport> reps;
    for (std::size_t depth : {2, 6, 12}) {
        EtsConfig cfg;
        cfg.n_train = 20000;
        cfg.learner.tree.max_depth = depth;
        cfg.learner.tree.split_pure = true;
        reps.push_back(run_replications(
            "ets", 30, 1,
            [&](std::uint64_t seed) {
                Rng rng = make_rng(seed);
                return ets_replication(X, R, cfg, rng, seed);
            },
            0));
    }
    bool ok = reps.back().mean >= 0.8;
    std::ostringstream d;
    d << "depth 2/6/12:";
    for (std::size_t i = 0; i < reps.size(); ++i) {
        d << ' ' << fmt("%.4f", reps[i].mean);
        if (i > 0) {
            const double se = std::hypot(reps[i].std_dev, reps[i - 1].std_dev) / std::sqrt(30.0);
            ok = ok && reps[i].mean >= reps[i - 1].mean - 2 * se;
        }
    }
    report(5, "overpartitioning", ok, seconds_since(t0), 180, d.str());
}

void transfer_sanity() {
    const auto t0 = Clock::now();
    const auto X = builtins::xor_dist(), Q = builtins::quads(), R = builtins::rxor();
    TransferConfig cfg;
    cfg.learner.tree.max_depth = 2;
    cfg.n_source = 5000;
    cfg.n_target = 100;
    auto run = [&](const PartitionDistribution& t, const PartitionDistribution& s) {
        return transfer_study(t, s, cfg, 50, 1, 0);
    };
    bool ok = true;
    std::ostringstream d;
    for (const auto& [t, s] : {std::pair{&X, &Q}, std::pair{&Q, &X}}) {
        const auto r = run(*t, *s);
        ok = ok && r.adapted_risk.mean < r.scratch_risk.mean && intervals_disjoint(r.adapted_risk, r.scratch_risk);
        d << t->name() << "<-" << s->name() << " ratio=" << fmt("%.3f", r.efficiency) << ' ';
    }
    for (const auto& [t, s] : {std::pair{&X, &R}, std::pair{&R, &X}}) {
        const auto r = run(*t, *s);
        ok = ok && r.efficiency >= 0.9 && r.efficiency <= 1.1;
        d << t->name() << "<-" << s->name() << " ratio=" << fmt("%.3f", r.efficiency) << " (adapted "
          << fmt("%.4f", r.adapted_risk.mean) << ", scratch " << fmt("%.4f", r.scratch_risk.mean) << ") ";
    }
    report(6, "transfer-efficiency", ok, seconds_since(t0), 120, d.str());
}

void determinism() {
    namespace fs = std::filesystem;
    const auto t0 = Clock::now();
    const fs::path root = fs::temp_directory_path() / "tasksim_acceptance_determinism";
    fs::remove_all(root);
    const std::string cmd = std::string(TASKSIM_CLI_PATH) + " empirical-matrix --seed 7 --out-dir ";
    bool ok = true;
    for (const char* run : {"a", "b"}) ok = ok && std::system((cmd + (root / run).string() + " > /dev/null").c_str()) == 0;
    std::string detail = ok ? "" : "CLI run failed";
    if (ok)
        for (const char* f : {"ets_mean.csv", "ets_ci90.csv", "ets_replications.csv"}) {
            const bool same = read_text_file((root / "a" / f).string()) == read_text_file((root / "b" / f).string());
            ok = ok && same;
            detail += std::string(f) + (same ? " identical " : " DIFFERS ");
        }
    fs::remove_all(root);
    report(7, "determinism", ok, seconds_since(t0), 600, detail);
}

}  // namespace

int main() {
    exact_matrix();
    structural_properties();
    invariances();
    rank_order();
    overpartitioning();
    transfer_sanity();
    determinism();
    std::printf("%d of 7 failed\n", failures);
    return failures == 0 ? 0 : 1;
}
