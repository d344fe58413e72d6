// Empirical similarity and transfer efficiency for a few source/target pairs.
//
//   transfer_study [replications] [seed]

#include "tasksim/empirical.hpp"

#include <cstdio>
#include <cstdlib>

using namespace tasksim;

int main(int argc, char** argv) {
    const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;

    const auto X = builtins::xor_dist(), Q = builtins::quads(), R = builtins::rxor();
    const std::vector<std::pair<const PartitionDistribution*, const PartitionDistribution*>> pairs{
        {&X, &Q}, {&X, &R}, {&X, &X}};

    EtsConfig ets_cfg;
    TransferConfig te_cfg;
    std::printf("%-8s %-8s %16s %16s %16s %8s\n", "target", "source", "ETS", "adapted risk", "scratch risk",
                "ratio");
    for (const auto& [t, s] : pairs) {
        const auto e = run_replications(
            "ets", reps, seed,
            [&](std::uint64_t sd) {
                Rng rng = make_rng(sd);
                return ets_replication(*t, *s, ets_cfg, rng, sd);
            },
            0);
        const auto te = transfer_study(*t, *s, te_cfg, reps, seed, 0);
        std::printf("%-8s %-8s %8.4f+-%.4f %8.4f+-%.4f %8.4f+-%.4f %8.3f\n", t->name().c_str(), s->name().c_str(),
                    e.mean, e.ci_half_width, te.adapted_risk.mean, te.adapted_risk.ci_half_width,
                    te.scratch_risk.mean, te.scratch_risk.ci_half_width, te.efficiency);
    }
}
