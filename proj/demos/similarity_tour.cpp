// Exact similarities between the built-in distributions and a user-defined one.
//
//   similarity_tour [distribution.json]

#include "tasksim/io.hpp"
#include "tasksim/similarity.hpp"

#include <cstdio>

using namespace tasksim;

namespace {

void print_matrix(const char* title, const SimilarityMatrix& m, const std::vector<std::vector<double>>& v) {
    std::printf("%s (row = target, column = source)\n%10s", title, "");
    for (const auto& n : m.names) std::printf("%10s", n.c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::printf("%10s", m.names[i].c_str());
        for (double x : v[i]) std::printf("%10.4f", x);
        std::printf("\n");
    }
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<PartitionDistribution> dists{builtins::xor_dist(), builtins::quads(), builtins::rxor(),
                                             builtins::fxor()};
    if (argc > 1) dists.push_back(load_distribution(argv[1]));

    const auto m = analytic_matrix(dists);
    print_matrix("TS", m, m.ts);
    print_matrix("ATS", m, m.ats);

    // Where the mass of R-XOR's labels falls inside each F-XOR square.
    const auto r = ats(dists[2], dists[3]);
    std::printf("ATS(R-XOR, F-XOR) = %.6f, tied mass = %.6f\n", r.value, r.excluded_mass);
    for (const auto& p : r.per_cell)
        std::printf("  cell %2zu  label masses (%.4f, %.4f)%s\n", p.source_cell, p.mass_by_target_label[0],
                    p.mass_by_target_label[1], p.unique_argmax() ? "" : "  tied");

    std::printf("\nXOR and R-XOR orthogonal: %s\n", are_orthogonal(dists[0], dists[2]) ? "yes" : "no");
    std::printf("XOR adversarial for F-XOR: %s\n", is_adversarial(dists[3], dists[0]) ? "yes" : "no");

    // Finer grids approach the target's optimal partition.
    std::printf("\nTS(XOR, grid(n)):");
    for (std::size_t n = 1; n <= 9; ++n) std::printf(" %.4f", ts(dists[0], make_grid_distribution(n)).value);
    std::printf("\n");
    if (argc > 1) std::printf("Bayes risk of %s: %.4f\n", dists.back().name().c_str(), bayes_risk(dists.back()));
}
