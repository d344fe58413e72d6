#pragma once

/// @file similarity.hpp
/// @brief Exact task similarity (TS) and adjusted task similarity (ATS)
/// between partition-defined distributions.
///
/// Argument order is always (target, source). For every source cell the
/// target marginal mass is split by target Bayes label; TS sums the largest
/// share per source cell, ATS drops cells whose largest share is tied.

#include "tasksim/distributions.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace tasksim {

inline constexpr double kDefaultTieTol = 1e-9;

/// Target-label masses inside one source cell.
struct LabelMassProfile {
    std::size_t source_cell = 0;
    std::vector<double> mass_by_target_label;
    std::vector<Label> argmax_set;
    double cell_total_mass = 0.0;

    [[nodiscard]] double max_mass() const { return mass_by_target_label[static_cast<std::size_t>(argmax_set.front())]; }
    [[nodiscard]] bool unique_argmax() const noexcept { return argmax_set.size() == 1; }
};

struct SimilarityResult {
    double value = 0.0;
    std::vector<LabelMassProfile> per_cell;
    double excluded_mass = 0.0;  ///< mass of tied cells (ATS only)
};

inline void require_same_domain(const PartitionDistribution& a, const PartitionDistribution& b) {
    if (!a.domain().approx_equal(b.domain())) throw DistributionError("distributions live on different domains");
}

/// Per source cell: mass under the target marginal of {x in cell : target Bayes label = y}.
/// Labels within `tie_tol` of the maximum form the argmax set.
inline std::vector<LabelMassProfile> label_mass_profiles(const PartitionDistribution& target,
                                                         const PartitionDistribution& source,
                                                         double tie_tol = kDefaultTieTol) {
    require_same_domain(target, source);
    const auto& sp = source.partition();
    const auto& tp = target.partition();
    std::vector<LabelMassProfile> out(sp.size());
    for (std::size_t s = 0; s < sp.size(); ++s) {
        out[s].source_cell = s;
        out[s].mass_by_target_label.assign(target.num_classes(), 0.0);
    }
    sp.for_each_candidate_pair(tp, [&](std::size_t s, std::size_t t) {
        const double a = intersection_area(sp.cell(s), tp.cell(t));
        if (a <= 0.0) return;
        out[s].mass_by_target_label[static_cast<std::size_t>(target.cell_label(t))] +=
            a / tp.cell(t).area() * target.mass(t);
    });
    for (auto& p : out) {
        double best = 0.0;
        for (double m : p.mass_by_target_label) {
            p.cell_total_mass += m;
            best = std::max(best, m);
        }
        for (std::size_t y = 0; y < p.mass_by_target_label.size(); ++y)
            if (p.mass_by_target_label[y] >= best - tie_tol) p.argmax_set.push_back(static_cast<Label>(y));
    }
    return out;
}

/// Task similarity of `source` to `target`.
inline SimilarityResult ts(const PartitionDistribution& target, const PartitionDistribution& source,
                           double tie_tol = kDefaultTieTol) {
    SimilarityResult r;
    r.per_cell = label_mass_profiles(target, source, tie_tol);
    for (const auto& p : r.per_cell) r.value += p.max_mass();
    return r;
}

/// Adjusted task similarity: cells with a tied argmax contribute nothing.
inline SimilarityResult ats(const PartitionDistribution& target, const PartitionDistribution& source,
                            double tie_tol = kDefaultTieTol) {
    SimilarityResult r;
    r.per_cell = label_mass_profiles(target, source, tie_tol);
    for (const auto& p : r.per_cell) {
        if (p.unique_argmax()) r.value += p.max_mass();
        else r.excluded_mass += p.cell_total_mass;
    }
    return r;
}

inline double symmetric_ts(const PartitionDistribution& a, const PartitionDistribution& b,
                           double tie_tol = kDefaultTieTol) {
    return 0.5 * (ts(a, b, tie_tol).value + ts(b, a, tie_tol).value);
}

inline double symmetric_ats(const PartitionDistribution& a, const PartitionDistribution& b,
                            double tie_tol = kDefaultTieTol) {
    return 0.5 * (ats(a, b, tie_tol).value + ats(b, a, tie_tol).value);
}

/// `source` is adversarial for `target` when ATS(target, source) vanishes.
inline bool is_adversarial(const PartitionDistribution& target, const PartitionDistribution& source,
                           double tie_tol = kDefaultTieTol) {
    return ats(target, source, tie_tol).value <= tie_tol;
}

inline bool are_orthogonal(const PartitionDistribution& a, const PartitionDistribution& b,
                           double tie_tol = kDefaultTieTol) {
    return is_adversarial(a, b, tie_tol) && is_adversarial(b, a, tie_tol);
}

/// Directed matrices; row = target, column = source.
struct SimilarityMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> ts;
    std::vector<std::vector<double>> ats;
};

inline SimilarityMatrix analytic_matrix(const std::vector<PartitionDistribution>& dists,
                                        double tie_tol = kDefaultTieTol) {
    SimilarityMatrix m;
    const std::size_t n = dists.size();
    m.ts.assign(n, std::vector<double>(n, 0.0));
    m.ats.assign(n, std::vector<double>(n, 0.0));
    for (const auto& d : dists) m.names.push_back(d.name());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto r = ats(dists[i], dists[j], tie_tol);
            double total = 0.0;
            for (const auto& p : r.per_cell) total += p.max_mass();
            m.ts[i][j] = total;
            m.ats[i][j] = r.value;
        }
    return m;
}

}  // namespace tasksim
