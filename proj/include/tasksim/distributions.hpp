#pragma once

/// @file distributions.hpp
/// @brief Classification distributions that are piecewise uniform over a
/// partition of a planar box.
///
/// Each cell carries a probability mass and a class-probability vector. The
/// marginal density is uniform inside a cell, so every integral over a cell
/// reduces to an area ratio. Cells are the optimal partition of the
/// distribution: the Bayes label is constant on each one, and adjacent cells
/// with the same Bayes label are reported by minimality_warnings() rather
/// than merged.

#include "tasksim/geometry.hpp"
#include "tasksim/random.hpp"

#include <cctype>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tasksim {

using Label = int;

class DistributionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A pattern with its label and task flag (0 = source, 1 = target).
struct LabeledSample {
    std::vector<double> x;
    Label y = 0;
    int t = 1;
};

inline constexpr double kProbabilityTol = 1e-9;
inline constexpr double kArgmaxMargin = 1e-12;

namespace detail {

inline Label argmax_lowest(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<Label>(best);
}

}  // namespace detail

class PartitionDistribution {
public:
    PartitionDistribution(Partition partition, std::vector<std::vector<double>> class_probs,
                          std::vector<double> cell_mass, std::string name = {})
        : partition_(std::move(partition)),
          class_probs_(std::move(class_probs)),
          mass_(std::move(cell_mass)),
          name_(std::move(name)) {
        const std::size_t m = partition_.size();
        if (class_probs_.size() != m) throw DistributionError("need one class-probability vector per cell");
        if (mass_.size() != m) throw DistributionError("need one mass value per cell");
        num_classes_ = class_probs_.front().size();
        if (num_classes_ == 0) throw DistributionError("distribution needs at least one class");

        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& p = class_probs_[i];
            if (p.size() != num_classes_) throw DistributionError("class-probability vectors differ in length");
            double s = 0.0;
            for (double q : p) {
                if (!(q >= 0.0) || !std::isfinite(q)) throw DistributionError("class probabilities must be >= 0");
                s += q;
            }
            if (std::abs(s - 1.0) > kProbabilityTol)
                throw DistributionError("class probabilities of cell " + std::to_string(i) + " do not sum to 1");
            const Label best = detail::argmax_lowest(p);
            for (std::size_t c = 0; c < p.size(); ++c)
                if (static_cast<Label>(c) != best && p[static_cast<std::size_t>(best)] - p[c] <= kArgmaxMargin)
                    throw DistributionError("Bayes label of cell " + std::to_string(i) + " is not unique");
            bayes_.push_back(best);
            if (!(mass_[i] >= 0.0) || !std::isfinite(mass_[i])) throw DistributionError("cell mass must be >= 0");
            total += mass_[i];
        }
        if (std::abs(total - 1.0) > kProbabilityTol) throw DistributionError("cell masses do not sum to 1");

        cell_picker_ = Categorical(mass_);
        for (const auto& cell : partition_.cells()) {
            const auto v = cell.vertices();
            std::vector<double> tri;
            for (std::size_t k = 1; k + 1 < v.size(); ++k) tri.push_back(0.5 * cross(v[k] - v[0], v[k + 1] - v[0]));
            triangle_pickers_.emplace_back(tri);
        }
        for (const auto& p : class_probs_) label_pickers_.emplace_back(p);
    }

    [[nodiscard]] const Partition& partition() const noexcept { return partition_; }
    [[nodiscard]] const Box& domain() const noexcept { return partition_.domain(); }
    [[nodiscard]] std::size_t num_cells() const noexcept { return partition_.size(); }
    [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::span<const double> class_probs(std::size_t cell) const { return class_probs_.at(cell); }
    [[nodiscard]] const std::vector<std::vector<double>>& class_probs() const noexcept { return class_probs_; }
    [[nodiscard]] double mass(std::size_t cell) const { return mass_.at(cell); }
    [[nodiscard]] std::span<const double> masses() const noexcept { return mass_; }
    [[nodiscard]] Label cell_label(std::size_t cell) const { return bayes_.at(cell); }

    [[nodiscard]] PartitionDistribution renamed(std::string name) const {
        return PartitionDistribution(partition_, class_probs_, mass_, std::move(name));
    }

    /// Uniform point in `cell` (fan triangulation, area-weighted triangle choice).
    [[nodiscard]] Point2 sample_point(std::size_t cell, Rng& rng) const {
        const auto v = partition_.cell(cell).vertices();
        const std::size_t k = triangle_pickers_[cell](rng) + 1;
        const double r = std::sqrt(uniform01(rng));
        const double s = uniform01(rng);
        return (1.0 - r) * v[0] + (r * (1.0 - s)) * v[k] + (r * s) * v[k + 1];
    }
    [[nodiscard]] std::size_t sample_cell(Rng& rng) const { return cell_picker_(rng); }
    [[nodiscard]] Label sample_label(std::size_t cell, Rng& rng) const {
        return static_cast<Label>(label_pickers_[cell](rng));
    }

private:
    Partition partition_;
    std::vector<std::vector<double>> class_probs_;
    std::vector<double> mass_;
    std::string name_;
    std::size_t num_classes_ = 0;
    std::vector<Label> bayes_;
    Categorical cell_picker_;
    std::vector<Categorical> triangle_pickers_;
    std::vector<Categorical> label_pickers_;
};

/// One-hot labels with mass proportional to cell area.
inline PartitionDistribution make_uniform_distribution(Partition partition, const std::vector<Label>& labels,
                                                       std::size_t num_classes, std::string name = {}) {
    if (labels.size() != partition.size()) throw DistributionError("need one label per cell");
    std::vector<std::vector<double>> probs;
    std::vector<double> mass;
    double total = 0.0;
    for (const auto& c : partition.cells()) total += c.area();
    for (std::size_t i = 0; i < partition.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            throw DistributionError("label out of range");
        std::vector<double> p(num_classes, 0.0);
        p[static_cast<std::size_t>(labels[i])] = 1.0;
        probs.push_back(std::move(p));
        mass.push_back(partition.cell(i).area() / total);
    }
    return PartitionDistribution(std::move(partition), std::move(probs), std::move(mass), std::move(name));
}

/// Grid(n) distribution with checkerboard two-class labels, so that the grid
/// is its optimal partition.
inline PartitionDistribution make_grid_distribution(std::size_t n, const Box& domain = {}) {
    std::vector<Label> labels(n * n);
    for (std::size_t i1 = 0; i1 < n; ++i1)
        for (std::size_t i0 = 0; i0 < n; ++i0) labels[i1 * n + i0] = static_cast<Label>((i0 + i1) % 2);
    return make_uniform_distribution(make_grid_partition(n, domain), labels, n == 1 ? 1 : 2,
                                     "grid(" + std::to_string(n) + ")");
}

/// Bayes label at `x`; boundary points go to the lowest-index containing cell.
inline Label bayes_label(const PartitionDistribution& dist, Point2 x) {
    if (!dist.domain().contains(x)) throw DistributionError("point outside the domain");
    const auto cell = dist.partition().locate(x);
    if (!cell) throw DistributionError("point is not covered by any cell");
    return dist.cell_label(*cell);
}

inline const Partition& optimal_partition(const PartitionDistribution& dist) noexcept { return dist.partition(); }

/// 0-1 risk of the Bayes rule: sum over cells of mass * (1 - max class probability).
inline double bayes_risk(const PartitionDistribution& dist) {
    double r = 0.0;
    for (std::size_t i = 0; i < dist.num_cells(); ++i) {
        const auto p = dist.class_probs(i);
        r += dist.mass(i) * (1.0 - p[static_cast<std::size_t>(dist.cell_label(i))]);
    }
    return r;
}

/// n iid draws; `cells_out`, if given, receives the cell each draw came from.
inline std::vector<LabeledSample> sample(const PartitionDistribution& dist, std::size_t n, Rng& rng,
                                         std::vector<std::size_t>* cells_out = nullptr, int task = 1) {
    std::vector<LabeledSample> out;
    out.reserve(n);
    if (cells_out) cells_out->clear();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = dist.sample_cell(rng);
        const Point2 p = dist.sample_point(c, rng);
        out.push_back({{p.x0, p.x1}, dist.sample_label(c, rng), task});
        if (cells_out) cells_out->push_back(c);
    }
    return out;
}

/// n_source draws flagged t = 0 and n_target draws flagged t = 1, shuffled.
inline std::vector<LabeledSample> sample_transfer(const PartitionDistribution& source,
                                                  const PartitionDistribution& target, std::size_t n_source,
                                                  std::size_t n_target, Rng& rng) {
    auto out = sample(source, n_source, rng, nullptr, 0);
    auto tgt = sample(target, n_target, rng, nullptr, 1);
    out.insert(out.end(), std::make_move_iterator(tgt.begin()), std::make_move_iterator(tgt.end()));
    shuffle(out, rng);
    return out;
}

/// Relabels class c as perm[c]; geometry and masses are unchanged.
inline PartitionDistribution permute_labels(const PartitionDistribution& dist, const std::vector<Label>& perm) {
    const std::size_t k = dist.num_classes();
    if (perm.size() != k) throw DistributionError("permutation size must equal the number of classes");
    std::vector<bool> seen(k, false);
    for (Label l : perm) {
        if (l < 0 || static_cast<std::size_t>(l) >= k || seen[static_cast<std::size_t>(l)])
            throw DistributionError("not a permutation of the class labels");
        seen[static_cast<std::size_t>(l)] = true;
    }
    std::vector<std::vector<double>> probs;
    for (const auto& p : dist.class_probs()) {
        std::vector<double> q(k);
        for (std::size_t c = 0; c < k; ++c) q[static_cast<std::size_t>(perm[c])] = p[c];
        probs.push_back(std::move(q));
    }
    return PartitionDistribution(dist.partition(), std::move(probs), {dist.masses().begin(), dist.masses().end()},
                                 dist.name());
}

/// Edge-adjacent cell pairs sharing a Bayes label. Such pairs belong to one
/// connected part of the Bayes rule, so the stored partition is not minimal.
inline std::vector<std::pair<std::size_t, std::size_t>> minimality_warnings(const PartitionDistribution& dist) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto& p = dist.partition();
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            if (dist.cell_label(i) != dist.cell_label(j)) continue;
            const Box a = p.cell_bbox(i), b = p.cell_bbox(j);
            if (a.xmin > b.xmax + kSnapEps || b.xmin > a.xmax + kSnapEps || a.ymin > b.ymax + kSnapEps ||
                b.ymin > a.ymax + kSnapEps)
                continue;
            if (share_edge(p.cell(i), p.cell(j))) out.emplace_back(i, j);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in distributions on [-1, 1]^2, uniform overall marginal.

namespace builtins {

/// Quadrants in counter-clockwise order starting at (+,+).
inline std::vector<ConvexPolygon> quadrant_cells() {
    return {ConvexPolygon::from_box({0, 1, 0, 1}), ConvexPolygon::from_box({-1, 0, 0, 1}),
            ConvexPolygon::from_box({-1, 0, -1, 0}), ConvexPolygon::from_box({0, 1, -1, 0})};
}

/// Class 0 on (+,+) and (-,-), class 1 on the mixed quadrants.
inline PartitionDistribution xor_dist() {
    return make_uniform_distribution(Partition({}, quadrant_cells()), {0, 1, 0, 1}, 2, "XOR");
}

/// One class per quadrant.
inline PartitionDistribution quads() {
    return make_uniform_distribution(Partition({}, quadrant_cells()), {0, 1, 2, 3}, 4, "Quads");
}

/// XOR with the class regions rotated counter-clockwise by `degrees`;
/// wedge k spans directions [theta + 90k, theta + 90(k+1)].
inline PartitionDistribution rxor(double degrees = 45.0) {
    if (!(degrees >= 0.0 && degrees < 90.0)) throw DistributionError("rotation must lie in [0, 90) degrees");
    const double theta = degrees * std::numbers::pi / 180.0;
    const auto box = ConvexPolygon::from_box({});
    std::vector<ConvexPolygon> cells;
    for (int k = 0; k < 4; ++k) {
        const double a0 = theta + k * std::numbers::pi / 2.0;
        const double a1 = a0 + std::numbers::pi / 2.0;
        const Point2 origin{0.0, 0.0};
        const Point2 d0{std::cos(a0), std::sin(a0)};
        const Point2 d1{std::cos(a1), std::sin(a1)};
        // wedge = left of ray d0 and right of ray d1
        auto wedge = clip(box, HalfPlane::left_of(origin, d0));
        if (wedge) wedge = clip(*wedge, HalfPlane::left_of(d1, origin));
        if (!wedge) throw DistributionError("degenerate rotated wedge");
        cells.push_back(*wedge);
    }
    return make_uniform_distribution(Partition({}, std::move(cells)), {0, 1, 0, 1}, 2, "R-XOR");
}

/// XOR inside each quadrant: a 4 x 4 grid with checkerboard labels.
inline PartitionDistribution fxor() {
    auto grid = make_grid_partition(4, {});
    std::vector<Label> labels(16);
    for (std::size_t i1 = 0; i1 < 4; ++i1)
        for (std::size_t i0 = 0; i0 < 4; ++i0) {
            // same local XOR pattern in every quadrant: class 0 where the
            // in-quadrant signs agree
            const bool local_pos0 = (i0 % 2) == 1;
            const bool local_pos1 = (i1 % 2) == 1;
            labels[i1 * 4 + i0] = local_pos0 == local_pos1 ? 0 : 1;
        }
    return make_uniform_distribution(std::move(grid), labels, 2, "F-XOR");
}

}  // namespace builtins

/// Parses "xor", "quads", "rxor", "rxor:<degrees>", "fxor". Case and hyphens in the name are ignored.
inline PartitionDistribution builtin(std::string_view token) {
    std::string name;
    std::string arg;
    bool in_arg = false;
    for (char ch : token) {
        if (ch == ':' || ch == '(') {
            in_arg = true;
            continue;
        }
        if (in_arg) {
            if (ch != ')') arg.push_back(ch);
            continue;
        }
        if (ch == '-' || ch == '_') continue;
        name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (name == "xor" && arg.empty()) return builtins::xor_dist();
    if (name == "quads" && arg.empty()) return builtins::quads();
    if (name == "fxor" && arg.empty()) return builtins::fxor();
    if (name == "rxor") {
        if (arg.empty()) return builtins::rxor();
        std::size_t used = 0;
        double deg = 0.0;
        try {
            deg = std::stod(arg, &used);
        } catch (const std::exception&) {
            throw DistributionError("bad rotation in '" + std::string(token) + "'");
        }
        if (used != arg.size()) throw DistributionError("bad rotation in '" + std::string(token) + "'");
        auto d = builtins::rxor(deg);
        return deg == 45.0 ? d : d.renamed("R-XOR(" + arg + ")");
    }
    throw DistributionError("unknown built-in distribution '" + std::string(token) + "'");
}

}  // namespace tasksim
