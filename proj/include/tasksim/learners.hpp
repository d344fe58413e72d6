#pragma once

/// @file learners.hpp
/// @brief Partition-inducing learners written as composeable decision
/// functions: a transformer maps a pattern to a region id, a voter maps a
/// region to a class-probability vector, and a decider maps that vector to a
/// label.
///
/// Two transformers are provided: a histogram (regular grid over a box) and
/// an axis-aligned binary tree grown greedily on Gini impurity. Adaptation to
/// a new task keeps the transformer and refits voter and decider.

#include "tasksim/distributions.hpp"
#include "tasksim/geometry.hpp"
#include "tasksim/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tasksim {

class LearnerError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Interval {
    double lo = -1.0;
    double hi = 1.0;
    constexpr bool operator==(const Interval&) const = default;
};

/// Per-dimension bounds of the input space.
using Domain = std::vector<Interval>;

inline Domain box_domain(const Box& b) { return {{b.xmin, b.xmax}, {b.ymin, b.ymax}}; }

/// Bounding box of the samples; degenerate dimensions are widened by 0.5 each side.
inline Domain bounding_domain(std::span<const LabeledSample> samples) {
    if (samples.empty()) throw LearnerError("cannot bound an empty sample");
    Domain d(samples.front().x.size(), Interval{INFINITY, -INFINITY});
    for (const auto& s : samples) {
        if (s.x.size() != d.size()) throw LearnerError("samples differ in dimension");
        for (std::size_t j = 0; j < d.size(); ++j) {
            d[j].lo = std::min(d[j].lo, s.x[j]);
            d[j].hi = std::max(d[j].hi, s.x[j]);
        }
    }
    for (auto& iv : d)
        if (!(iv.hi > iv.lo)) {
            iv.lo -= 0.5;
            iv.hi += 0.5;
        }
    return d;
}

inline std::size_t num_classes_of(std::span<const LabeledSample> samples) {
    Label k = -1;
    for (const auto& s : samples) {
        if (s.y < 0) throw LearnerError("labels must be non-negative");
        k = std::max(k, s.y);
    }
    return static_cast<std::size_t>(k + 1);
}

// ---------------------------------------------------------------------------
// Transformers

class HistogramTransformer {
public:
    static constexpr std::size_t kMaxRegions = 1u << 24;

    HistogramTransformer(Domain domain, std::size_t bins) : domain_(std::move(domain)), bins_(bins) {
        if (bins_ == 0) throw LearnerError("histogram needs at least one bin per dimension");
        if (domain_.empty()) throw LearnerError("histogram domain has no dimensions");
        regions_ = 1;
        for (const auto& iv : domain_) {
            if (!(iv.hi > iv.lo)) throw LearnerError("histogram domain interval is empty");
            if (regions_ > kMaxRegions / bins_) throw LearnerError("histogram has too many cells");
            regions_ *= bins_;
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return domain_.size(); }
    [[nodiscard]] std::size_t num_regions() const noexcept { return regions_; }
    [[nodiscard]] std::size_t bins() const noexcept { return bins_; }
    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }

    /// Grid index with dimension 0 varying fastest; points outside the domain clamp to edge bins.
    [[nodiscard]] std::size_t region(std::span<const double> x) const {
        if (x.size() != domain_.size()) throw LearnerError("pattern dimension mismatch");
        std::size_t idx = 0, stride = 1;
        for (std::size_t j = 0; j < domain_.size(); ++j) {
            const double u = (x[j] - domain_[j].lo) / (domain_[j].hi - domain_[j].lo);
            const double f = std::floor(u * static_cast<double>(bins_));
            const std::size_t b = f <= 0.0 ? 0 : std::min(bins_ - 1, static_cast<std::size_t>(f));
            idx += b * stride;
            stride *= bins_;
        }
        return idx;
    }

    [[nodiscard]] Domain region_box(std::size_t r) const {
        Domain box(domain_.size());
        for (std::size_t j = 0; j < domain_.size(); ++j) {
            const std::size_t b = r % bins_;
            r /= bins_;
            const double w = (domain_[j].hi - domain_[j].lo) / static_cast<double>(bins_);
            box[j] = {domain_[j].lo + w * static_cast<double>(b),
                      b + 1 == bins_ ? domain_[j].hi : domain_[j].lo + w * static_cast<double>(b + 1)};
        }
        return box;
    }

private:
    Domain domain_;
    std::size_t bins_;
    std::size_t regions_ = 1;
};

struct TreeNode {
    int split_dim = -1;  ///< -1 for leaves
    double threshold = 0.0;
    int left = -1;       ///< taken when x[split_dim] <= threshold
    int right = -1;
    int leaf_id = -1;

    [[nodiscard]] bool is_leaf() const noexcept { return split_dim < 0; }
};

class TreeTransformer {
public:
    TreeTransformer(Domain domain, std::vector<TreeNode> nodes) : domain_(std::move(domain)), nodes_(std::move(nodes)) {
        if (nodes_.empty()) throw LearnerError("tree has no nodes");
        leaf_boxes_.clear();
        collect(0, domain_);
    }

    [[nodiscard]] std::size_t dim() const noexcept { return domain_.size(); }
    [[nodiscard]] std::size_t num_regions() const noexcept { return leaf_boxes_.size(); }
    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }
    [[nodiscard]] std::span<const TreeNode> nodes() const noexcept { return nodes_; }

    [[nodiscard]] std::size_t region(std::span<const double> x) const {
        if (x.size() != domain_.size()) throw LearnerError("pattern dimension mismatch");
        int i = 0;
        while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.split_dim)] <= n.threshold ? n.left : n.right;
        }
        return static_cast<std::size_t>(nodes_[static_cast<std::size_t>(i)].leaf_id);
    }

    [[nodiscard]] Domain region_box(std::size_t r) const { return leaf_boxes_.at(r); }

    [[nodiscard]] std::size_t depth() const { return depth_of(0); }

private:
    void collect(int i, const Domain& box) {
        if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) throw LearnerError("tree child index out of range");
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        if (n.is_leaf()) {
            if (n.leaf_id != static_cast<int>(leaf_boxes_.size())) throw LearnerError("tree leaf ids not in order");
            leaf_boxes_.push_back(box);
            return;
        }
        const auto d = static_cast<std::size_t>(n.split_dim);
        if (d >= box.size()) throw LearnerError("tree split dimension out of range");
        if (!(n.threshold > box[d].lo && n.threshold < box[d].hi))
            throw LearnerError("tree threshold outside its node box");
        Domain lb = box, rb = box;
        lb[d].hi = n.threshold;
        rb[d].lo = n.threshold;
        collect(n.left, lb);
        collect(n.right, rb);
    }

    [[nodiscard]] std::size_t depth_of(int i) const {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        return n.is_leaf() ? 0 : 1 + std::max(depth_of(n.left), depth_of(n.right));
    }

    Domain domain_;
    std::vector<TreeNode> nodes_;
    std::vector<Domain> leaf_boxes_;
};

using Transformer = std::variant<HistogramTransformer, TreeTransformer>;

inline std::size_t region_of(const Transformer& u, std::span<const double> x) {
    return std::visit([&](const auto& t) { return t.region(x); }, u);
}
inline std::size_t num_regions(const Transformer& u) {
    return std::visit([](const auto& t) { return t.num_regions(); }, u);
}
inline std::size_t input_dim(const Transformer& u) {
    return std::visit([](const auto& t) { return t.dim(); }, u);
}
inline Domain region_box(const Transformer& u, std::size_t r) {
    return std::visit([&](const auto& t) { return t.region_box(r); }, u);
}

// ---------------------------------------------------------------------------
// Voter and decider

/// Per-region label frequencies; regions without data vote uniformly.
class Voter {
public:
    Voter() = default;
    Voter(std::vector<std::vector<double>> posteriors, std::vector<std::size_t> counts)
        : posteriors_(std::move(posteriors)), counts_(std::move(counts)) {
        if (posteriors_.size() != counts_.size()) throw LearnerError("voter tables differ in size");
    }

    /// Empirical label frequencies of `labels` grouped by `regions`.
    static Voter fit(std::span<const std::size_t> regions, std::span<const Label> labels, std::size_t num_regions,
                     std::size_t num_classes) {
        std::vector<std::vector<double>> post(num_regions, std::vector<double>(num_classes, 0.0));
        std::vector<std::size_t> counts(num_regions, 0);
        for (std::size_t i = 0; i < regions.size(); ++i) {
            post[regions[i]][static_cast<std::size_t>(labels[i])] += 1.0;
            ++counts[regions[i]];
        }
        for (std::size_t r = 0; r < num_regions; ++r) {
            if (counts[r] == 0) std::fill(post[r].begin(), post[r].end(), 1.0 / static_cast<double>(num_classes));
            else
                for (double& p : post[r]) p /= static_cast<double>(counts[r]);
        }
        return Voter(std::move(post), std::move(counts));
    }

    [[nodiscard]] std::span<const double> vote(std::size_t region) const { return posteriors_.at(region); }
    [[nodiscard]] std::size_t count(std::size_t region) const { return counts_.at(region); }
    [[nodiscard]] std::size_t num_regions() const noexcept { return posteriors_.size(); }
    [[nodiscard]] std::size_t num_classes() const noexcept {
        return posteriors_.empty() ? 0 : posteriors_.front().size();
    }
    [[nodiscard]] const std::vector<std::vector<double>>& posteriors() const noexcept { return posteriors_; }
    [[nodiscard]] const std::vector<std::size_t>& counts() const noexcept { return counts_; }

private:
    std::vector<std::vector<double>> posteriors_;
    std::vector<std::size_t> counts_;
};

/// Argmax with lowest-label tie-break. When `empty_region_label` is set,
/// regions that received no data predict it instead.
struct Decider {
    std::optional<Label> empty_region_label;

    [[nodiscard]] Label decide(std::span<const double> vote, std::size_t count) const {
        if (count == 0 && empty_region_label) return *empty_region_label;
        return detail::argmax_lowest(vote);
    }
};

struct ComposeableDecisionFunction {
    std::shared_ptr<const Transformer> transformer;
    Voter voter;
    Decider decider;

    [[nodiscard]] std::size_t region(std::span<const double> x) const { return region_of(*transformer, x); }
    [[nodiscard]] Label predict(std::span<const double> x) const {
        const std::size_t r = region(x);
        return decider.decide(voter.vote(r), voter.count(r));
    }
};

struct FittedModel {
    ComposeableDecisionFunction fn;
    std::string learner;        ///< "histogram" or "tree"
    std::size_t n_samples = 0;
    std::size_t bins = 0;       ///< histogram only
    std::size_t max_depth = 0;  ///< tree only
    std::size_t min_leaf = 0;   ///< tree only
    std::uint64_t seed = 0;

    [[nodiscard]] Label predict(std::span<const double> x) const { return fn.predict(x); }
};

inline Label predict(const ComposeableDecisionFunction& f, std::span<const double> x) { return f.predict(x); }
inline Label predict(const FittedModel& m, std::span<const double> x) { return m.fn.predict(x); }

/// Fraction of misclassified samples.
inline double empirical_risk(const ComposeableDecisionFunction& f, std::span<const LabeledSample> samples) {
    if (samples.empty()) throw LearnerError("risk of an empty sample is undefined");
    std::size_t wrong = 0;
    for (const auto& s : samples) wrong += f.predict(s.x) != s.y;
    return static_cast<double>(wrong) / static_cast<double>(samples.size());
}
inline double empirical_risk(const FittedModel& m, std::span<const LabeledSample> samples) {
    return empirical_risk(m.fn, samples);
}

namespace detail {

/// Empty regions predict the overall majority of `samples`.
inline ComposeableDecisionFunction fit_voter(std::shared_ptr<const Transformer> u,
                                             std::span<const LabeledSample> samples, std::size_t num_classes) {
    std::vector<std::size_t> regions;
    std::vector<Label> labels;
    regions.reserve(samples.size());
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.y < 0 || static_cast<std::size_t>(s.y) >= num_classes) throw LearnerError("label out of range");
        regions.push_back(region_of(*u, s.x));
        labels.push_back(s.y);
    }
    std::vector<double> totals(num_classes, 0.0);
    for (Label y : labels) totals[static_cast<std::size_t>(y)] += 1.0;
    Voter v = Voter::fit(regions, labels, num_regions(*u), num_classes);
    return {std::move(u), std::move(v), Decider{detail::argmax_lowest(totals)}};
}

inline void check_training_set(std::span<const LabeledSample> samples, std::size_t dim) {
    if (samples.empty()) throw LearnerError("empty training set");
    for (const auto& s : samples)
        if (s.x.size() != dim) throw LearnerError("training pattern dimension mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Histogram rule

inline FittedModel fit_histogram(std::span<const LabeledSample> samples, std::size_t bins_per_dim,
                                 const Domain& domain, std::size_t num_classes = 0) {
    detail::check_training_set(samples, domain.size());
    if (num_classes == 0) num_classes = num_classes_of(samples);
    auto u = std::make_shared<const Transformer>(HistogramTransformer(domain, bins_per_dim));
    FittedModel m{detail::fit_voter(std::move(u), samples, num_classes), "histogram", samples.size()};
    m.bins = bins_per_dim;
    return m;
}

// ---------------------------------------------------------------------------
// Decision tree

struct TreeParams {
    std::size_t max_depth = 2;
    std::size_t min_leaf = 1;
    /// Splits with Gini decrease at or below this count as zero gain and
    /// trigger the midpoint fallback.
    double min_gain = 1e-12;
    /// Splits whose scan statistic n_node * gain / parent_gini is at or below
    /// this value also count as zero gain. 0 disables the test.
    double min_scan_statistic = 20.0;
    /// Features examined per node; 0 = all. A random subset is drawn per node when smaller than the dimension.
    std::size_t max_features = 0;
    /// Keep splitting pure nodes (at the box midpoint) until max_depth or
    /// min_leaf stops the recursion, so the tree overpartitions the domain.
    bool split_pure = false;
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(std::span<const LabeledSample> samples, std::size_t k, const TreeParams& p, Rng& rng)
        : samples_(samples), k_(k), params_(p), rng_(rng) {}

    std::vector<TreeNode> build(const Domain& domain) {
        std::vector<std::size_t> idx(samples_.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        grow(std::move(idx), domain, 0);
        return std::move(nodes_);
    }

private:
    struct Split {
        int dim = -1;
        double threshold = 0.0;
        double gain = -1.0;
    };

    static double gini(double sumsq, double n) { return n > 0.0 ? 1.0 - sumsq / (n * n) : 0.0; }
    static double parent_gini(const std::vector<double>& counts, std::size_t n) {
        double sq = 0.0;
        for (double c : counts) sq += c * c;
        return gini(sq, static_cast<double>(n));
    }

    int grow(std::vector<std::size_t> idx, const Domain& box, std::size_t depth) {
        const int me = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        std::vector<double> counts(k_, 0.0);
        for (auto i : idx) counts[static_cast<std::size_t>(samples_[i].y)] += 1.0;
        const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
        if (depth >= params_.max_depth || (pure && !params_.split_pure) || idx.size() < 2 * params_.min_leaf)
            return make_leaf(me);

        Split best = pure ? Split{} : best_split(idx, box, counts);
        const double scan = pure ? 0.0 : best.gain * static_cast<double>(idx.size()) / parent_gini(counts, idx.size());
        if (best.dim < 0 || best.gain <= params_.min_gain || scan <= params_.min_scan_statistic) {
            // no informative split: halve the widest side of the node box
            std::size_t w = 0;
            for (std::size_t j = 1; j < box.size(); ++j)
                if (box[j].hi - box[j].lo > box[w].hi - box[w].lo) w = j;
            best = {static_cast<int>(w), 0.5 * (box[w].lo + box[w].hi), 0.0};
        }
        const auto d = static_cast<std::size_t>(best.dim);
        if (!(best.threshold > box[d].lo && best.threshold < box[d].hi)) return make_leaf(me);
        std::vector<std::size_t> li, ri;
        for (auto i : idx) (samples_[i].x[d] <= best.threshold ? li : ri).push_back(i);
        if (li.size() < params_.min_leaf || ri.size() < params_.min_leaf) return make_leaf(me);

        Domain lb = box, rb = box;
        lb[d].hi = best.threshold;
        rb[d].lo = best.threshold;
        nodes_[static_cast<std::size_t>(me)].split_dim = best.dim;
        nodes_[static_cast<std::size_t>(me)].threshold = best.threshold;
        idx.clear();
        idx.shrink_to_fit();
        const int l = grow(std::move(li), lb, depth + 1);
        nodes_[static_cast<std::size_t>(me)].left = l;
        const int r = grow(std::move(ri), rb, depth + 1);
        nodes_[static_cast<std::size_t>(me)].right = r;
        return me;
    }

    int make_leaf(int me) {
        nodes_[static_cast<std::size_t>(me)].leaf_id = leaves_++;
        return me;
    }

    std::vector<std::size_t> candidate_dims(std::size_t dim) {
        std::vector<std::size_t> dims(dim);
        std::iota(dims.begin(), dims.end(), std::size_t{0});
        if (params_.max_features > 0 && params_.max_features < dim) {
            shuffle(dims, rng_);
            dims.resize(params_.max_features);
            std::sort(dims.begin(), dims.end());
        }
        return dims;
    }

    Split best_split(const std::vector<std::size_t>& idx, const Domain& box, const std::vector<double>& counts) {
        const double n = static_cast<double>(idx.size());
        double sumsq = 0.0;
        for (double c : counts) sumsq += c * c;
        const double parent = gini(sumsq, n);

        Split best;
        std::vector<std::size_t> order = idx;
        for (std::size_t d : candidate_dims(box.size())) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return samples_[a].x[d] < samples_[b].x[d] || (samples_[a].x[d] == samples_[b].x[d] && a < b);
            });
            std::vector<double> left(k_, 0.0), right = counts;
            double sq_left = 0.0, sq_right = sumsq;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const auto c = static_cast<std::size_t>(samples_[order[i]].y);
                sq_left += 2.0 * left[c] + 1.0;
                sq_right -= 2.0 * right[c] - 1.0;
                left[c] += 1.0;
                right[c] -= 1.0;
                const double a = samples_[order[i]].x[d], b = samples_[order[i + 1]].x[d];
                if (!(a < b)) continue;
                const double nl = static_cast<double>(i + 1), nr = n - nl;
                if (nl < static_cast<double>(params_.min_leaf) || nr < static_cast<double>(params_.min_leaf)) continue;
                const double thr = 0.5 * (a + b);
                if (!(thr > box[d].lo && thr < box[d].hi)) continue;
                const double gain = parent - (nl / n) * gini(sq_left, nl) - (nr / n) * gini(sq_right, nr);
                if (gain > best.gain) best = {static_cast<int>(d), thr, gain};
            }
        }
        return best;
    }

    std::span<const LabeledSample> samples_;
    std::size_t k_;
    TreeParams params_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
    int leaves_ = 0;
};

}  // namespace detail

/// Greedy binary tree on Gini impurity. Candidate thresholds are midpoints of
/// consecutive distinct feature values; ties go to the lowest dimension, then
/// the smallest threshold.
inline FittedModel fit_tree(std::span<const LabeledSample> samples, const TreeParams& params, const Domain& domain,
                            std::uint64_t seed = 0, std::size_t num_classes = 0) {
    detail::check_training_set(samples, domain.size());
    if (params.min_leaf == 0) throw LearnerError("min_leaf must be positive");
    if (num_classes == 0) num_classes = num_classes_of(samples);
    Rng rng = make_rng(seed);
    detail::TreeBuilder builder(samples, num_classes, params, rng);
    auto u = std::make_shared<const Transformer>(TreeTransformer(domain, builder.build(domain)));
    FittedModel m{detail::fit_voter(std::move(u), samples, num_classes), "tree", samples.size()};
    m.max_depth = params.max_depth;
    m.min_leaf = params.min_leaf;
    m.seed = seed;
    return m;
}

/// Region boxes as convex cells; only defined for two-dimensional inputs.
inline Partition induced_partition(const ComposeableDecisionFunction& f) {
    const auto& u = *f.transformer;
    if (input_dim(u) != 2) throw LearnerError("induced partition needs two-dimensional inputs");
    const Domain dom = std::visit([](const auto& t) { return t.domain(); }, u);
    std::vector<ConvexPolygon> cells;
    for (std::size_t r = 0; r < num_regions(u); ++r) {
        const Domain b = region_box(u, r);
        cells.push_back(ConvexPolygon::from_box({b[0].lo, b[0].hi, b[1].lo, b[1].hi}));
    }
    return Partition({dom[0].lo, dom[0].hi, dom[1].lo, dom[1].hi}, std::move(cells));
}
inline Partition induced_partition(const FittedModel& m) { return induced_partition(m.fn); }

/// Keeps the source transformer and refits voter and decider on target data.
/// Regions that receive no target data predict the overall target majority.
inline ComposeableDecisionFunction adapt_to_target(const ComposeableDecisionFunction& source,
                                                   std::span<const LabeledSample> target_samples,
                                                   std::size_t num_classes = 0) {
    detail::check_training_set(target_samples, input_dim(*source.transformer));
    if (num_classes == 0) num_classes = num_classes_of(target_samples);
    return detail::fit_voter(source.transformer, target_samples, num_classes);
}
inline ComposeableDecisionFunction adapt_to_target(const FittedModel& source,
                                                   std::span<const LabeledSample> target_samples,
                                                   std::size_t num_classes = 0) {
    return adapt_to_target(source.fn, target_samples, num_classes);
}

/// Learner choice shared by the experiment drivers.
struct LearnerConfig {
    enum class Kind { tree, histogram };
    Kind kind = Kind::tree;
    TreeParams tree{};
    std::size_t bins = 2;

    [[nodiscard]] FittedModel fit(std::span<const LabeledSample> samples, const Domain& domain,
                                  std::uint64_t seed = 0) const {
        return kind == Kind::tree ? fit_tree(samples, tree, domain, seed) : fit_histogram(samples, bins, domain);
    }
};

}  // namespace tasksim
