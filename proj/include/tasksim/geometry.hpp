#pragma once

/// @file geometry.hpp
/// @brief Exact planar geometry over convex cells.
///
/// Convex polygons are the cells of every partition in this library. The
/// only boolean operation needed is convex-convex intersection, done by
/// successive half-plane clipping (Sutherland-Hodgman against each edge of
/// the clip polygon). Areas use the shoelace formula.
///
/// @par Tolerances
/// kAreaEps (1e-9) is the absolute area tolerance for disjointness and
/// coverage checks. Vertices closer than kSnapEps (1e-12) to a clipping
/// line are treated as lying on it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tasksim {

inline constexpr double kAreaEps = 1e-9;
inline constexpr double kSnapEps = 1e-12;

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Point2 {
    double x0 = 0.0;
    double x1 = 0.0;

    constexpr bool operator==(const Point2&) const = default;
    [[nodiscard]] bool is_finite() const noexcept { return std::isfinite(x0) && std::isfinite(x1); }
};

inline Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x0 + b.x0, a.x1 + b.x1}; }
inline Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x0 - b.x0, a.x1 - b.x1}; }
inline Point2 operator*(double s, Point2 a) noexcept { return {s * a.x0, s * a.x1}; }

inline double cross(Point2 a, Point2 b) noexcept { return a.x0 * b.x1 - a.x1 * b.x0; }
inline double dot(Point2 a, Point2 b) noexcept { return a.x0 * b.x0 + a.x1 * b.x1; }
inline double norm(Point2 a) noexcept { return std::hypot(a.x0, a.x1); }

/// Closed half-plane {x : a*x0 + b*x1 <= c}.
class HalfPlane {
public:
    HalfPlane(double a, double b, double c) : a_(a), b_(b), c_(c) {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
            throw GeometryError("half-plane coefficients must be finite");
        if (a == 0.0 && b == 0.0) throw GeometryError("half-plane normal must be nonzero");
    }

    /// Half-plane to the left of the directed line from `from` to `to`.
    static HalfPlane left_of(Point2 from, Point2 to) {
        const Point2 d = to - from;
        return {d.x1, -d.x0, d.x1 * from.x0 - d.x0 * from.x1};
    }

    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] double c() const noexcept { return c_; }

    /// Signed distance to the boundary line; negative inside.
    [[nodiscard]] double signed_distance(Point2 p) const noexcept {
        return (a_ * p.x0 + b_ * p.x1 - c_) / std::hypot(a_, b_);
    }

private:
    double a_;
    double b_;
    double c_;
};

/// Axis-aligned box [xmin, xmax] x [ymin, ymax].
struct Box {
    double xmin = -1.0;
    double xmax = 1.0;
    double ymin = -1.0;
    double ymax = 1.0;

    constexpr bool operator==(const Box&) const = default;

    [[nodiscard]] double width() const noexcept { return xmax - xmin; }
    [[nodiscard]] double height() const noexcept { return ymax - ymin; }
    [[nodiscard]] double area() const noexcept { return width() * height(); }
    [[nodiscard]] bool contains(Point2 p, double tol = 0.0) const noexcept {
        return p.x0 >= xmin - tol && p.x0 <= xmax + tol && p.x1 >= ymin - tol && p.x1 <= ymax + tol;
    }
    [[nodiscard]] bool overlaps(const Box& o) const noexcept {
        return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
    }
    [[nodiscard]] bool approx_equal(const Box& o, double tol = kSnapEps) const noexcept {
        return std::abs(xmin - o.xmin) <= tol && std::abs(xmax - o.xmax) <= tol &&
               std::abs(ymin - o.ymin) <= tol && std::abs(ymax - o.ymax) <= tol;
    }

    void validate() const {
        if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) && std::isfinite(ymax)))
            throw GeometryError("domain bounds must be finite");
        if (!(xmax > xmin) || !(ymax > ymin)) throw GeometryError("domain must have positive extent");
    }
};

namespace detail {

inline double signed_area(std::span<const Point2> v) noexcept {
    double s = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) s += cross(v[i], v[(i + 1) % n]);
    return 0.5 * s;
}

/// Drops near-duplicate and collinear vertices in place. Scale-relative
/// collinearity test: |cross| <= kSnapEps * |e1| * |e2|.
inline void simplify(std::vector<Point2>& v) {
    bool changed = true;
    while (changed && v.size() >= 3) {
        changed = false;
        std::vector<Point2> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point2 p = v[i];
            if (!out.empty() && norm(p - out.back()) <= kSnapEps) {
                changed = true;
                continue;
            }
            out.push_back(p);
        }
        while (out.size() >= 2 && norm(out.front() - out.back()) <= kSnapEps) {
            out.pop_back();
            changed = true;
        }
        v.swap(out);
        if (v.size() < 3) return;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t n = v.size();
            const Point2 prev = v[(i + n - 1) % n];
            const Point2 next = v[(i + 1) % n];
            const Point2 e1 = v[i] - prev;
            const Point2 e2 = next - v[i];
            if (std::abs(cross(e1, e2)) <= kSnapEps * norm(e1) * norm(e2) && dot(e1, e2) > 0.0) {
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
}

}  // namespace detail

/// Convex polygon with counter-clockwise vertices.
///
/// Construction normalizes the vertex list (drops duplicates and collinear
/// vertices, reorients clockwise input) and rejects anything that is not a
/// strictly convex polygon of positive area.
class ConvexPolygon {
public:
    explicit ConvexPolygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
        for (const auto& p : vertices_)
            if (!p.is_finite()) throw GeometryError("polygon vertex is not finite");
        detail::simplify(vertices_);
        if (vertices_.size() < 3) throw GeometryError("polygon needs at least 3 non-collinear vertices");
        double a = detail::signed_area(vertices_);
        if (a < 0.0) {
            std::reverse(vertices_.begin(), vertices_.end());
            a = -a;
        }
        if (!(a > 0.0)) throw GeometryError("polygon has zero area");
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 e1 = vertices_[(i + 1) % n] - vertices_[i];
            const Point2 e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
            if (cross(e1, e2) <= 0.0) throw GeometryError("polygon is not strictly convex");
        }
        area_ = a;
    }

    static ConvexPolygon from_box(const Box& b) {
        return ConvexPolygon({{b.xmin, b.ymin}, {b.xmax, b.ymin}, {b.xmax, b.ymax}, {b.xmin, b.ymax}});
    }

    [[nodiscard]] std::span<const Point2> vertices() const noexcept { return vertices_; }
    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }
    [[nodiscard]] double area() const noexcept { return area_; }

    [[nodiscard]] Box bounding_box() const noexcept {
        Box b{vertices_[0].x0, vertices_[0].x0, vertices_[0].x1, vertices_[0].x1};
        for (const auto& p : vertices_) {
            b.xmin = std::min(b.xmin, p.x0);
            b.xmax = std::max(b.xmax, p.x0);
            b.ymin = std::min(b.ymin, p.x1);
            b.ymax = std::max(b.ymax, p.x1);
        }
        return b;
    }

    /// Closed containment with an absolute distance tolerance.
    [[nodiscard]] bool contains(Point2 p, double tol = kSnapEps) const noexcept {
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = vertices_[i];
            const Point2 e = vertices_[(i + 1) % n] - a;
            if (cross(e, p - a) < -tol * norm(e)) return false;
        }
        return true;
    }

    [[nodiscard]] Point2 centroid() const noexcept {
        double cx = 0.0, cy = 0.0;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 p = vertices_[i], q = vertices_[(i + 1) % n];
            const double w = cross(p, q);
            cx += (p.x0 + q.x0) * w;
            cy += (p.x1 + q.x1) * w;
        }
        return {cx / (6.0 * area_), cy / (6.0 * area_)};
    }

private:
    std::vector<Point2> vertices_;
    double area_ = 0.0;
};

inline double area(const ConvexPolygon& p) noexcept { return p.area(); }

/// Maximum pairwise vertex distance; equals the set diameter for convex cells.
inline double diameter(const ConvexPolygon& p) noexcept {
    double best = 0.0;
    const auto v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, norm(v[i] - v[j]));
    return best;
}

/// Intersection of a convex polygon with a closed half-plane.
/// Returns nullopt when the intersection has no area.
inline std::optional<ConvexPolygon> clip(const ConvexPolygon& poly, const HalfPlane& hp) {
    const auto v = poly.vertices();
    const std::size_t n = v.size();
    std::vector<double> d(n);
    bool all_in = true, all_out = true;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = hp.signed_distance(v[i]);
        if (std::abs(d[i]) <= kSnapEps) d[i] = 0.0;
        all_in = all_in && d[i] <= 0.0;
        all_out = all_out && d[i] >= 0.0;
    }
    if (all_in) return poly;
    if (all_out) return std::nullopt;

    std::vector<Point2> out;
    out.reserve(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        if (d[i] <= 0.0) out.push_back(v[i]);
        if ((d[i] < 0.0 && d[j] > 0.0) || (d[i] > 0.0 && d[j] < 0.0)) {
            const double t = d[i] / (d[i] - d[j]);
            out.push_back(v[i] + t * (v[j] - v[i]));
        }
    }
    detail::simplify(out);
    if (out.size() < 3 || detail::signed_area(out) <= 0.0) return std::nullopt;
    try {
        return ConvexPolygon(std::move(out));
    } catch (const GeometryError&) {
        return std::nullopt;
    }
}

/// Convex intersection of two polygons: clip `p` by every edge of `q`.
inline std::optional<ConvexPolygon> intersect(const ConvexPolygon& p, const ConvexPolygon& q) {
    if (!p.bounding_box().overlaps(q.bounding_box())) return std::nullopt;
    std::optional<ConvexPolygon> cur = p;
    const auto v = q.vertices();
    for (std::size_t i = 0; i < v.size() && cur; ++i)
        cur = clip(*cur, HalfPlane::left_of(v[i], v[(i + 1) % v.size()]));
    return cur;
}

inline double intersection_area(const ConvexPolygon& p, const ConvexPolygon& q) {
    const auto r = intersect(p, q);
    return r ? r->area() : 0.0;
}

/// A finite set of convex cells covering a box domain.
///
/// Construction does not check the tiling; see validate_partition().
class Partition {
public:
    Partition(Box domain, std::vector<ConvexPolygon> cells) : domain_(domain), cells_(std::move(cells)) {
        domain_.validate();
        if (cells_.empty()) throw GeometryError("partition has no cells");
        bboxes_.reserve(cells_.size());
        for (const auto& c : cells_) bboxes_.push_back(c.bounding_box());
    }

    [[nodiscard]] const Box& domain() const noexcept { return domain_; }
    [[nodiscard]] std::span<const ConvexPolygon> cells() const noexcept { return cells_; }
    [[nodiscard]] const ConvexPolygon& cell(std::size_t i) const { return cells_.at(i); }
    [[nodiscard]] const Box& cell_bbox(std::size_t i) const { return bboxes_.at(i); }
    [[nodiscard]] std::size_t size() const noexcept { return cells_.size(); }

    /// Lowest-index cell containing `p`, or nullopt.
    [[nodiscard]] std::optional<std::size_t> locate(Point2 p) const noexcept {
        for (std::size_t i = 0; i < cells_.size(); ++i)
            if (bboxes_[i].contains(p, kSnapEps) && cells_[i].contains(p)) return i;
        return std::nullopt;
    }

    [[nodiscard]] double max_cell_diameter() const noexcept {
        double m = 0.0;
        for (const auto& c : cells_) m = std::max(m, diameter(c));
        return m;
    }

    /// Pairs (i in this, j in other) whose bounding boxes overlap.
    template <class F>
    void for_each_candidate_pair(const Partition& other, F&& f) const {
        for (std::size_t i = 0; i < cells_.size(); ++i)
            for (std::size_t j = 0; j < other.cells_.size(); ++j)
                if (bboxes_[i].overlaps(other.bboxes_[j])) f(i, j);
    }

private:
    Box domain_;
    std::vector<ConvexPolygon> cells_;
    std::vector<Box> bboxes_;
};

/// n x n congruent axis-aligned cells; cell (i0, i1) has index i1 * n + i0,
/// i0 running along x0.
inline Partition make_grid_partition(std::size_t n, const Box& domain = {}) {
    if (n == 0) throw GeometryError("grid size must be positive");
    domain.validate();
    std::vector<ConvexPolygon> cells;
    cells.reserve(n * n);
    const double dx = domain.width() / static_cast<double>(n);
    const double dy = domain.height() / static_cast<double>(n);
    auto xat = [&](std::size_t i) { return i == n ? domain.xmax : domain.xmin + dx * static_cast<double>(i); };
    auto yat = [&](std::size_t i) { return i == n ? domain.ymax : domain.ymin + dy * static_cast<double>(i); };
    for (std::size_t i1 = 0; i1 < n; ++i1)
        for (std::size_t i0 = 0; i0 < n; ++i0)
            cells.push_back(ConvexPolygon::from_box({xat(i0), xat(i0 + 1), yat(i1), yat(i1 + 1)}));
    return Partition(domain, std::move(cells));
}

struct PartitionDiagnostics {
    double coverage_gap = 0.0;    ///< |domain area - covered area|
    double max_overlap = 0.0;     ///< largest pairwise cell intersection area
    double outside_area = 0.0;    ///< total cell area lying outside the domain
    std::size_t overlap_i = 0;
    std::size_t overlap_j = 0;
    bool ok = false;
};

inline PartitionDiagnostics validate_partition(const Partition& p, double tol = kAreaEps) {
    PartitionDiagnostics d;
    const auto dom = ConvexPolygon::from_box(p.domain());
    double inside = 0.0;
    for (const auto& c : p.cells()) {
        const double in = intersection_area(c, dom);
        inside += in;
        d.outside_area += c.area() - in;
    }
    d.coverage_gap = std::abs(p.domain().area() - inside);

    // sweep over cells sorted by bounding-box xmin
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p.cell_bbox(a).xmin < p.cell_bbox(b).xmin; });
    for (std::size_t a = 0; a < order.size(); ++a) {
        const Box& ba = p.cell_bbox(order[a]);
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const Box& bb = p.cell_bbox(order[b]);
            if (bb.xmin >= ba.xmax) break;
            if (!ba.overlaps(bb)) continue;
            const double ov = intersection_area(p.cell(order[a]), p.cell(order[b]));
            if (ov > d.max_overlap) {
                d.max_overlap = ov;
                d.overlap_i = std::min(order[a], order[b]);
                d.overlap_j = std::max(order[a], order[b]);
            }
        }
    }
    d.ok = d.coverage_gap <= tol && d.max_overlap <= tol && d.outside_area <= tol;
    return d;
}

/// True iff every cell of `coarse` is (within `tol` area) a union of cells of `fine`.
inline bool is_subpartition(const Partition& fine, const Partition& coarse, double tol = kAreaEps) {
    if (!fine.domain().approx_equal(coarse.domain())) throw GeometryError("partitions have different domains");
    std::vector<double> covered(coarse.size(), 0.0);
    std::vector<std::size_t> owner(fine.size(), coarse.size());
    std::vector<std::size_t> owners(fine.size(), 0);
    std::vector<double> owned(fine.size(), 0.0);
    fine.for_each_candidate_pair(coarse, [&](std::size_t i, std::size_t j) {
        const double a = intersection_area(fine.cell(i), coarse.cell(j));
        if (a > tol) {
            ++owners[i];
            owner[i] = j;
            owned[i] = a;
        }
    });
    for (std::size_t i = 0; i < fine.size(); ++i) {
        if (owners[i] != 1) return false;
        if (std::abs(owned[i] - fine.cell(i).area()) > tol) return false;
        covered[owner[i]] += fine.cell(i).area();
    }
    for (std::size_t j = 0; j < coarse.size(); ++j)
        if (std::abs(covered[j] - coarse.cell(j).area()) > tol) return false;
    return true;
}

/// Cells i, j share a boundary segment of positive length.
inline bool share_edge(const ConvexPolygon& p, const ConvexPolygon& q, double tol = 1e-9) {
    const auto pv = p.vertices();
    const auto qv = q.vertices();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const Point2 a = pv[i], b = pv[(i + 1) % pv.size()];
        const Point2 e = b - a;
        const double len = norm(e);
        for (std::size_t j = 0; j < qv.size(); ++j) {
            const Point2 c = qv[j], d = qv[(j + 1) % qv.size()];
            if (std::abs(cross(e, c - a)) > tol * len || std::abs(cross(e, d - a)) > tol * len) continue;
            const double t0 = dot(c - a, e) / len, t1 = dot(d - a, e) / len;
            const double lo = std::max(0.0, std::min(t0, t1));
            const double hi = std::min(len, std::max(t0, t1));
            if (hi - lo > tol) return true;
        }
    }
    return false;
}

}  // namespace tasksim
