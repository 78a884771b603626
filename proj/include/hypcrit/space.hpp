#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hypcrit/errors.hpp"
#include "hypcrit/plane.hpp"
#include "hypcrit/rational.hpp"
#include "hypcrit/word.hpp"

namespace hypcrit {

using Length = double;

enum class SpaceKind { tree, plane };

inline const char* to_string(SpaceKind k) { return k == SpaceKind::tree ? "tree" : "plane"; }

/// Point of the Cayley tree of a free group: the vertex `vertex`, moved by the
/// fraction `frac` of an edge along the outward letter `dir`.
/// Canonical form: frac in [0, 1), dir == 0 iff frac == 0, and dir never
/// cancels the last letter of vertex (the edge points away from the root).
struct TreePoint {
    Word vertex;
    Letter dir = 0;
    Rational frac;

    static TreePoint at_vertex(Word w) { return TreePoint{std::move(w), 0, Rational(0)}; }
    static TreePoint parse_vertex(std::string_view s) { return at_vertex(Word::parse(s)); }

    /// Depth from the root in edge units.
    Rational depth() const { return Rational(static_cast<std::int64_t>(vertex.size())) + frac; }

    /// Root path letters; the partial edge letter is included when frac > 0.
    std::vector<Letter> path() const {
        std::vector<Letter> p = vertex.letters();
        if (dir != 0) p.push_back(dir);
        return p;
    }

    friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

using PlanePoint = plane::Point;

using ModelPoint = std::variant<TreePoint, PlanePoint>;

inline SpaceKind kind_of(const ModelPoint& p) {
    return std::holds_alternative<TreePoint>(p) ? SpaceKind::tree : SpaceKind::plane;
}

/// A weighted regular tree (the Cayley tree of the free group of rank
/// valence/2) or the hyperbolic plane.
struct ModelSpace {
    SpaceKind kind = SpaceKind::tree;
    int valence = 4;
    Rational edge_length = Rational(1);
    /// Point-equality tolerance of the metric (plane only; tree arithmetic is exact).
    double tolerance = 1e-9;

    static ModelSpace tree(int valence, Rational edge_length) {
        if (valence < 3) throw ArgumentError("tree valence must be at least 3");
        if (valence % 2 != 0) throw ArgumentError("tree valence must be even (free-group Cayley tree)");
        if (edge_length <= Rational(0)) throw ArgumentError("edge length must be positive");
        if (valence / 2 > 26) throw ArgumentError("at most 26 free generators are supported");
        return ModelSpace{SpaceKind::tree, valence, edge_length, 0.0};
    }
    static ModelSpace hyperbolic_plane() { return ModelSpace{SpaceKind::plane, 0, Rational(1), 1e-9}; }

    int rank() const { return valence / 2; }
    double edge() const { return edge_length.to_double(); }

    ModelPoint basepoint() const {
        if (kind == SpaceKind::tree) return TreePoint{};
        return PlanePoint{0.0, 1.0};
    }

    void require(const ModelPoint& p) const {
        if (kind_of(p) != kind)
            throw KindMismatch(std::string("point of kind ") + to_string(kind_of(p)) + " used in a " +
                               to_string(kind) + " space");
    }
};

/// An end of the space, known to finite precision.
/// Tree: an infinite reduced word truncated at depth word.size().
/// Plane: an ideal point; `depth` is the distance from the basepoint at which
/// proxy points are taken, `word` the orbit word that produced it (may be empty).
struct TreeEnd {
    Word word;
    std::size_t depth() const { return word.size(); }
    friend bool operator==(const TreeEnd&, const TreeEnd&) = default;
};

struct PlaneEnd {
    plane::IdealPoint point;
    double depth = 24.0;
    Word word;
    friend bool operator==(const PlaneEnd&, const PlaneEnd&) = default;
};

using BoundaryApprox = std::variant<TreeEnd, PlaneEnd>;

inline SpaceKind kind_of(const BoundaryApprox& z) {
    return std::holds_alternative<TreeEnd>(z) ? SpaceKind::tree : SpaceKind::plane;
}

/// Geodesic ray from `origin` towards `target`.
struct Ray {
    ModelPoint origin;
    BoundaryApprox target;
};

namespace tree_detail {

/// Canonical point at `depth` (edge units) along a root path.
inline TreePoint point_at_depth(const std::vector<Letter>& path, const Rational& depth) {
    if (depth < Rational(0)) throw ArgumentError("negative depth");
    auto whole = static_cast<std::size_t>(depth.floor());
    Rational frac = depth.fractional();
    std::size_t need = whole + (frac > Rational(0) ? 1 : 0);
    if (need > path.size()) throw InsufficientData("path too short for requested depth");
    TreePoint p;
    p.vertex = Word(std::vector<Letter>(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(whole)));
    if (frac > Rational(0)) {
        p.dir = path[whole];
        p.frac = frac;
    }
    return p;
}

/// Depth of the branch point of two root paths of given depths.
inline Rational meet_depth(const std::vector<Letter>& a, const Rational& da, const std::vector<Letter>& b,
                           const Rational& db) {
    auto l = static_cast<std::int64_t>(common_prefix(a, b));
    return min(Rational(l), min(da, db));
}

inline Rational meet_depth(const TreePoint& p, const TreePoint& q) {
    return meet_depth(p.path(), p.depth(), q.path(), q.depth());
}

/// Distance in edge units.
inline Rational distance_units(const TreePoint& p, const TreePoint& q) {
    Rational m = meet_depth(p, q);
    return p.depth() + q.depth() - m - m;
}

/// Brings a point given by (vertex, letter, fraction) to canonical form.
inline TreePoint canonical(Word vertex, Letter dir, Rational frac) {
    if (frac < Rational(0) || frac >= Rational(1)) throw ArgumentError("edge fraction outside [0,1)");
    if (frac == Rational(0) || dir == 0) return TreePoint::at_vertex(std::move(vertex));
    if (!vertex.empty() && vertex.back() == -dir) {
        // edge from w'x back to w': re-express from the shorter endpoint.
        Letter x = vertex.back();
        vertex.pop_back();
        return TreePoint{std::move(vertex), x, Rational(1) - frac};
    }
    return TreePoint{std::move(vertex), dir, frac};
}

inline void check_point(const TreePoint& p, int rank) {
    for (std::size_t i = 0; i < p.vertex.size(); ++i) {
        Letter l = p.vertex[i];
        if (l == 0 || std::abs(l) > rank) throw ArgumentError("tree word uses a letter outside the alphabet");
    }
    if (p.dir != 0 && std::abs(p.dir) > rank) throw ArgumentError("tree direction outside the alphabet");
}

} // namespace tree_detail

/// Exact tree distance (metric units, as a rational).
inline Rational tree_distance_exact(const ModelSpace& space, const TreePoint& p, const TreePoint& q) {
    return tree_detail::distance_units(p, q) * space.edge_length;
}

inline Length distance(const ModelSpace& space, const ModelPoint& p, const ModelPoint& q) {
    space.require(p);
    space.require(q);
    if (space.kind == SpaceKind::tree)
        return tree_distance_exact(space, std::get<TreePoint>(p), std::get<TreePoint>(q)).to_double();
    return plane::distance(std::get<PlanePoint>(p), std::get<PlanePoint>(q));
}

/// Exact Gromov product on the tree, (y,z)_x = ½(d(x,y) + d(x,z) − d(y,z)).
inline Rational tree_gromov_product_exact(const ModelSpace& space, const TreePoint& x, const TreePoint& y,
                                          const TreePoint& z) {
    using tree_detail::distance_units;
    Rational twice = distance_units(x, y) + distance_units(x, z) - distance_units(y, z);
    return twice * Rational(1, 2) * space.edge_length;
}

inline Length gromov_product(const ModelSpace& space, const ModelPoint& base, const ModelPoint& y,
                             const ModelPoint& z) {
    space.require(base);
    space.require(y);
    space.require(z);
    if (space.kind == SpaceKind::tree)
        return tree_gromov_product_exact(space, std::get<TreePoint>(base), std::get<TreePoint>(y),
                                         std::get<TreePoint>(z))
            .to_double();
    double v = 0.5 * (distance(space, base, y) + distance(space, base, z) - distance(space, y, z));
    return std::max(v, 0.0);
}

/// Point at parameter t (edge units) on the tree geodesic from p to q.
inline TreePoint tree_geodesic_point(const TreePoint& p, const TreePoint& q, const Rational& t) {
    using namespace tree_detail;
    Rational total = distance_units(p, q);
    if (t < Rational(0) || t > total) throw ArgumentError("geodesic parameter out of range");
    Rational m = meet_depth(p, q);
    Rational up = p.depth() - m;
    if (t <= up) return point_at_depth(p.path(), p.depth() - t);
    return point_at_depth(q.path(), m + (t - up));
}

inline ModelPoint geodesic_point(const ModelSpace& space, const ModelPoint& p, const ModelPoint& q, Length t) {
    space.require(p);
    space.require(q);
    Length total = distance(space, p, q);
    double slack = space.kind == SpaceKind::tree ? 0.0 : space.tolerance;
    if (t < -slack || t > total + slack) throw ArgumentError("geodesic parameter out of range");
    if (space.kind == SpaceKind::tree) {
        const auto& tp = std::get<TreePoint>(p);
        const auto& tq = std::get<TreePoint>(q);
        Rational units = Rational::approximate(t / space.edge());
        units = max(Rational(0), min(units, tree_detail::distance_units(tp, tq)));
        return tree_geodesic_point(tp, tq, units);
    }
    const auto& pp = std::get<PlanePoint>(p);
    const auto& pq = std::get<PlanePoint>(q);
    t = std::clamp(t, 0.0, total);
    if (total == 0.0) return pp;
    if (t == 0.0) return pp;
    if (t == total) return pq;
    plane::Mat2 g = plane::frame_segment(pp, pq);
    return g.inverse().apply(PlanePoint{0.0, std::exp(t)});
}

/// Root path of a tree end together with its depth.
inline Rational tree_end_depth(const TreeEnd& z) { return Rational(static_cast<std::int64_t>(z.depth())); }

/// Point at parameter t (edge units) along the tree ray from `origin` towards the end z.
inline TreePoint tree_ray_point(const TreePoint& origin, const TreeEnd& z, const Rational& t) {
    using namespace tree_detail;
    if (t < Rational(0)) throw ArgumentError("negative ray parameter");
    const auto& zp = z.word.letters();
    Rational zd = tree_end_depth(z);
    if (origin.depth() > zd) throw InsufficientData("end truncated above the ray origin; deepen the end");
    Rational m = meet_depth(origin.path(), origin.depth(), zp, zd);
    Rational up = origin.depth() - m;
    if (t <= up) return point_at_depth(origin.path(), origin.depth() - t);
    Rational d = m + (t - up);
    if (d > zd) throw InsufficientData("ray parameter beyond the end's truncation depth");
    return point_at_depth(zp, d);
}

inline ModelPoint ray_point(const ModelSpace& space, const Ray& ray, Length t) {
    space.require(ray.origin);
    if (kind_of(ray.target) != space.kind) throw KindMismatch("ray target of the wrong kind");
    if (t < 0) throw ArgumentError("negative ray parameter");
    if (space.kind == SpaceKind::tree)
        return tree_ray_point(std::get<TreePoint>(ray.origin), std::get<TreeEnd>(ray.target),
                              Rational::approximate(t / space.edge()));
    plane::Mat2 g = plane::frame_ray(std::get<PlanePoint>(ray.origin), std::get<PlaneEnd>(ray.target).point);
    return g.inverse().apply(PlanePoint{0.0, std::exp(t)});
}

struct BusemannValue {
    double value = 0.0;
    Length error_bound = 0.0;
};

/// d(ray(horizon), y) − horizon. The sequence is nonincreasing in the horizon;
/// error_bound is the remaining gap to its limit (0 on the tree once the ray
/// has passed the branch point of y).
inline BusemannValue busemann(const ModelSpace& space, const Ray& ray, const ModelPoint& y, Length horizon) {
    space.require(y);
    if (!(horizon > 0)) throw ArgumentError("busemann horizon must be positive");
    if (space.kind == SpaceKind::tree) {
        using namespace tree_detail;
        const auto& origin = std::get<TreePoint>(ray.origin);
        const auto& z = std::get<TreeEnd>(ray.target);
        const auto& ty = std::get<TreePoint>(y);
        Rational h = Rational::approximate(horizon / space.edge());
        TreePoint at = tree_ray_point(origin, z, h);
        Rational value = (distance_units(at, ty) - h) * space.edge_length;
        Rational zd = tree_end_depth(z);
        Rational my = meet_depth(ty.path(), ty.depth(), z.word.letters(), zd);
        Rational mo = meet_depth(origin.path(), origin.depth(), z.word.letters(), zd);
        if (my >= zd && ty.depth() > zd) throw InsufficientData("end too shallow to resolve the Busemann function");
        Rational limit = (ty.depth() - my - my - (origin.depth() - mo - mo)) * space.edge_length;
        return {value.to_double(), (value - limit).to_double()};
    }
    const auto& origin = std::get<PlanePoint>(ray.origin);
    const auto& py = std::get<PlanePoint>(y);
    plane::Mat2 g = plane::frame_ray(origin, std::get<PlaneEnd>(ray.target).point);
    PlanePoint gy = g.apply(py);
    double value = plane::distance(gy, PlanePoint{0.0, std::exp(horizon)}) - horizon;
    double limit = -std::log(gy.im);
    return {value, std::max(0.0, value - limit)};
}

/// Closed-form Busemann limit B_z(origin, y) (tree: exact; plane: −log Im of the framed point).
inline double busemann_limit(const ModelSpace& space, const Ray& ray, const ModelPoint& y) {
    if (space.kind == SpaceKind::tree) {
        auto v = busemann(space, ray, y, 1.0);
        return v.value - v.error_bound;
    }
    plane::Mat2 g = plane::frame_ray(std::get<PlanePoint>(ray.origin), std::get<PlaneEnd>(ray.target).point);
    return -std::log(g.apply(std::get<PlanePoint>(y)).im);
}

/// Distance from x to the geodesic segment [y, z].
inline Length distance_to_segment(const ModelSpace& space, const ModelPoint& x, const ModelPoint& y,
                                  const ModelPoint& z) {
    if (space.kind == SpaceKind::tree) {
        // On a tree d(x, [y,z]) = (y,z)_x.
        return gromov_product(space, x, y, z);
    }
    const auto& px = std::get<PlanePoint>(x);
    const auto& py = std::get<PlanePoint>(y);
    const auto& pz = std::get<PlanePoint>(z);
    double len = plane::distance(py, pz);
    if (len == 0.0) return plane::distance(px, py);
    plane::Mat2 g = plane::frame_segment(py, pz);
    PlanePoint gx = g.apply(px);
    double h = std::log(std::hypot(gx.re, gx.im));
    if (h <= 0.0) return plane::distance(gx, PlanePoint{0.0, 1.0});
    if (h >= len) return plane::distance(gx, PlanePoint{0.0, std::exp(len)});
    return plane::distance_to_axis(gx);
}

struct HyperbolicityEstimate {
    Length delta_hat = 0.0;
    std::size_t sample_count = 0;
    /// (w; x, y, z) attaining delta_hat.
    std::array<ModelPoint, 4> max_defect_witness;
};

/// Certified lower bound on the four-point constant over the sampled
/// quadruples (w; x, y, z): max of min{(x,y)_w, (y,z)_w} − (x,z)_w, clamped at 0.
inline HyperbolicityEstimate estimate_delta(const ModelSpace& space,
                                            std::span<const std::array<ModelPoint, 4>> samples) {
    if (samples.empty()) throw ArgumentError("estimate_delta needs at least one quadruple");
    HyperbolicityEstimate est;
    est.sample_count = samples.size();
    est.max_defect_witness = samples.front();
    double best = -1.0;
    for (const auto& q : samples) {
        const auto& [w, x, y, z] = q;
        double defect;
        if (space.kind == SpaceKind::tree) {
            const auto& tw = std::get<TreePoint>(w);
            const auto& tx = std::get<TreePoint>(x);
            const auto& ty = std::get<TreePoint>(y);
            const auto& tz = std::get<TreePoint>(z);
            Rational d = min(tree_gromov_product_exact(space, tw, tx, ty), tree_gromov_product_exact(space, tw, ty, tz)) -
                         tree_gromov_product_exact(space, tw, tx, tz);
            defect = d.to_double();
        } else {
            defect = std::min(gromov_product(space, w, x, y), gromov_product(space, w, y, z)) -
                     gromov_product(space, w, x, z);
        }
        if (defect > best) {
            best = defect;
            est.max_defect_witness = q;
        }
    }
    est.delta_hat = std::max(best, 0.0);
    return est;
}

inline std::string describe(const ModelPoint& p) {
    if (const auto* t = std::get_if<TreePoint>(&p)) {
        std::string s = t->vertex.str();
        if (t->dir != 0) s += "+" + t->frac.str() + letter_char(t->dir);
        return s;
    }
    const auto& q = std::get<PlanePoint>(p);
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.17g,%.17g)", q.re, q.im);
    return buf;
}

} // namespace hypcrit
