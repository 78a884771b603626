#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypcrit/actions.hpp"
#include "hypcrit/entropy.hpp"
#include "hypcrit/errors.hpp"
#include "hypcrit/sampling.hpp"
#include "hypcrit/space.hpp"

namespace hypcrit {

/// Three-valued answer for set membership decided from bracketed quantities.
enum class Tri { no, yes, unknown };

inline const char* to_string(Tri t) { return t == Tri::yes ? "yes" : t == Tri::no ? "no" : "unknown"; }

/// Bracket [lower, upper] for the boundary Gromov product (z, z')_x.
struct ProductBracket {
    Length lower = 0.0;
    Length upper = 0.0; ///< +∞ when a tree comparison reached the truncation depth
    bool exact() const { return lower == upper; }
};

namespace boundary_detail {

inline void require_root(const GroupAction& a) {
    if (a.space.kind == SpaceKind::tree && !(std::get<TreePoint>(a.basepoint) == TreePoint{}))
        throw ArgumentError("tree boundary computations use the root as basepoint");
}

/// Disk-model angle of an ideal point seen from the basepoint.
inline double angle_at(const GroupAction& a, const plane::IdealPoint& p) {
    return plane::boundary_angle(plane::center_at(std::get<PlanePoint>(a.basepoint)).apply(p));
}

/// Gromov product at x of the points at distance S along rays from x making angle θ.
inline double ray_proxy_product(double S, double theta) {
    double s = std::sin(theta / 2.0);
    double sh = std::sinh(S);
    double d = std::acosh(1.0 + 2.0 * sh * sh * s * s);
    return S - d / 2.0;
}

} // namespace boundary_detail

/// (z, z')_x along ray proxies. Tree: the common prefix times the edge length,
/// exact unless the prefix reaches the shorter truncation. Plane: the Gromov
/// product of the ray points at the shallower proxy depth S; the bracket adds
/// the remaining gap to the limit along the rays (closed form −log sin(θ/2))
/// plus δ for the liminf-to-product error.
inline ProductBracket boundary_product_bracket(const GroupAction& a, const BoundaryApprox& z, const BoundaryApprox& w) {
    if (kind_of(z) != a.space.kind || kind_of(w) != a.space.kind) throw KindMismatch("end of the wrong model space");
    boundary_detail::require_root(a);
    if (a.space.kind == SpaceKind::tree) {
        const auto& zw = std::get<TreeEnd>(z).word;
        const auto& ww = std::get<TreeEnd>(w).word;
        std::size_t k = common_prefix(zw.letters(), ww.letters());
        double lo = static_cast<double>(k) * a.space.edge();
        if (k >= std::min(zw.size(), ww.size())) return {lo, std::numeric_limits<double>::infinity()};
        return {lo, lo};
    }
    const auto& ze = std::get<PlaneEnd>(z);
    const auto& we = std::get<PlaneEnd>(w);
    double theta = std::abs(std::remainder(boundary_detail::angle_at(a, ze.point) - boundary_detail::angle_at(a, we.point),
                                           2.0 * std::numbers::pi));
    double S = std::min(ze.depth, we.depth);
    if (theta == 0.0) return {S, std::numeric_limits<double>::infinity()};
    double proxy = boundary_detail::ray_proxy_product(S, theta);
    double limit = -std::log(std::sin(theta / 2.0));
    return {proxy, limit + a.declared_delta};
}

struct BoundaryProduct {
    Length value = 0.0;
    Length error = 0.0;
};

/// Refuses (InsufficientData) when the product is not resolved at the available depth.
inline BoundaryProduct boundary_gromov_product(const GroupAction& a, const BoundaryApprox& z, const BoundaryApprox& w) {
    auto b = boundary_product_bracket(a, z, w);
    if (!std::isfinite(b.upper)) throw InsufficientData("boundary product exceeds the truncation depth; deepen the ends");
    if (a.space.kind == SpaceKind::plane) {
        double S = std::min(std::get<PlaneEnd>(z).depth, std::get<PlaneEnd>(w).depth);
        if (b.lower > S - 1.0) throw InsufficientData("ray proxies are not past the product; deepen the ends");
    }
    return {b.lower, b.upper - b.lower};
}

struct VisualParams {
    double a = 1.0;
};

struct VisualBracket {
    double lower = 0.0;
    double upper = 0.0;
};

/// Visual distance bracket. Tree (δ = 0): e^{−a(z,z')} exactly (an ultrametric).
/// Plane: [(1/V)·e^{−a(p + err)}, V·e^{−a·p}] with V = e^{aδ}.
inline VisualBracket visual_distance(const VisualParams& vp, const GroupAction& a, const BoundaryApprox& z,
                                     const BoundaryApprox& w) {
    double delta = a.declared_delta;
    if (!(vp.a > 0)) throw ArgumentError("visual parameter must be positive");
    if (delta > 0) {
        if (vp.a >= std::numbers::ln2 / (2.0 * delta))
            throw ArgumentError("visual parameter outside (0, 1/(2δ·log2 e))");
        if (3.0 - 2.0 * std::exp(vp.a * delta) <= 0) throw ArgumentError("standard visual constant 3 − 2e^{aδ} is not positive");
    }
    auto p = boundary_gromov_product(a, z, w);
    if (delta == 0.0 && p.error == 0.0) {
        double d = std::exp(-vp.a * p.value);
        return {d, d};
    }
    double V = std::exp(vp.a * delta);
    return {std::exp(-vp.a * (p.value + p.error)) / V, V * std::exp(-vp.a * p.value)};
}

enum class BallKind { open, closed };

/// Membership in the generalized visual ball B(z, ρ) = {(z, z')_x > log 1/ρ}
/// (closed: ≥), decided from the product bracket.
inline Tri generalized_ball_contains(const GroupAction& a, const BoundaryApprox& z, double rho, const BoundaryApprox& w,
                                     BallKind kind = BallKind::open) {
    if (!(rho > 0) || rho > 1) throw ArgumentError("generalized ball radius must lie in (0, 1]");
    double t = std::log(1.0 / rho);
    auto b = boundary_product_bracket(a, z, w);
    constexpr double eps = 1e-12;
    if (kind == BallKind::open) {
        if (b.lower > t + eps) return Tri::yes;
        if (b.upper <= t + eps) return Tri::no;
    } else {
        if (b.lower >= t - eps) return Tri::yes;
        if (b.upper < t - eps) return Tri::no;
    }
    return Tri::unknown;
}

/// Distance from y to the ray from the basepoint towards z.
inline Length distance_to_ray(const GroupAction& a, const BoundaryApprox& z, const ModelPoint& y) {
    a.space.require(y);
    if (a.space.kind == SpaceKind::tree) {
        const auto& x = std::get<TreePoint>(a.basepoint);
        const auto& word = std::get<TreeEnd>(z).word;
        TreePoint far = TreePoint::at_vertex(word);
        const auto& ty = std::get<TreePoint>(y);
        // the projection of y onto [x, far] must fall short of the truncation
        Rational proj = tree_gromov_product_exact(a.space, x, ty, far);
        if (proj >= tree_distance_exact(a.space, x, far))
            throw InsufficientData("end too shallow to resolve the ray near this point");
        return tree_gromov_product_exact(a.space, ty, x, far).to_double();
    }
    plane::Mat2 g = plane::frame_ray(std::get<PlanePoint>(a.basepoint), std::get<PlaneEnd>(z).point);
    PlanePoint q = g.apply(std::get<PlanePoint>(y));
    if (std::hypot(q.re, q.im) >= 1.0) return plane::distance_to_axis(q);
    return plane::distance(q, PlanePoint{0.0, 1.0});
}

/// z ∈ Shad_x(y, r): the ray from x to z meets the open ball B(y, r).
inline bool shadow_contains(const GroupAction& a, const ModelPoint& y, Length r, const BoundaryApprox& z) {
    if (!(r > 0)) throw ArgumentError("shadow radius must be positive");
    return distance_to_ray(a, z, y) < r;
}

/// Ideal endpoint of the geodesic ray from the basepoint through p (p ≠ basepoint).
inline plane::IdealPoint ray_endpoint_through(const PlanePoint& x, const PlanePoint& p) {
    plane::Mat2 g = plane::frame_segment(x, p);
    return g.inverse().apply(plane::IdealPoint::at_infinity());
}

/// Boundary approximants of Λ(Γ) from a ball. Tree: entry words with
/// displacement ≥ min. Plane: attracting fixed points of those entries,
/// deduplicated, each tagged with its word.
inline std::vector<BoundaryApprox> limit_set_sample(const GroupAction& a, const OrbitBall& ball, Length min_displacement) {
    if (ball.radius < min_displacement) throw InsufficientData("ball radius below the requested displacement");
    std::vector<BoundaryApprox> out;
    if (a.space.kind == SpaceKind::tree) {
        for (const auto& e : ball.entries)
            if (e.displacement >= min_displacement - 1e-12 && !e.word.empty()) out.emplace_back(TreeEnd{e.word});
    } else {
        std::vector<std::pair<double, Word>> seen;
        for (const auto& e : ball.entries) {
            if (e.word.empty() || e.displacement < min_displacement - 1e-12) continue;
            const auto& m = std::get<plane::Mat2>(e.element);
            plane::IdealPoint p;
            if (classify(e.element, 1e-9) == IsometryType::hyperbolic)
                p = plane::attracting_fixed_point(m);
            else
                p = ray_endpoint_through(std::get<PlanePoint>(a.basepoint), std::get<PlanePoint>(e.point));
            out.emplace_back(PlaneEnd{p, 24.0, e.word});
        }
        // dedupe by boundary angle
        std::vector<std::size_t> idx(out.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<double> ang(out.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            ang[i] = boundary_detail::angle_at(a, std::get<PlaneEnd>(out[i]).point);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return ang[x] < ang[y]; });
        std::vector<bool> keep(out.size(), true);
        for (std::size_t i = 1; i < idx.size(); ++i)
            if (std::abs(ang[idx[i]] - ang[idx[i - 1]]) < 1e-12) {
                std::size_t drop = std::get<PlaneEnd>(out[idx[i]]).word < std::get<PlaneEnd>(out[idx[i - 1]]).word
                                       ? idx[i - 1]
                                       : idx[i];
                keep[drop] = false;
            }
        std::vector<BoundaryApprox> kept;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (keep[i]) kept.push_back(std::move(out[i]));
        out = std::move(kept);
    }
    if (out.empty()) throw InsufficientData("no ball entries deep enough for limit-set samples");
    return out;
}

/// A bi-infinite geodesic between two ends, parametrized by signed arclength from
/// the point of the line nearest the basepoint (tree: nearest the root). Tree
/// lines are realized as the segment between the truncation vertices of the two ends.
struct GeodesicLine {
    SpaceKind kind = SpaceKind::tree;
    TreePoint tree_a, tree_b;
    Rational tree_offset; ///< distance (edge units) from tree_a to the point nearest the root
    plane::Mat2 frame;    ///< maps the line to the imaginary axis
    double s0 = 0.0;      ///< log-height of the point nearest the basepoint
};

inline GeodesicLine line_between(const ModelSpace& space, const ModelPoint& base, const BoundaryApprox& z,
                                 const BoundaryApprox& w) {
    if (kind_of(z) != space.kind || kind_of(w) != space.kind) throw KindMismatch("end of the wrong model space");
    GeodesicLine l;
    l.kind = space.kind;
    if (space.kind == SpaceKind::tree) {
        const auto& zw = std::get<TreeEnd>(z).word;
        const auto& ww = std::get<TreeEnd>(w).word;
        std::size_t k = common_prefix(zw.letters(), ww.letters());
        if (k >= std::min(zw.size(), ww.size())) throw InsufficientData("ends not separated at their truncation depth");
        l.tree_a = TreePoint::at_vertex(zw);
        l.tree_b = TreePoint::at_vertex(ww);
        l.tree_offset = Rational(static_cast<std::int64_t>(zw.size() - k));
        return l;
    }
    const auto& p = std::get<PlaneEnd>(z).point;
    const auto& q = std::get<PlaneEnd>(w).point;
    if (p == q) throw ArgumentError("line endpoints coincide");
    l.frame = plane::frame_line(p, q);
    PlanePoint gx = l.frame.apply(std::get<PlanePoint>(base));
    l.s0 = std::log(std::hypot(gx.re, gx.im));
    return l;
}

inline GeodesicLine line_between(const GroupAction& a, const BoundaryApprox& z, const BoundaryApprox& w) {
    boundary_detail::require_root(a);
    return line_between(a.space, a.basepoint, z, w);
}

/// Point at signed arclength u from the point of the line nearest the basepoint
/// (positive towards the second end).
inline ModelPoint line_point(const ModelSpace& space, const GeodesicLine& l, Length u) {
    if (l.kind == SpaceKind::tree) {
        Rational t = l.tree_offset + Rational::approximate(u / space.edge());
        Rational total = tree_detail::distance_units(l.tree_a, l.tree_b);
        if (t < Rational(0) || t > total) throw InsufficientData("line parameter beyond the truncation of its ends");
        return tree_geodesic_point(l.tree_a, l.tree_b, t);
    }
    return l.frame.inverse().apply(PlanePoint{0.0, std::exp(l.s0 + u)});
}

/// Distance from p to the line. Tree: exact while p lies well inside the truncation.
inline Length distance_to_line(const ModelSpace& space, const GeodesicLine& l, const ModelPoint& p) {
    if (l.kind == SpaceKind::tree) {
        const auto& tp = std::get<TreePoint>(p);
        Rational d = tree_gromov_product_exact(space, tp, l.tree_a, l.tree_b);
        // the foot must not be a truncation vertex
        Rational fa = tree_gromov_product_exact(space, l.tree_a, tp, l.tree_b);
        Rational fb = tree_gromov_product_exact(space, l.tree_b, tp, l.tree_a);
        if (fa == Rational(0) || fb == Rational(0)) throw InsufficientData("point beyond the truncation of the line");
        return d.to_double();
    }
    return plane::distance_to_axis(l.frame.apply(std::get<PlanePoint>(p)));
}

/// Points along geodesic lines between random pairs of limit samples, spaced by
/// `spacing` and kept within `radius` of the basepoint. Tree samples are deduplicated.
inline std::vector<ModelPoint> qc_hull_sample(const GroupAction& a, const std::vector<BoundaryApprox>& limit_samples,
                                              std::size_t pair_count, Rng& rng, Length spacing, Length radius) {
    if (limit_samples.size() < 2) throw ArgumentError("hull sampling needs at least 2 limit points");
    if (!(spacing > 0)) throw ArgumentError("hull spacing must be positive");
    std::uniform_int_distribution<std::size_t> pick(0, limit_samples.size() - 1);
    std::vector<ModelPoint> out;
    std::unordered_map<std::string, bool> seen;
    for (std::size_t n = 0; n < pair_count; ++n) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        GeodesicLine l;
        try {
            l = line_between(a, limit_samples[i], limit_samples[j]);
        } catch (const Error&) {
            continue;
        }
        auto steps = static_cast<long>(std::floor(radius / spacing));
        for (long k = -steps; k <= steps; ++k) {
            ModelPoint p;
            try {
                p = line_point(a.space, l, static_cast<double>(k) * spacing);
            } catch (const InsufficientData&) {
                continue;
            }
            if (distance(a.space, a.basepoint, p) > radius + 1e-12) continue;
            if (a.space.kind == SpaceKind::tree) {
                if (!seen.emplace(describe(p), true).second) continue;
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

struct Atom {
    Word word;
    Length displacement = 0.0;
    double weight = 0.0;
    std::optional<BoundaryApprox> end;
};

/// μ_s truncated to a ball; `atoms` carries every orbit point, `boundary`
/// indexes the atoms projected to ends, whose weights renormalized to 1 form the
/// reported boundary measure.
struct AtomicMeasure {
    std::vector<Atom> atoms;
    double s = 0.0;
    Length truncation_T = 0.0;
    double normalization = 0.0; ///< the partial Poincaré sum
    Length projection_depth = 0.0;
    std::vector<std::size_t> boundary;
    double boundary_mass = 0.0; ///< sum of projected weights before renormalization

    /// Renormalized boundary weight of atom i (0 for interior atoms).
    double boundary_weight(std::size_t i) const {
        return atoms[i].end ? atoms[i].weight / boundary_mass : 0.0;
    }
};

struct PattersonSullivanOptions {
    /// Atoms at displacement ≥ fraction·T are projected to the boundary.
    double projection_fraction = 2.0 / 3.0;
    /// Refuse s ≤ h_estimate when set.
    std::optional<Rate> h_estimate;
};

inline AtomicMeasure patterson_sullivan_atoms(const GroupAction& a, const OrbitBall& ball, Rate s,
                                              const PattersonSullivanOptions& opt = {}) {
    if (!(s > 0)) throw ArgumentError("Patterson-Sullivan exponent must be positive");
    if (opt.h_estimate && s <= *opt.h_estimate)
        throw ArgumentError("s must exceed the critical exponent estimate: the truncated sum is not a stable proxy "
                            "(the measure is the limit s ↓ h along a sequence)");
    AtomicMeasure m;
    m.s = s;
    m.truncation_T = ball.radius;
    m.projection_depth = opt.projection_fraction * ball.radius;
    double total = 0;
    for (const auto& e : ball.entries) total += std::exp(-s * e.displacement);
    m.normalization = total;
    for (const auto& e : ball.entries) {
        Atom at{e.word, e.displacement, std::exp(-s * e.displacement) / total, std::nullopt};
        if (!e.word.empty() && e.displacement >= m.projection_depth - 1e-12) {
            if (a.space.kind == SpaceKind::tree)
                at.end = TreeEnd{e.word};
            else
                at.end = PlaneEnd{ray_endpoint_through(std::get<PlanePoint>(a.basepoint), std::get<PlanePoint>(e.point)),
                                  e.displacement, e.word};
            m.boundary.push_back(m.atoms.size());
            m.boundary_mass += at.weight;
        }
        m.atoms.push_back(std::move(at));
    }
    if (m.boundary.empty()) throw InsufficientData("no atoms deep enough to project to the boundary");
    return m;
}

/// A single boundary atom of weight 1 (negative control for the Ahlfors audit).
inline AtomicMeasure dirac_measure(const BoundaryApprox& z) {
    AtomicMeasure m;
    m.atoms.push_back(Atom{{}, 0.0, 1.0, z});
    m.boundary = {0};
    m.boundary_mass = 1.0;
    m.normalization = 1.0;
    m.s = std::numeric_limits<double>::infinity();
    return m;
}

struct MassBracket {
    double lower = 0.0; ///< atoms decided inside
    double upper = 0.0; ///< atoms decided inside or undecided
};

inline MassBracket ball_mass(const GroupAction& a, const AtomicMeasure& m, const BoundaryApprox& z, double rho,
                             BallKind kind) {
    MassBracket b;
    for (std::size_t i : m.boundary) {
        Tri t = generalized_ball_contains(a, z, rho, *m.atoms[i].end, kind);
        double w = m.boundary_weight(i);
        if (t == Tri::yes) b.lower += w;
        if (t != Tri::no) b.upper += w;
    }
    return b;
}

inline MassBracket shadow_mass(const GroupAction& a, const AtomicMeasure& m, const ModelPoint& y, Length r) {
    MassBracket b;
    for (std::size_t i : m.boundary) {
        double w = m.boundary_weight(i);
        try {
            if (shadow_contains(a, y, r, *m.atoms[i].end)) b.lower += w, b.upper += w;
        } catch (const InsufficientData&) {
            b.upper += w;
        }
    }
    return b;
}

struct AhlforsSample {
    BoundaryApprox center;
    double rho = 1.0;
};

struct AhlforsRow {
    double rho = 0.0;
    double ratio_lower = 0.0; ///< decided mass / ρ^h
    double ratio_upper = 0.0; ///< decided + undecided mass / ρ^h
};

struct AhlforsReport {
    double A_lower = std::numeric_limits<double>::infinity(); ///< min of the lower ratios
    double A_upper = 0.0;                                     ///< max of the upper ratios
    double step1_bound = 0.0;                                 ///< e^{h(55δ + 3D)}
    bool step1_pass = false;
    Length R0 = 0.0;           ///< log 2/h + 55δ + 3D + 5δ
    double Q_shadow = 1.0;     ///< smallest Q ≥ 1 with μ(Shad(gx, R0)) ≥ e^{−h d(x,gx)}/(2Q) on all sampled g
    double step3_bound = 0.0;  ///< (1/2Q)·e^{−h(R0 + 28δ + 2D)} with the measured Q
    bool step3_pass = false;
    std::size_t decidable = 0;
    std::size_t skipped = 0;
    std::vector<AhlforsRow> rows;
};

/// Ratios μ(B(z, ρ))/ρ^h over the samples, checked against the explicit
/// upper constant; Q from the shadow inequality is measured on the given elements.
inline AhlforsReport check_ahlfors_regularity(const GroupAction& a, const AtomicMeasure& m, Rate h,
                                              const std::vector<AhlforsSample>& samples,
                                              const std::vector<OrbitEntry>& shadow_elements,
                                              BallKind kind = BallKind::open) {
    if (!(h > 0)) throw ArgumentError("Ahlfors audit needs h > 0");
    AhlforsReport r;
    double delta = a.declared_delta, D = a.declared_codiameter;
    r.step1_bound = std::exp(h * (55.0 * delta + 3.0 * D));
    r.R0 = std::numbers::ln2 / h + 55.0 * delta + 3.0 * D + 5.0 * delta;
    for (const auto& s : samples) {
        auto mass = ball_mass(a, m, s.center, s.rho, kind);
        if (mass.upper == 0.0 && mass.lower == 0.0) {
            ++r.skipped;
            continue;
        }
        if (mass.lower == 0.0 && mass.upper > 0.0 && mass.lower != mass.upper) {
            // nothing decided inside: only the upper side is informative
            AhlforsRow row{s.rho, 0.0, mass.upper / std::pow(s.rho, h)};
            r.A_upper = std::max(r.A_upper, row.ratio_upper);
            r.rows.push_back(row);
            ++r.decidable;
            continue;
        }
        AhlforsRow row{s.rho, mass.lower / std::pow(s.rho, h), mass.upper / std::pow(s.rho, h)};
        r.A_upper = std::max(r.A_upper, row.ratio_upper);
        r.A_lower = std::min(r.A_lower, row.ratio_lower);
        r.rows.push_back(row);
        ++r.decidable;
    }
    if (r.decidable == 0) throw InsufficientData("no decidable Ahlfors samples");
    r.step1_pass = r.A_upper <= r.step1_bound;
    for (const auto& e : shadow_elements) {
        if (e.word.empty()) continue;
        auto mass = shadow_mass(a, m, e.point, r.R0);
        double need = std::exp(-h * e.displacement) / 2.0;
        if (mass.lower <= 0.0) {
            r.Q_shadow = std::numeric_limits<double>::infinity();
            continue;
        }
        r.Q_shadow = std::max(r.Q_shadow, need / mass.lower);
    }
    r.step3_bound = std::exp(-h * (r.R0 + 28.0 * delta + 2.0 * D)) / (2.0 * r.Q_shadow);
    r.step3_pass = std::isfinite(r.A_lower) && r.A_lower >= r.step3_bound;
    return r;
}

struct QuasiconformalityReport {
    double Q = 1.0;
    std::size_t cells_used = 0;
    std::size_t cells_skipped = 0;
};

/// Tree cells are the cylinders of the given words (each longer than g);
/// ratio μ(g⁻¹C)/μ(C) against e^{−h·B_z(x, gx)} at the cylinder's word.
inline QuasiconformalityReport check_quasiconformality(const GroupAction& a, const AtomicMeasure& m, Rate h,
                                                       const Isometry& g, const std::vector<Word>& cylinders) {
    if (a.space.kind != SpaceKind::tree) throw KindMismatch("cylinder cells are tree cells; use arcs on the plane");
    boundary_detail::require_root(a);
    const auto& gw = std::get<Word>(g);
    QuasiconformalityReport r;
    auto mass = [&](const Word& w) {
        double s = 0;
        for (std::size_t i : m.boundary) {
            const auto& e = std::get<TreeEnd>(*m.atoms[i].end).word;
            if (e.size() < w.size()) throw InsufficientData("cylinder deeper than the projected atoms");
            if (common_prefix(e.letters(), w.letters()) >= w.size()) s += m.boundary_weight(i);
        }
        return s;
    };
    for (const auto& w : cylinders) {
        if (w.size() <= gw.size()) throw ArgumentError("cylinder must be longer than the element");
        double mc = mass(w);
        double mg = mass(gw.inverse() * w);
        if (mc == 0.0 || mg == 0.0) {
            ++r.cells_skipped;
            continue;
        }
        Ray ray{a.basepoint, TreeEnd{w}};
        double b = busemann_limit(a.space, ray, a.orbit_point(g));
        double expected = std::exp(-h * b);
        double ratio = mg / mc;
        r.Q = std::max({r.Q, ratio / expected, expected / ratio});
        ++r.cells_used;
    }
    return r;
}

/// Plane cells are boundary arcs of half-width `half_width` (disk angle at the
/// basepoint) around the sampled ends; g⁻¹ maps each arc to an arc.
inline QuasiconformalityReport check_quasiconformality(const GroupAction& a, const AtomicMeasure& m, Rate h,
                                                       const Isometry& g, const std::vector<BoundaryApprox>& centers,
                                                       double half_width) {
    if (a.space.kind != SpaceKind::plane) throw KindMismatch("arc cells are plane cells");
    const auto& gm = std::get<plane::Mat2>(g);
    plane::Mat2 to_disk = plane::center_at(std::get<PlanePoint>(a.basepoint));
    std::vector<std::pair<double, double>> atoms; // (angle, weight)
    for (std::size_t i : m.boundary)
        atoms.emplace_back(boundary_detail::angle_at(a, std::get<PlaneEnd>(*m.atoms[i].end).point), m.boundary_weight(i));
    auto arc_mass = [&](double lo, double width) {
        double s = 0;
        for (const auto& [ang, w] : atoms) {
            double d = std::remainder(ang - lo, 2.0 * std::numbers::pi);
            if (d < 0) d += 2.0 * std::numbers::pi;
            if (d <= width) s += w;
        }
        return s;
    };
    auto angle_of = [&](const plane::IdealPoint& p) { return plane::boundary_angle(to_disk.apply(p)); };
    auto point_at = [&](double ang) { return to_disk.inverse().apply(plane::from_boundary_angle(ang)); };
    QuasiconformalityReport r;
    plane::Mat2 ginv = gm.inverse();
    for (const auto& c : centers) {
        const auto& ce = std::get<PlaneEnd>(c);
        double th = angle_of(ce.point);
        double lo = th - half_width;
        double mc = arc_mass(lo, 2.0 * half_width);
        // image arc: from g⁻¹(lo) counterclockwise to g⁻¹(hi) (orientation preserved)
        double ilo = angle_of(ginv.apply(point_at(lo)));
        double ihi = angle_of(ginv.apply(point_at(th + half_width)));
        double iw = std::remainder(ihi - ilo, 2.0 * std::numbers::pi);
        if (iw < 0) iw += 2.0 * std::numbers::pi;
        double mg = arc_mass(ilo, iw);
        if (mc == 0.0 || mg == 0.0) {
            ++r.cells_skipped;
            continue;
        }
        Ray ray{a.basepoint, ce};
        double b = busemann_limit(a.space, ray, a.orbit_point(g));
        double expected = std::exp(-h * b);
        double ratio = mg / mc;
        r.Q = std::max({r.Q, ratio / expected, expected / ratio});
        ++r.cells_used;
    }
    return r;
}

} // namespace hypcrit
