#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hypcrit/errors.hpp"
#include "hypcrit/plane.hpp"
#include "hypcrit/space.hpp"
#include "hypcrit/word.hpp"

namespace hypcrit {

/// A group element realized concretely: a reduced word acting on the free-group
/// Cayley tree by left multiplication, or a unit-determinant matrix acting on
/// the upper half-plane.
using Isometry = std::variant<Word, plane::Mat2>;

inline SpaceKind kind_of(const Isometry& g) {
    return std::holds_alternative<Word>(g) ? SpaceKind::tree : SpaceKind::plane;
}

inline Isometry identity_isometry(SpaceKind kind) {
    if (kind == SpaceKind::tree) return Word{};
    return plane::Mat2{};
}

inline ModelPoint apply(const Isometry& g, const ModelPoint& p) {
    if (kind_of(g) != kind_of(p)) throw KindMismatch("isometry and point belong to different model spaces");
    if (const auto* w = std::get_if<Word>(&g)) {
        const auto& tp = std::get<TreePoint>(p);
        return tree_detail::canonical(*w * tp.vertex, tp.dir, tp.frac);
    }
    return std::get<plane::Mat2>(g).apply(std::get<PlanePoint>(p));
}

/// Action on ends. Tree ends lose depth when the prefix cancels.
inline BoundaryApprox apply(const Isometry& g, const BoundaryApprox& z) {
    if (kind_of(g) != kind_of(z)) throw KindMismatch("isometry and end belong to different model spaces");
    if (const auto* w = std::get_if<Word>(&g)) return TreeEnd{*w * std::get<TreeEnd>(z).word};
    auto e = std::get<PlaneEnd>(z);
    e.point = std::get<plane::Mat2>(g).apply(e.point);
    return e;
}

inline Isometry compose(const Isometry& g, const Isometry& h) {
    if (kind_of(g) != kind_of(h)) throw KindMismatch("cannot compose isometries of different model spaces");
    if (const auto* w = std::get_if<Word>(&g)) return *w * std::get<Word>(h);
    return std::get<plane::Mat2>(g) * std::get<plane::Mat2>(h);
}

inline Isometry inverse(const Isometry& g) {
    if (const auto* w = std::get_if<Word>(&g)) return w->inverse();
    return std::get<plane::Mat2>(g).inverse();
}

enum class IsometryType { identity, elliptic, parabolic, hyperbolic };

inline const char* to_string(IsometryType t) {
    switch (t) {
    case IsometryType::identity: return "identity";
    case IsometryType::elliptic: return "elliptic";
    case IsometryType::parabolic: return "parabolic";
    case IsometryType::hyperbolic: return "hyperbolic";
    }
    return "?";
}

inline IsometryType classify(const Isometry& g, double tol = 1e-12) {
    if (const auto* w = std::get_if<Word>(&g)) return w->empty() ? IsometryType::identity : IsometryType::hyperbolic;
    const auto& m = std::get<plane::Mat2>(g);
    double tr = std::abs(m.trace());
    if (tr > 2.0 + tol) return IsometryType::hyperbolic;
    if (tr < 2.0 - tol) return IsometryType::elliptic;
    bool ident = std::abs(m.b) < tol && std::abs(m.c) < tol && std::abs(std::abs(m.a) - 1) < tol;
    return ident ? IsometryType::identity : IsometryType::parabolic;
}

/// Translation length. Tree: edge length × cyclically reduced length.
/// Plane: 2·arccosh(|trace|/2); elliptic and parabolic elements are rejected.
inline Length translation_length(const ModelSpace& space, const Isometry& g) {
    if (kind_of(g) != space.kind) throw KindMismatch("isometry of the wrong model space");
    if (const auto* w = std::get_if<Word>(&g))
        return (Rational(static_cast<std::int64_t>(w->cyclic_length())) * space.edge_length).to_double();
    const auto& m = std::get<plane::Mat2>(g);
    IsometryType t = classify(g);
    if (t != IsometryType::hyperbolic)
        throw ClassificationError(std::string("translation length undefined: element is ") + to_string(t) +
                                  " (|trace| = " + std::to_string(std::abs(m.trace())) + ")");
    return 2.0 * std::acosh(std::abs(m.trace()) / 2.0);
}

/// Evaluates a word in the given generators (generator i for letter +i).
inline Isometry evaluate(const Word& w, const std::vector<Isometry>& generators, SpaceKind kind) {
    if (kind == SpaceKind::tree) return w;
    plane::Mat2 m;
    for (std::size_t i = 0; i < w.size(); ++i) {
        Letter l = w[i];
        const auto& g = std::get<plane::Mat2>(generators.at(static_cast<std::size_t>(std::abs(l)) - 1));
        m = m * (l > 0 ? g : g.inverse());
    }
    return m;
}

/// Closed arc of the boundary circle of the disk model.
struct BoundaryArc {
    double center = 0.0;     ///< angle
    double half_width = 0.0; ///< angular radius

    bool contains(double angle, double slack = 0.0) const {
        double d = std::remainder(angle - center, 2.0 * std::numbers::pi);
        return std::abs(d) <= half_width + slack;
    }
    /// Euclidean center and radius of the circle orthogonal to the unit circle bounding the arc.
    double circle_center_distance() const { return 1.0 / std::cos(half_width); }
    double circle_radius() const { return std::tan(half_width); }
};

/// Hyperbolic distance between the half-planes cut off by two disjoint arcs
/// (inversive distance of the bounding circles).
inline double arc_separation(const BoundaryArc& a, const BoundaryArc& b) {
    std::complex<double> ca = std::polar(a.circle_center_distance(), a.center);
    std::complex<double> cb = std::polar(b.circle_center_distance(), b.center);
    double ra = a.circle_radius(), rb = b.circle_radius();
    double inv = (std::norm(ca - cb) - ra * ra - rb * rb) / (2.0 * ra * rb);
    return inv > 1.0 ? std::acosh(inv) : 0.0;
}

/// Hyperbolic distance from the disk origin (the point i) to the half-plane of an arc.
inline double arc_distance_from_center(const BoundaryArc& a) {
    double rho = 1.0 / std::cos(a.half_width) - std::tan(a.half_width);
    return 2.0 * std::atanh(rho);
}

/// Schottky data: generator g_i maps the complement of source[i] onto target[i].
struct SchottkyDescription {
    std::vector<plane::Mat2> generators;
    std::vector<BoundaryArc> source;
    std::vector<BoundaryArc> target;

    /// Ping-pong arcs from perpendicular bisectors at the point i: target = {y : d(y, g i) < d(y, i)},
    /// source = {y : d(y, g⁻¹ i) < d(y, i)}. g maps the complement of the source exactly onto the target.
    static SchottkyDescription from_bisectors(std::vector<plane::Mat2> gens) {
        SchottkyDescription d;
        auto arc_towards = [](const plane::Point& p) {
            double s = plane::distance(PlanePoint{0.0, 1.0}, p) / 2.0;
            double half = std::numbers::pi / 2.0 - 2.0 * std::atan(std::tanh(s / 2.0));
            return BoundaryArc{std::arg(plane::to_disk(p)), half};
        };
        for (const auto& g : gens) {
            d.target.push_back(arc_towards(g.apply(PlanePoint{0.0, 1.0})));
            d.source.push_back(arc_towards(g.inverse().apply(PlanePoint{0.0, 1.0})));
        }
        d.generators = std::move(gens);
        return d;
    }
};

/// The standard pair: z ↦ e^L z and its conjugate by the quarter rotation about i.
inline std::vector<plane::Mat2> schottky_pair(double length) {
    plane::Mat2 a = plane::Mat2::diag_translation(length);
    plane::Mat2 k = plane::Mat2::rotation(std::numbers::pi / 2.0);
    return {a, k * a * k.inverse()};
}

struct PingPongCertificate {
    std::size_t samples_per_disk = 0;
    /// Lower bound on d(i, w i) over nonempty reduced words.
    Length systole_lower_bound = 0.0;
    /// Minimum hyperbolic gap between distinct disks; each extra letter adds at least this much.
    Length per_letter_gain = 0.0;
    /// Distance from i to the nearest disk.
    Length first_letter_bound = 0.0;
};

struct PingPongFailure {
    std::string reason;
    double angle = 0.0; ///< boundary sample (disk-model angle) that violates the check
};

using PingPongResult = std::variant<PingPongCertificate, PingPongFailure>;

/// Certifies the ping-pong configuration by dense boundary sampling:
/// the 2m arcs are pairwise disjoint and each generator maps the complement of
/// its source arc into its target arc (and its inverse the complement of the
/// target into the source). On success the group is free, discrete and acts
/// without torsion; the certificate carries the linear displacement bound
/// d(i, w i) ≥ first_letter_bound + (|w| − 1)·per_letter_gain.
inline PingPongResult certify_ping_pong(const SchottkyDescription& desc, std::size_t boundary_samples = 10000) {
    std::size_t m = desc.generators.size();
    if (m < 2) throw ArgumentError("ping-pong certification needs at least 2 generators");
    if (desc.source.size() != m || desc.target.size() != m) throw ArgumentError("one source and one target arc per generator");
    std::vector<BoundaryArc> arcs;
    for (std::size_t i = 0; i < m; ++i) {
        arcs.push_back(desc.source[i]);
        arcs.push_back(desc.target[i]);
    }
    for (const auto& a : arcs)
        if (a.half_width < 0.0 || a.half_width >= std::numbers::pi / 2.0)
            throw ArgumentError("malformed ping-pong disk (radius outside [0, π/2))");

    // pairwise disjointness, checked analytically and on boundary samples
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        for (std::size_t j = i + 1; j < arcs.size(); ++j) {
            double gap = std::abs(std::remainder(arcs[i].center - arcs[j].center, 2.0 * std::numbers::pi));
            if (gap <= arcs[i].half_width + arcs[j].half_width)
                return PingPongFailure{"disks " + std::to_string(i) + " and " + std::to_string(j) + " are not disjoint",
                                       arcs[j].center};
            for (std::size_t k = 0; k <= boundary_samples; ++k) {
                double t = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(boundary_samples);
                double ang = arcs[i].center + t * arcs[i].half_width;
                if (arcs[j].contains(ang))
                    return PingPongFailure{"disk boundary samples overlap", ang};
            }
        }
    }

    auto maps_into = [&](const plane::Mat2& g, const BoundaryArc& from, const BoundaryArc& into) -> std::optional<double> {
        // sample the closed complement of `from`
        double span = 2.0 * std::numbers::pi - 2.0 * from.half_width;
        for (std::size_t k = 0; k <= boundary_samples; ++k) {
            double ang = from.center + from.half_width + span * static_cast<double>(k) / static_cast<double>(boundary_samples);
            double img = plane::boundary_angle(g.apply(plane::from_boundary_angle(ang)));
            if (!into.contains(img, 1e-9)) return ang;
        }
        return std::nullopt;
    };
    for (std::size_t i = 0; i < m; ++i) {
        const auto& g = desc.generators[i];
        if (auto bad = maps_into(g, desc.source[i], desc.target[i]))
            return PingPongFailure{"generator " + std::to_string(i + 1) + " does not map the source complement into its target", *bad};
        if (auto bad = maps_into(g.inverse(), desc.target[i], desc.source[i]))
            return PingPongFailure{"inverse of generator " + std::to_string(i + 1) + " does not map the target complement into its source", *bad};
    }

    PingPongCertificate cert;
    cert.samples_per_disk = boundary_samples;
    cert.first_letter_bound = std::numeric_limits<double>::infinity();
    cert.per_letter_gain = std::numeric_limits<double>::infinity();
    for (const auto& a : arcs) cert.first_letter_bound = std::min(cert.first_letter_bound, arc_distance_from_center(a));
    for (std::size_t i = 0; i < arcs.size(); ++i)
        for (std::size_t j = i + 1; j < arcs.size(); ++j)
            cert.per_letter_gain = std::min(cert.per_letter_gain, arc_separation(arcs[i], arcs[j]));
    // w i lies in the target disk of the first letter, which does not contain i.
    cert.systole_lower_bound = cert.first_letter_bound;
    if (!(cert.systole_lower_bound > 0.0))
        return PingPongFailure{"basepoint lies on a ping-pong disk", 0.0};
    return cert;
}

} // namespace hypcrit
