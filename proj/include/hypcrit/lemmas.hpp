#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hypcrit/boundary.hpp"
#include "hypcrit/packing.hpp"

namespace hypcrit {

/// One sampled inequality "value ≤ constant". A configuration whose value
/// exceeds the constant by more than the tolerance is a violation.
struct InequalityCheck {
    InequalityCheck(std::string n, double c, double tol) : name(std::move(n)), constant(c), tolerance(tol) {}

    std::string name;
    double constant = 0.0;
    double tolerance = 0.0;
    std::size_t configurations = 0;
    std::size_t violations = 0;
    double max_value = -std::numeric_limits<double>::infinity();
    std::optional<std::string> witness; ///< first violating configuration

    double max_defect() const { return configurations == 0 ? 0.0 : max_value - constant; }
    bool pass() const { return violations == 0; }

    void record(double value, const std::string& config = {}) {
        ++configurations;
        max_value = std::max(max_value, value);
        if (value > constant + tolerance) {
            ++violations;
            if (!witness) witness = config;
        }
    }
};

struct InequalityReport {
    std::vector<InequalityCheck> checks;

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass(); });
    }
    const InequalityCheck& at(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw ArgumentError("no check named " + name);
    }
};

struct LemmaSampling {
    std::size_t configurations = 1000;
    Length radius = 6.0;
    std::uint64_t seed = 1;
    std::size_t hull_ends = 5; ///< size of the end set C for the hull checks
};

namespace lemma_detail {

inline double tolerance_for(const ModelSpace& space) { return space.kind == SpaceKind::tree ? 1e-12 : 1e-7; }

/// (z, z')_x for ends seen from an arbitrary point; nullopt when a tree
/// comparison reaches the truncation.
inline std::optional<Length> end_product(const ModelSpace& space, const ModelPoint& x, const BoundaryApprox& z,
                                         const BoundaryApprox& w) {
    if (space.kind == SpaceKind::tree) {
        const auto& tx = std::get<TreePoint>(x);
        TreePoint a = TreePoint::at_vertex(std::get<TreeEnd>(z).word);
        TreePoint b = TreePoint::at_vertex(std::get<TreeEnd>(w).word);
        Rational p = tree_gromov_product_exact(space, tx, a, b);
        if (p >= tree_distance_exact(space, tx, a) || p >= tree_distance_exact(space, tx, b)) return std::nullopt;
        return p.to_double();
    }
    plane::Mat2 c = plane::center_at(std::get<PlanePoint>(x));
    double th = std::abs(std::remainder(plane::boundary_angle(c.apply(std::get<PlaneEnd>(z).point)) -
                                            plane::boundary_angle(c.apply(std::get<PlaneEnd>(w).point)),
                                        2.0 * std::numbers::pi));
    if (th == 0.0) return std::nullopt;
    return -std::log(std::sin(th / 2.0));
}

inline std::string show(std::initializer_list<std::string> parts) {
    std::string s;
    for (const auto& p : parts) {
        if (!s.empty()) s += " ";
        s += p;
    }
    return s;
}

inline std::string show_end(const BoundaryApprox& z) {
    if (const auto* t = std::get_if<TreeEnd>(&z)) return "end(" + t->word.str() + ")";
    const auto& p = std::get<PlaneEnd>(z).point;
    return p.infinite ? std::string("end(inf)") : "end(" + std::to_string(p.x) + ")";
}

} // namespace lemma_detail

/// Samples the six toolkit inequalities (thin triangles, projection, products
/// versus rays, parallel rays, hull quasiconvexity, ray-to-line approximation)
/// against the constants 4δ, 4δ, 4δ, 8δ, 36δ and 14δ.
inline InequalityReport check_geodesic_lemmas(const ModelSpace& space, Length delta, const LemmaSampling& plan = {}) {
    using namespace lemma_detail;
    double tol = tolerance_for(space);
    InequalityCheck thin{"thin_triangles", 4 * delta, tol};
    InequalityCheck proj{"projection", 4 * delta, tol};
    InequalityCheck rays{"product_rays", 4 * delta, tol};
    InequalityCheck par{"parallel_rays", 8 * delta, tol};
    InequalityCheck hull{"qc_hull", 36 * delta, tol};
    InequalityCheck ray_line{"ray_to_line", 14 * delta, tol};

    Rng rng(plan.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Length R = plan.radius;
    ModelPoint base = space.basepoint();
    // tree ends deep enough that every ray and line used below stays inside the truncation
    auto end_depth = static_cast<std::size_t>(std::ceil(4.0 * R / space.edge())) + 6;
    auto rand_pt = [&] { return random_point(space, R, rng); };
    auto rand_end = [&] { return random_end(space, rng, end_depth); };

    for (std::size_t n = 0; n < plan.configurations; ++n) {
        // thin triangles: points at equal distance from a corner along the two sides
        {
            ModelPoint v[3] = {rand_pt(), rand_pt(), rand_pt()};
            int c = static_cast<int>(n % 3);
            const auto& x = v[c];
            const auto& y = v[(c + 1) % 3];
            const auto& z = v[(c + 2) % 3];
            Length g = gromov_product(space, x, y, z);
            Length s = unit(rng) * g;
            double d = distance(space, geodesic_point(space, x, y, s), geodesic_point(space, x, z, s));
            thin.record(d, show({describe(x), describe(y), describe(z), "s=" + std::to_string(s)}));
        }
        // projection: d(x, [y,z]) − (y,z)_x
        {
            ModelPoint x = rand_pt(), y = rand_pt(), z = rand_pt();
            double v = distance_to_segment(space, x, y, z) - gromov_product(space, x, y, z);
            proj.record(v, show({describe(x), describe(y), describe(z)}));
        }
        // products versus rays: d(ξ_z(T − δ), ξ_z'(T − δ)) for T = (z,z')_x
        {
            ModelPoint x = rand_pt();
            BoundaryApprox z = rand_end(), w = rand_end();
            if (auto T = end_product(space, x, z, w)) {
                Length t = std::max(0.0, *T - delta);
                double d = distance(space, ray_point(space, Ray{x, z}, t), ray_point(space, Ray{x, w}, t));
                rays.record(d, show({describe(x), show_end(z), show_end(w)}));
            }
        }
        // parallel rays: rays from x and x' to one end, offsets t1 + t2 = d(x, x')
        {
            ModelPoint x = rand_pt(), x2 = rand_pt();
            BoundaryApprox z = rand_end();
            Length d = distance(space, x, x2);
            double b = busemann_limit(space, Ray{x, z}, x2);
            Length t1 = (d - b) / 2.0, t2 = (d + b) / 2.0;
            double worst = 0.0;
            for (int k = 0; k <= 16; ++k) {
                Length t = R * k / 8.0;
                worst = std::max(worst, distance(space, ray_point(space, Ray{x, z}, std::max(0.0, t + t1)),
                                                 ray_point(space, Ray{x2, z}, std::max(0.0, t + t2))));
            }
            par.record(worst, show({describe(x), describe(x2), show_end(z)}));
        }
        // hull: a point on a segment between two lines with ends in C, against the nearest line
        std::vector<BoundaryApprox> C;
        while (C.size() < std::max<std::size_t>(plan.hull_ends, 3)) {
            BoundaryApprox e = rand_end();
            bool ok = true;
            for (const auto& c : C)
                if (!end_product(space, base, c, e)) ok = false;
            if (ok) C.push_back(std::move(e));
        }
        std::vector<GeodesicLine> lines;
        for (std::size_t i = 0; i < C.size(); ++i)
            for (std::size_t j = i + 1; j < C.size(); ++j) lines.push_back(line_between(space, base, C[i], C[j]));
        auto nearest_line = [&](const ModelPoint& p) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& l : lines) best = std::min(best, distance_to_line(space, l, p));
            return best;
        };
        {
            std::uniform_int_distribution<std::size_t> pick(0, lines.size() - 1);
            const auto& l1 = lines[pick(rng)];
            const auto& l2 = lines[pick(rng)];
            ModelPoint p = line_point(space, l1, (unit(rng) - 0.5) * R);
            ModelPoint q = line_point(space, l2, (unit(rng) - 0.5) * R);
            ModelPoint m = geodesic_point(space, p, q, unit(rng) * distance(space, p, q));
            hull.record(nearest_line(m), show({describe(p), describe(q), describe(m)}));
        }
        // ray-to-line: from x on a line of C, the ray to each end of C stays near the lines
        {
            ModelPoint x = line_point(space, lines[0], (unit(rng) - 0.5) * R);
            std::uniform_int_distribution<std::size_t> pick(0, C.size() - 1);
            const auto& z = C[pick(rng)];
            double worst = 0.0;
            for (int k = 0; k <= 16; ++k) worst = std::max(worst, nearest_line(ray_point(space, Ray{x, z}, R * k / 8.0)));
            ray_line.record(worst, show({describe(x), show_end(z)}));
        }
    }
    return InequalityReport{{thin, proj, rays, par, hull, ray_line}};
}

struct ShadowLemmaOptions {
    std::size_t configurations = 1000;
    std::uint64_t seed = 1;
    double T_min = 0.5;
    double T_max = 8.0;
    double visual_a = 0.0;          ///< 0 selects 1 on trees and ln 2/(4δ) on the plane
    std::size_t pack_set_size = 12; ///< size of the sampled end sets for Pack*/Cov
    std::size_t pack_sets = 1000;
    std::size_t premise_candidates = 2048; ///< ends scanned per configuration for the inclusion premises
};

struct CylinderPackCov {
    std::size_t pack_star = 0;
    std::size_t cov = 0;
};

/// Exact Pack*(C, ρ) and Cov(C, ρ) for a set C of tree ends sharing one
/// truncation depth, balls restricted to C. At the root, B(z, ρ) ∩ C is the
/// cylinder of depth ⌊log(1/ρ)/ℓ⌋ + 1 around z, so both counts equal the
/// number of distinct prefixes of that length.
inline CylinderPackCov tree_cylinder_pack_cov(const ModelSpace& space, const std::vector<TreeEnd>& C, double rho) {
    if (space.kind != SpaceKind::tree) throw KindMismatch("cylinder counting is a tree computation");
    if (!(rho > 0) || rho > 1) throw ArgumentError("radius must lie in (0, 1]");
    auto k = static_cast<std::size_t>(std::floor(std::log(1.0 / rho) / space.edge() + 1e-12)) + 1;
    std::set<std::string> prefixes;
    for (const auto& z : C) {
        if (z.depth() < k) throw InsufficientData("ends shallower than the cylinder depth");
        prefixes.insert(z.word.prefix(k).key());
    }
    return {prefixes.size(), prefixes.size()};
}

namespace lemma_detail {

/// Exact Pack*/Cov on a finite end set from a product matrix P (P[i][i] = ∞),
/// with balls B(c, e^{−T}) ∩ C = {y : P[c][y] > T}.
inline CylinderPackCov finite_pack_cov(const std::vector<std::vector<double>>& P, double T) {
    std::size_t n = P.size();
    std::vector<std::uint32_t> ball(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (P[i][j] > T) ball[i] |= std::uint32_t{1} << j;
    std::vector<std::uint32_t> conflict(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && (ball[i] & ball[j])) conflict[i] |= std::uint32_t{1} << j;
    std::uint32_t all = n == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1;
    std::vector<std::size_t> cur, best_cover, best_pack;
    detail::min_cover(ball, all, 0, cur, best_cover);
    cur.clear();
    detail::max_packing(conflict, all, cur, best_pack);
    return {best_pack.size(), best_cover.size()};
}

} // namespace lemma_detail

/// Samples the shadow-ball inclusions, the visual ball comparison and the
/// Pack*/Cov inequalities on boundary approximants of the action.
/// Shadow-in-ball: ball membership must not be decided "no". Ball-in-shadow
/// is checked with the closed radius 7δ. Pack*/Cov use balls restricted to the
/// sampled set; tree sets of full cylinders are counted exactly for T ≤ 8.
inline InequalityReport check_shadow_ball_lemma(const GroupAction& a, const std::vector<BoundaryApprox>& ends,
                                                const ShadowLemmaOptions& opt = {}) {
    using namespace lemma_detail;
    if (ends.size() < 2) throw ArgumentError("shadow-ball audit needs at least 2 ends");
    const double delta = a.declared_delta;
    const double tol = tolerance_for(a.space);
    double va = opt.visual_a > 0 ? opt.visual_a : (delta > 0 ? std::numbers::ln2 / (4.0 * delta) : 1.0);
    double V = std::exp(va * delta);

    InequalityCheck in_shadow{"ball_in_shadow", 7 * delta, tol};
    InequalityCheck in_ball{"shadow_in_ball", 0.0, 0.0};
    InequalityCheck comparison{"ball_comparison", 0.0, 0.0};
    InequalityCheck pack1{"pack_star_le_cov", 0.0, 0.0};
    InequalityCheck pack2{"cov_le_pack_star", 0.0, 0.0};

    Rng rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
    for (std::size_t n = 0; n < opt.configurations; ++n) {
        const auto& z = ends[pick(rng)];
        const auto& w = ends[pick(rng)];
        double T = opt.T_min + unit(rng) * (opt.T_max - opt.T_min);
        ModelPoint y = ray_point(a.space, Ray{a.basepoint, z}, T);
        std::string cfg = show({show_end(z), show_end(w), "T=" + std::to_string(T)});
        // the inclusions are tested on an end drawn among those meeting the
        // premise, from a uniform subsample of the ends
        auto draw_hit = [&](auto&& premise) -> const BoundaryApprox* {
            std::vector<const BoundaryApprox*> hits;
            std::size_t tries = std::min<std::size_t>(ends.size(), opt.premise_candidates);
            for (std::size_t k = 0; k < tries; ++k) {
                const auto& v = tries == ends.size() ? ends[k] : ends[pick(rng)];
                if (premise(v)) hits.push_back(&v);
            }
            if (hits.empty()) return nullptr;
            return hits[std::uniform_int_distribution<std::size_t>(0, hits.size() - 1)(rng)];
        };
        if (auto v = draw_hit([&](const BoundaryApprox& e) {
                return generalized_ball_contains(a, z, std::exp(-T), e) == Tri::yes;
            }))
            in_shadow.record(distance_to_ray(a, *v, y), show({show_end(z), show_end(*v), "T=" + std::to_string(T)}));
        double r = 0.05 + unit(rng) * 3.0;
        if (auto v = draw_hit([&](const BoundaryApprox& e) { return shadow_contains(a, y, r, e); })) {
            // radius above T: the ball is all of the boundary
            bool refuted = r < T && generalized_ball_contains(a, z, std::exp(-T + r), *v) == Tri::no;
            in_ball.record(refuted ? 1.0 : 0.0,
                           show({show_end(z), show_end(*v), "T=" + std::to_string(T), "r=" + std::to_string(r)}));
        }
        if (!(z == w)) {
            double rho = std::exp(-T);
            auto vd = visual_distance({va}, a, z, w);
            Tri inside = generalized_ball_contains(a, z, rho, w);
            bool bad = (vd.upper < std::pow(rho, va) / V && inside == Tri::no) ||
                       (inside == Tri::yes && vd.lower >= V * std::pow(rho, va));
            comparison.record(bad ? 1.0 : 0.0, cfg);
        }
    }

    // Pack*/Cov on sampled finite end sets
    std::size_t m = std::min<std::size_t>(opt.pack_set_size, std::min<std::size_t>(ends.size(), 24));
    for (std::size_t n = 0; n < opt.pack_sets; ++n) {
        std::vector<std::size_t> idx;
        std::set<std::size_t> used;
        while (idx.size() < m) {
            std::size_t i = pick(rng);
            if (used.insert(i).second) idx.push_back(i);
        }
        std::vector<std::vector<double>> P(m, std::vector<double>(m, std::numeric_limits<double>::infinity()));
        bool resolved = true;
        for (std::size_t i = 0; i < m && resolved; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                auto b = boundary_product_bracket(a, ends[idx[i]], ends[idx[j]]);
                if (!std::isfinite(b.upper)) {
                    resolved = false;
                    break;
                }
                // plane: the ray-limit product
                double p = a.space.kind == SpaceKind::tree ? b.lower : b.upper - delta;
                P[i][j] = P[j][i] = p;
            }
        if (!resolved) continue;
        double T = opt.T_min + unit(rng) * (opt.T_max - opt.T_min);
        auto wide = finite_pack_cov(P, T - delta);
        auto tight = finite_pack_cov(P, T);
        std::string cfg = "set " + std::to_string(n) + " T=" + std::to_string(T);
        pack1.record(static_cast<double>(wide.pack_star) - static_cast<double>(tight.cov), cfg);
        pack2.record(static_cast<double>(wide.cov) - static_cast<double>(tight.pack_star), cfg);
    }

    InequalityReport rep{{in_shadow, in_ball, comparison, pack1, pack2}};
    if (a.space.kind == SpaceKind::tree) {
        // full cylinder sets: all ends of depth 9 (edge units), T = 1..8
        InequalityCheck cyl{"pack_cov_cylinders", 0.0, 0.0};
        std::vector<TreeEnd> all;
        std::vector<Word> frontier{Word{}};
        for (int d = 0; d < 9; ++d) {
            std::vector<Word> next;
            for (const auto& w : frontier)
                for (int i = 1; i <= a.space.rank(); ++i)
                    for (Letter l : {static_cast<Letter>(i), static_cast<Letter>(-i)}) {
                        if (!w.empty() && w.back() == -l) continue;
                        Word c = w;
                        c.push_back(l);
                        next.push_back(std::move(c));
                    }
            frontier = std::move(next);
        }
        for (auto& w : frontier) all.push_back(TreeEnd{std::move(w)});
        for (int T = 1; T <= 8; ++T) {
            double t = T * a.space.edge();
            auto wide = tree_cylinder_pack_cov(a.space, all, std::exp(-t + delta));
            auto tight = tree_cylinder_pack_cov(a.space, all, std::exp(-t));
            cyl.record(std::max(static_cast<double>(wide.pack_star) - static_cast<double>(tight.cov),
                                static_cast<double>(wide.cov) - static_cast<double>(tight.pack_star)),
                       "T=" + std::to_string(T));
        }
        rep.checks.push_back(cyl);
    }
    return rep;
}

} // namespace hypcrit
