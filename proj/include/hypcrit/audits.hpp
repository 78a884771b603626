#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hypcrit/actions.hpp"
#include "hypcrit/entropy.hpp"
#include "hypcrit/lemmas.hpp"
#include "hypcrit/packing.hpp"
#include "hypcrit/sampling.hpp"

namespace hypcrit {

struct BoundSuiteOptions {
    std::size_t configurations = 1000;
    std::uint64_t seed = 1;
    /// Packing scale; 0 selects the edge length (tree) or 1 (plane).
    Length packing_scale = 0.0;
    /// Word-metric radius; 0 selects 2D + 72δ + measured systole.
    Length word_metric_R = 0.0;
    /// Radius of the pool of points the Pack/Cov chain subsets are drawn from.
    Length chain_radius = 6.0;
    std::size_t chain_min_points = 4;
    std::size_t chain_max_points = 16;
    double estimator_tolerance = 0.01;
};

/// Measured P for the packing growth bound: greedy Pack of the orbit points in
/// B̄(x, 72δ + 3r), truncated at the ball radius. Both effects can only lower P.
inline std::size_t packing_growth_constant(const GroupAction& a, const OrbitBall& ball, Length r) {
    Length R = std::min(72.0 * a.declared_delta + 3.0 * r, ball.radius);
    std::vector<ModelPoint> pts;
    for (const auto& e : ball.entries)
        if (detail::within(e.displacement, R)) pts.push_back(e.point);
    return packing_number(a.space, pts, r, NetMode::greedy).value;
}

/// Pack(Y, 2r) ≤ Cov(Y, 2r) ≤ Pack(Y, r) with exact counts on random subsets
/// Y of the pool and random scales r.
inline InequalityCheck check_pack_cov_chain(const ModelSpace& space, const std::vector<ModelPoint>& pool,
                                            const BoundSuiteOptions& opt = {}) {
    if (pool.empty()) throw ArgumentError("Pack/Cov chain needs a nonempty pool");
    if (opt.chain_max_points > detail::exact_net_limit) throw ArgumentError("chain subsets are limited to 24 points");
    InequalityCheck chain{"pack_cov_chain", 0.0, 0.0};
    Rng rng(opt.seed + 1);
    std::uniform_int_distribution<std::size_t> size_dist(opt.chain_min_points, opt.chain_max_points);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_real_distribution<double> scale(0.05, opt.chain_radius / 2.0);
    for (std::size_t n = 0; n < opt.configurations; ++n) {
        std::size_t m = size_dist(rng);
        std::vector<ModelPoint> Y;
        for (std::size_t k = 0; k < m; ++k) Y.push_back(pool[pick(rng)]);
        double s = scale(rng);
        auto pack2 = packing_number(space, Y, 2.0 * s, NetMode::exact).value;
        auto cov2 = covering_number(space, Y, 2.0 * s, NetMode::exact).value;
        auto pack1 = packing_number(space, Y, s, NetMode::exact).value;
        double v = std::max(static_cast<double>(pack2) - static_cast<double>(cov2),
                            static_cast<double>(cov2) - static_cast<double>(pack1));
        chain.record(v, "m=" + std::to_string(m) + " r=" + std::to_string(s));
    }
    return chain;
}

/// The explicit-constant bounds on one action: the entropy lower bound, the
/// generating-set lemma, the word-metric comparison (per ball entry), the
/// packing growth bound (per grid radius) and the exact Pack/Cov chain
/// Pack(Y, 2r) ≤ Cov(Y, 2r) ≤ Pack(Y, r) on sampled finite sets.
inline InequalityReport check_bound_suite(const GroupAction& a, const OrbitBall& ball, Rate h,
                                          const BoundSuiteOptions& opt = {}) {
    InequalityCheck lower{"entropy_lower_bound", 0.0, opt.estimator_tolerance};
    InequalityCheck gen{"generating", 0.0, 0.0};
    InequalityCheck word{"word_metric", 0.0, 1e-9};
    InequalityCheck growth{"packing_growth", 0.0, 1e-12};

    const Length D = a.declared_codiameter, delta = a.declared_delta;
    auto lb = check_entropy_lower_bound(h, delta, D);
    lower.record(lb.bound - h, "h=" + std::to_string(h) + " bound=" + std::to_string(lb.bound));

    auto g = check_generating(a, ball);
    gen.record(g.pass ? 0.0 : 1.0, g.unreachable ? "unreachable " + g.unreachable->str() : std::string{});

    Length R = opt.word_metric_R > 0 ? opt.word_metric_R
                                     : 2.0 * D + 72.0 * delta + measure_systole(ball).min_displacement;
    Length lower_constant = R - 2.0 * D - 72.0 * delta;
    if (!(lower_constant > 0)) throw ArgumentError("word-metric radius must exceed 2D + 72δ");
    auto dist = detail::orbit_graph_distances(ball, R);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const auto& e = ball.entries[i];
        if (dist[i] == std::numeric_limits<std::size_t>::max())
            throw InsufficientData("entry " + e.word.str() + " unreachable in the orbit graph; enlarge the ball");
        auto ds = static_cast<double>(dist[i]);
        word.record(std::max(lower_constant * ds - e.displacement, e.displacement - R * ds),
                    e.word.str() + " d_sigma=" + std::to_string(dist[i]));
    }

    Length r = opt.packing_scale > 0 ? opt.packing_scale : (a.space.kind == SpaceKind::tree ? a.space.edge() : 1.0);
    std::size_t P = packing_growth_constant(a, ball, r);
    std::vector<std::pair<Length, std::size_t>> measured;
    {
        // entries sorted by displacement so each ball is a prefix
        std::vector<const OrbitEntry*> order;
        for (const auto& e : ball.entries) order.push_back(&e);
        std::stable_sort(order.begin(), order.end(),
                         [](const auto* x, const auto* y) { return x->displacement < y->displacement; });
        for (Length T = r; T <= ball.radius + 1e-9; T += r) {
            std::vector<ModelPoint> pts;
            for (const auto* e : order) {
                if (!detail::within(e->displacement, T)) break;
                pts.push_back(e->point);
            }
            measured.emplace_back(T, packing_number(a.space, pts, r, NetMode::greedy).value);
        }
    }
    auto pg = check_packing_growth(P, r, measured);
    for (const auto& row : pg.rows)
        growth.record(static_cast<double>(row.measured) - row.bound,
                      "T=" + std::to_string(row.T) + " P=" + std::to_string(P));

    std::vector<ModelPoint> pool;
    for (const auto& e : ball.entries)
        if (detail::within(e.displacement, opt.chain_radius)) pool.push_back(e.point);
    Rng rng(opt.seed);
    for (std::size_t i = 0; i < 256; ++i) pool.push_back(random_point(a.space, opt.chain_radius, rng));
    InequalityCheck chain = check_pack_cov_chain(a.space, pool, opt);
    return InequalityReport{{lower, gen, word, growth, chain}};
}

} // namespace hypcrit
