#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include "hypcrit/space.hpp"

namespace hypcrit {

using Rng = std::mt19937_64;

namespace detail {

inline Letter random_letter(Rng& rng, int rank, Letter avoid_inverse_of) {
    std::uniform_int_distribution<int> pick(0, 2 * rank - 1);
    for (;;) {
        int v = pick(rng);
        auto l = static_cast<Letter>(v < rank ? v + 1 : -(v - rank + 1));
        if (avoid_inverse_of == 0 || l != -avoid_inverse_of) return l;
    }
}

} // namespace detail

/// Uniformly random reduced word of the given length.
inline Word random_word(Rng& rng, int rank, std::size_t length) {
    Word w;
    Letter last = 0;
    for (std::size_t i = 0; i < length; ++i) {
        last = detail::random_letter(rng, rank, last);
        w.push_back(last);
    }
    return w;
}

/// Random point of the closed ball of the given radius about the basepoint.
/// Tree offsets are multiples of 1/subdivision of an edge.
inline ModelPoint random_point(const ModelSpace& space, Length radius, Rng& rng, int subdivision = 16) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (space.kind == SpaceKind::tree) {
        Rational r_units = Rational::approximate(radius / space.edge());
        std::int64_t max_steps = (r_units * Rational(subdivision)).floor();
        std::uniform_int_distribution<std::int64_t> steps(0, std::max<std::int64_t>(max_steps, 0));
        Rational depth(steps(rng), subdivision);
        auto whole = static_cast<std::size_t>(depth.floor());
        Word w = random_word(rng, space.rank(), whole + 1);
        return tree_detail::point_at_depth(w.letters(), depth);
    }
    double theta = 2.0 * std::numbers::pi * unit(rng);
    double r = radius * unit(rng);
    return plane::from_disk(std::polar(std::tanh(r / 2.0), theta));
}

/// Random end: a random infinite reduced word truncated at `depth` (tree), or a
/// uniformly random boundary direction seen from i (plane).
inline BoundaryApprox random_end(const ModelSpace& space, Rng& rng, std::size_t depth, double proxy_depth = 24.0) {
    if (space.kind == SpaceKind::tree) return TreeEnd{random_word(rng, space.rank(), depth)};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double theta = 2.0 * std::numbers::pi * unit(rng) - std::numbers::pi;
    return PlaneEnd{plane::from_boundary_angle(theta), proxy_depth, {}};
}

} // namespace hypcrit
