#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "hypcrit/actions.hpp"
#include "hypcrit/errors.hpp"
#include "hypcrit/packing.hpp"

namespace hypcrit {

using Rate = double;
using Counts = std::vector<std::pair<Length, std::size_t>>;

enum class EstimatorMethod { regression_slope, last_ratio };

inline const char* to_string(EstimatorMethod m) {
    return m == EstimatorMethod::regression_slope ? "regression-slope" : "last-ratio";
}

struct EntropyEstimate {
    Rate h_hat = 0.0;
    std::pair<Length, Length> window{0.0, 0.0};
    EstimatorMethod method = EstimatorMethod::regression_slope;
    /// Regression: root-mean-square residual of log N about the fitted line.
    /// Last ratio: absolute disagreement with the regression slope.
    double residual = 0.0;
    /// Both estimators, whichever is selected.
    Rate h_regression = 0.0;
    Rate h_last_ratio = 0.0;
    Counts counts_used;
};

struct EstimatorOptions {
    EstimatorMethod method = EstimatorMethod::regression_slope;
    /// Fit only the grid points in the upper half of the window (at least four of them).
    bool top_half = false;
};

/// Growth rate of log N(T) over the grid points of the window.
inline EntropyEstimate estimate_critical_exponent(const Counts& counts, std::pair<Length, Length> window,
                                                  const EstimatorOptions& opt = {}) {
    auto [lo, hi] = window;
    if (!(lo <= hi)) throw ArgumentError("estimator window is empty");
    double eps = 1e-9 * std::max(1.0, std::abs(hi));
    Counts used;
    for (const auto& c : counts)
        if (c.first >= lo - eps && c.first <= hi + eps) used.push_back(c);
    std::sort(used.begin(), used.end());
    if (used.size() < 4) throw InsufficientData("estimator needs at least 4 grid points in the window");
    for (std::size_t i = 0; i < used.size(); ++i) {
        if (used[i].second == 0) throw ArgumentError("zero count in the estimator window");
        if (i > 0 && used[i].second < used[i - 1].second) throw ArgumentError("counts must be nondecreasing");
    }
    if (opt.top_half) {
        double mid = (lo + hi) / 2.0;
        Counts top;
        for (const auto& c : used)
            if (c.first >= mid - eps) top.push_back(c);
        if (top.size() < 4) top.assign(used.end() - 4, used.end());
        used = std::move(top);
    }

    EntropyEstimate est;
    est.window = window;
    est.method = opt.method;
    est.counts_used = used;
    std::size_t n = used.size();
    double mt = 0, my = 0;
    for (const auto& [t, c] : used) {
        mt += t;
        my += std::log(static_cast<double>(c));
    }
    mt /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (const auto& [t, c] : used) {
        sxy += (t - mt) * (std::log(static_cast<double>(c)) - my);
        sxx += (t - mt) * (t - mt);
    }
    double slope = sxx > 0 ? sxy / sxx : 0.0;
    double ss = 0;
    for (const auto& [t, c] : used) {
        double r = std::log(static_cast<double>(c)) - (my + slope * (t - mt));
        ss += r * r;
    }
    const auto& last = used[n - 1];
    const auto& prev = used[n - 2];
    double lr = (std::log(static_cast<double>(last.second)) - std::log(static_cast<double>(prev.second))) /
                (last.first - prev.first);
    est.h_regression = std::max(0.0, slope);
    est.h_last_ratio = std::max(0.0, lr);
    if (opt.method == EstimatorMethod::regression_slope) {
        est.h_hat = est.h_regression;
        est.residual = std::sqrt(ss / static_cast<double>(n));
    } else {
        est.h_hat = est.h_last_ratio;
        est.residual = std::abs(est.h_last_ratio - est.h_regression);
    }
    return est;
}

/// Least-squares slope of log N(t) over the continuum t ∈ [lo, hi]: the limit of
/// the regression estimator as the grid step goes to 0, computed exactly from the
/// sorted displacements. Unlike a fixed grid it moves continuously with the
/// displacements, so nearby actions get nearby estimates.
inline EntropyEstimate estimate_critical_exponent_continuous(const std::vector<Length>& displacements,
                                                             std::pair<Length, Length> window) {
    auto [lo, hi] = window;
    if (!(lo < hi)) throw ArgumentError("estimator window is empty");
    std::vector<Length> d = displacements;
    std::sort(d.begin(), d.end());
    auto first = std::upper_bound(d.begin(), d.end(), lo);
    auto count = static_cast<std::size_t>(first - d.begin());
    if (count == 0) throw ArgumentError("zero count in the estimator window");
    double mid = (lo + hi) / 2.0, W = hi - lo;
    double num = 0, sum_y = 0, sum_y2 = 0;
    double a = lo;
    auto piece = [&](double b, std::size_t c) {
        if (b <= a) return;
        double y = std::log(static_cast<double>(c));
        num += y * ((b - mid) * (b - mid) - (a - mid) * (a - mid)) / 2.0;
        sum_y += y * (b - a);
        sum_y2 += y * y * (b - a);
        a = b;
    };
    for (auto it = first; it != d.end() && *it <= hi; ++it) {
        piece(*it, count);
        ++count;
    }
    piece(hi, count);
    double slope = num / (W * W * W / 12.0);
    double ybar = sum_y / W;
    double var = sum_y2 / W - ybar * ybar - slope * slope * W * W / 12.0;
    EntropyEstimate est;
    est.window = window;
    est.method = EstimatorMethod::regression_slope;
    est.h_hat = est.h_regression = std::max(0.0, slope);
    est.residual = std::sqrt(std::max(0.0, var));
    std::size_t n_lo = static_cast<std::size_t>(std::upper_bound(d.begin(), d.end(), lo) - d.begin());
    std::size_t n_hi = static_cast<std::size_t>(std::upper_bound(d.begin(), d.end(), hi) - d.begin());
    est.counts_used = {{lo, n_lo}, {hi, n_hi}};
    est.h_last_ratio = std::log(static_cast<double>(n_hi) / static_cast<double>(n_lo)) / W;
    return est;
}

inline EntropyEstimate estimate_critical_exponent_continuous(const OrbitBall& ball, std::pair<Length, Length> window) {
    if (window.second > ball.radius + 1e-12 * std::max(1.0, ball.radius))
        throw InsufficientData("estimator window extends beyond the enumerated radius");
    std::vector<Length> d;
    d.reserve(ball.entries.size());
    for (const auto& e : ball.entries) d.push_back(e.displacement);
    return estimate_critical_exponent_continuous(d, window);
}

/// Σ_{g ∈ ball} e^{−s·d(x, gx)}.
inline double poincare_partial(const OrbitBall& ball, Rate s) {
    if (s < 0) throw ArgumentError("Poincaré exponent must be nonnegative");
    // summed smallest terms first
    std::vector<double> terms;
    terms.reserve(ball.entries.size());
    for (const auto& e : ball.entries) terms.push_back(std::exp(-s * e.displacement));
    std::sort(terms.begin(), terms.end());
    double sum = 0;
    for (double t : terms) sum += t;
    return sum;
}

struct EquidistributionReport {
    double K_measured = 1.0;
    Rate h_used = 0.0;
    Length worst_T = 0.0;
};

/// K = max over the grid of max(N(T)/e^{hT}, e^{hT}/N(T)).
inline EquidistributionReport equidistribution_constant(const Counts& counts, Rate h) {
    if (!(h > 0)) throw ArgumentError("equidistribution needs h > 0");
    if (counts.empty()) throw ArgumentError("no counts");
    EquidistributionReport r;
    r.h_used = h;
    for (const auto& [t, n] : counts) {
        if (n == 0) throw ArgumentError("counts must be positive");
        double ratio = std::log(static_cast<double>(n)) - h * t;
        double k = std::exp(std::abs(ratio));
        if (k > r.K_measured) {
            r.K_measured = k;
            r.worst_T = t;
        }
    }
    return r;
}

/// (1/K)·e^{hT} ≤ N(T) ≤ K·e^{hT} on every grid point.
inline bool check_equidistribution(const Counts& counts, Rate h, double K) {
    for (const auto& [t, n] : counts) {
        double e = std::exp(h * t), c = static_cast<double>(n);
        if (c > K * e || c < e / K) return false;
    }
    return true;
}

struct LowerBoundCheck {
    bool pass = false;
    double bound = 0.0;
    Rate h = 0.0;
};

/// h ≥ log 2/(99δ + 10D) − tolerance.
inline LowerBoundCheck check_entropy_lower_bound(Rate h, Length delta, Length D, double tolerance = 0.0) {
    double den = 99.0 * delta + 10.0 * D;
    if (!(den > 0)) throw ArgumentError("entropy lower bound needs 99δ + 10D > 0");
    LowerBoundCheck c;
    c.h = h;
    c.bound = std::numbers::ln2 / den;
    c.pass = h >= c.bound - tolerance;
    return c;
}

struct PackingGrowthRow {
    Length T = 0.0;
    std::size_t measured = 0;
    double bound = 0.0;
    bool ok = true;
};

struct PackingGrowthReport {
    bool pass = true;
    Length r = 0.0;
    std::size_t P = 0;
    std::vector<PackingGrowthRow> rows;
};

/// Pack_Y(T, r) ≤ P·(1 + P)^{T/r − 1} for each measured (T, Pack_Y(T, r)).
inline PackingGrowthReport check_packing_growth(std::size_t P, Length r,
                                                const std::vector<std::pair<Length, std::size_t>>& measurements) {
    if (!(r > 0)) throw ArgumentError("packing scale must be positive");
    PackingGrowthReport rep;
    rep.r = r;
    rep.P = P;
    double p = static_cast<double>(P);
    for (const auto& [T, m] : measurements) {
        PackingGrowthRow row{T, m, p * std::pow(1.0 + p, T / r - 1.0), true};
        row.ok = static_cast<double>(m) <= row.bound * (1.0 + 1e-12);
        rep.pass = rep.pass && row.ok;
        rep.rows.push_back(row);
    }
    return rep;
}

/// Points of Y within T of the center, in input order.
inline std::vector<ModelPoint> ball_slice(const ModelSpace& space, const std::vector<ModelPoint>& Y,
                                          const ModelPoint& center, Length T) {
    std::vector<ModelPoint> out;
    for (const auto& y : Y)
        if (distance(space, center, y) <= T + 1e-12 * std::max(1.0, T)) out.push_back(y);
    return out;
}

/// Slope of log Cov(B̄(x, T) ∩ Y, r) over the grid, greedy covering.
/// Greedy covers bound Cov from above, so the estimate is upper-bound flavoured.
inline EntropyEstimate covering_entropy_estimate(const GroupAction& a, const std::vector<ModelPoint>& Y, Length r,
                                                 const std::vector<Length>& grid, std::pair<Length, Length> window,
                                                 const EstimatorOptions& opt = {}) {
    std::size_t in_window = 0;
    for (Length t : grid)
        if (t >= window.first - 1e-9 && t <= window.second + 1e-9) ++in_window;
    if (in_window < 3) throw InsufficientData("covering entropy window needs at least 3 grid points");
    // sort Y by distance to the basepoint once; each slice is a prefix
    std::vector<std::pair<Length, std::size_t>> order;
    order.reserve(Y.size());
    for (std::size_t i = 0; i < Y.size(); ++i) order.emplace_back(distance(a.space, a.basepoint, Y[i]), i);
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    Counts counts;
    for (Length t : grid) {
        if (t < window.first - 1e-9 || t > window.second + 1e-9) continue;
        std::vector<ModelPoint> slice;
        for (const auto& [d, i] : order) {
            if (d > t + 1e-12 * std::max(1.0, t)) break;
            slice.push_back(Y[i]);
        }
        counts.emplace_back(t, std::max<std::size_t>(1, covering_number(a.space, slice, r, NetMode::greedy).value));
    }
    if (counts.size() < 4) {
        // three-point windows are allowed here: fit the line directly
        EntropyEstimate est;
        est.window = window;
        est.counts_used = counts;
        double t0 = counts.front().first, t1 = counts.back().first;
        est.h_regression = est.h_hat = std::max(
            0.0, (std::log(static_cast<double>(counts.back().second)) - std::log(static_cast<double>(counts.front().second))) /
                     (t1 - t0));
        est.h_last_ratio = est.h_hat;
        return est;
    }
    return estimate_critical_exponent(counts, window, opt);
}

} // namespace hypcrit
