#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hypcrit/actions.hpp"
#include "hypcrit/entropy.hpp"
#include "hypcrit/errors.hpp"
#include "hypcrit/packing.hpp"
#include "hypcrit/sampling.hpp"

namespace hypcrit {

struct SnapshotElement {
    Word word;
    Isometry element;
    Length displacement = 0.0;
};

constexpr std::int32_t exits_ball = -1;

/// A finite picture of (X, x, Γ) at scale ε: a net of B(x, 1/ε), the elements
/// of Σ_{1/ε + collar}, and the action of those elements on the net.
struct TripleSnapshot {
    ModelSpace space;
    double epsilon = 1.0;
    Length radius = 1.0;         ///< 1/ε
    Length element_radius = 1.0; ///< 1/ε + collar
    Length resolution = 0.25;
    Length covering_radius = 0.25;
    int subdivisions = 0; ///< tree: net points every ℓ/subdivisions along edges

    std::vector<ModelPoint> points; ///< points[0] is the basepoint
    std::vector<std::string> labels;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<SnapshotElement> elements; ///< elements[0] is the identity
    /// action_table[e][p]: net index of elements[e]·points[p], or exits_ball.
    std::vector<std::vector<std::int32_t>> action_table;

    std::size_t find_element(const Word& w) const {
        for (std::size_t i = 0; i < elements.size(); ++i)
            if (elements[i].word == w) return i;
        return elements.size();
    }
};

struct SnapshotOptions {
    /// Tree edge subdivisions; defaults to ⌈ℓ/resolution⌉. Families share one value
    /// so that point labels transport exactly.
    std::optional<int> subdivisions;
    /// Elements are taken from Σ_{1/ε + collar}. A positive collar keeps elements whose
    /// displacement sits on the sphere of radius 1/ε in one member of a family.
    Length element_collar = 0.0;
};

namespace convergence_detail {

inline std::vector<ModelPoint> tree_net(const ModelSpace& space, Length R, int M) {
    std::vector<ModelPoint> out;
    const double l = space.edge();
    auto fits = [&](std::int64_t steps) { return static_cast<double>(steps) * l / M <= R + 1e-12; };
    std::vector<Word> level{Word{}};
    for (std::int64_t k = 0; fits(k * M); ++k) {
        std::vector<Word> next;
        for (const auto& w : level) {
            out.emplace_back(TreePoint::at_vertex(w));
            for (int i = 1; i <= space.rank(); ++i)
                for (Letter c : {static_cast<Letter>(i), static_cast<Letter>(-i)}) {
                    if (!w.empty() && w.back() == -c) continue;
                    for (int j = 1; j < M && fits(k * M + j); ++j)
                        out.emplace_back(TreePoint{w, c, Rational(j, M)});
                    Word child = w;
                    child.push_back(c);
                    next.push_back(std::move(child));
                }
        }
        level = std::move(next);
    }
    return out;
}

/// Polar grid about the basepoint: rings every s (plus one at R), each ring
/// with arcs of length ≤ s, so every point of the ball is within s of the grid.
inline std::vector<ModelPoint> plane_net(const PlanePoint& base, Length R, Length s) {
    plane::Mat2 back = plane::center_at(base).inverse();
    std::vector<ModelPoint> out{base};
    std::vector<double> rings;
    for (int k = 1; k * s <= R + 1e-12; ++k) rings.push_back(k * s);
    if (rings.empty() || rings.back() < R - 1e-12) rings.push_back(R);
    for (double r : rings) {
        auto n = static_cast<int>(std::ceil(2.0 * std::numbers::pi * std::sinh(r) / s));
        for (int j = 0; j < n; ++j) {
            double th = 2.0 * std::numbers::pi * j / n;
            out.emplace_back(back.apply(plane::from_disk(std::polar(std::tanh(r / 2.0), th))));
        }
    }
    return out;
}

} // namespace convergence_detail

inline TripleSnapshot snapshot(const GroupAction& a, const OrbitBall& ball, double epsilon, Length resolution,
                               const SnapshotOptions& opt = {}) {
    using namespace convergence_detail;
    if (!(epsilon > 0)) throw ArgumentError("snapshot scale must be positive");
    if (!(resolution > 0) || resolution > epsilon / 4.0 + 1e-12)
        throw ArgumentError("snapshot resolution must lie in (0, ε/4]");
    TripleSnapshot s;
    s.space = a.space;
    s.epsilon = epsilon;
    s.radius = 1.0 / epsilon;
    s.element_radius = s.radius + opt.element_collar;
    s.resolution = resolution;
    if (ball.radius + 1e-12 < s.element_radius) throw InsufficientData("orbit ball too shallow for this snapshot scale");

    if (a.space.kind == SpaceKind::tree) {
        int M = opt.subdivisions ? *opt.subdivisions : static_cast<int>(std::ceil(a.space.edge() / resolution - 1e-12));
        if (M < 1 || a.space.edge() / M > resolution + 1e-12)
            throw ArgumentError("tree subdivisions too coarse for the snapshot resolution");
        s.subdivisions = M;
        s.covering_radius = a.space.edge() / M;
        s.points = tree_net(a.space, s.radius, M);
    } else {
        s.covering_radius = resolution;
        s.points = plane_net(std::get<PlanePoint>(a.basepoint), s.radius, resolution);
    }
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        s.labels.push_back(describe(s.points[i]));
        s.index.emplace(s.labels.back(), i);
    }

    for (const auto& e : ball.entries)
        if (detail::within(e.displacement, s.element_radius)) s.elements.push_back({e.word, e.element, e.displacement});
    std::stable_sort(s.elements.begin(), s.elements.end(),
                     [](const auto& x, const auto& y) { return x.word.size() < y.word.size(); });

    std::optional<NeighborIndex> near;
    if (a.space.kind == SpaceKind::plane) {
        near.emplace(a.space, s.covering_radius);
        for (std::size_t i = 0; i < s.points.size(); ++i) near->insert(s.points[i], i);
    }
    s.action_table.assign(s.elements.size(), std::vector<std::int32_t>(s.points.size(), exits_ball));
    for (std::size_t e = 0; e < s.elements.size(); ++e)
        for (std::size_t p = 0; p < s.points.size(); ++p) {
            ModelPoint q = hypcrit::apply(s.elements[e].element, s.points[p]);
            if (distance(a.space, a.basepoint, q) > s.radius + a.space.tolerance) continue;
            if (a.space.kind == SpaceKind::tree) {
                auto it = s.index.find(describe(q));
                if (it == s.index.end()) throw Error("tree net is not invariant: missing " + describe(q));
                s.action_table[e][p] = static_cast<std::int32_t>(it->second);
            } else {
                double best = std::numeric_limits<double>::infinity();
                std::int32_t arg = exits_ball;
                near->for_each_candidate(q, [&](std::size_t c) {
                    double d = distance(a.space, q, s.points[c]);
                    if (d < best) best = d, arg = static_cast<std::int32_t>(c);
                });
                s.action_table[e][p] = arg;
            }
        }
    return s;
}

/// The five maxima of the definition, in order: basepoint, distortion,
/// surjectivity, φ-equivariance, ψ-equivariance.
struct DefectVector {
    double basepoint = 0.0;
    double distortion = 0.0;
    double surjectivity = 0.0;
    double phi_equivariance = 0.0;
    double psi_equivariance = 0.0;

    double max() const { return std::max({basepoint, distortion, surjectivity, phi_equivariance, psi_equivariance}); }
};

struct WitnessVerdict {
    bool valid = false;
    DefectVector combinatorial; ///< measured on the nets
    double slack = 0.0;         ///< covering radius added to every condition except the basepoint
    DefectVector total;
    std::size_t phi_pairs = 0;
    std::size_t psi_pairs = 0;
};

struct ApproximationWitness {
    std::vector<std::size_t> f;   ///< A point index → B point index
    std::vector<std::size_t> phi; ///< A element index → B element index
    std::vector<std::size_t> psi; ///< B element index → A element index
    double epsilon = 1.0;
    std::optional<WitnessVerdict> defects;
};

namespace convergence_detail {

inline void check_tables(const TripleSnapshot& A, const TripleSnapshot& B, const ApproximationWitness& w) {
    auto check = [](const std::vector<std::size_t>& t, std::size_t domain, std::size_t range, const char* name,
                    const char* what) {
        if (t.size() < domain)
            throw MalformedWitness(std::string("witness table ") + name + " is missing an entry for " + what + " " +
                                   std::to_string(t.size()));
        if (t.size() > domain) throw MalformedWitness(std::string("witness table ") + name + " has extra entries");
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= range)
                throw MalformedWitness(std::string("witness table ") + name + " entry " + std::to_string(i) +
                                       " is out of range");
    };
    check(w.f, A.points.size(), B.points.size(), "f", "point");
    check(w.phi, A.elements.size(), B.elements.size(), "phi", "element");
    check(w.psi, B.elements.size(), A.elements.size(), "psi", "element");
}

inline double phi_defect(const TripleSnapshot& A, const TripleSnapshot& B, const std::vector<std::size_t>& f,
                         std::size_t e, std::size_t target, std::size_t* pairs = nullptr) {
    double worst = 0.0;
    for (std::size_t p = 0; p < A.points.size(); ++p) {
        std::int32_t j = A.action_table[e][p];
        if (j == exits_ball) continue;
        ModelPoint q = hypcrit::apply(B.elements[target].element, B.points[f[p]]);
        worst = std::max(worst, distance(B.space, B.points[f[static_cast<std::size_t>(j)]], q));
        if (pairs) ++*pairs;
    }
    return worst;
}

inline double psi_defect(const TripleSnapshot& A, const TripleSnapshot& B, const std::vector<std::size_t>& f,
                         std::size_t e, std::size_t target, std::size_t* pairs = nullptr) {
    double worst = 0.0;
    for (std::size_t p = 0; p < A.points.size(); ++p) {
        std::int32_t j = A.action_table[target][p];
        if (j == exits_ball) continue;
        ModelPoint q = hypcrit::apply(B.elements[e].element, B.points[f[p]]);
        worst = std::max(worst, distance(B.space, B.points[f[static_cast<std::size_t>(j)]], q));
        if (pairs) ++*pairs;
    }
    return worst;
}

} // namespace convergence_detail

/// Recomputes every defect from the tables; stored defects are ignored.
inline WitnessVerdict verify_witness(const TripleSnapshot& A, const TripleSnapshot& B, const ApproximationWitness& w) {
    using namespace convergence_detail;
    check_tables(A, B, w);
    WitnessVerdict v;
    DefectVector& c = v.combinatorial;
    c.basepoint = distance(B.space, B.points[w.f[0]], B.points[0]);
    for (std::size_t i = 0; i < A.points.size(); ++i)
        for (std::size_t j = i + 1; j < A.points.size(); ++j) {
            double dA = distance(A.space, A.points[i], A.points[j]);
            double dB = distance(B.space, B.points[w.f[i]], B.points[w.f[j]]);
            c.distortion = std::max(c.distortion, std::abs(dA - dB));
        }
    std::vector<std::size_t> image(w.f);
    std::sort(image.begin(), image.end());
    image.erase(std::unique(image.begin(), image.end()), image.end());
    for (std::size_t y = 0; y < B.points.size(); ++y) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : image) best = std::min(best, distance(B.space, B.points[i], B.points[y]));
        c.surjectivity = std::max(c.surjectivity, best);
    }
    for (std::size_t e = 0; e < A.elements.size(); ++e)
        c.phi_equivariance = std::max(c.phi_equivariance, phi_defect(A, B, w.f, e, w.phi[e], &v.phi_pairs));
    for (std::size_t e = 0; e < B.elements.size(); ++e)
        c.psi_equivariance = std::max(c.psi_equivariance, psi_defect(A, B, w.f, e, w.psi[e], &v.psi_pairs));
    v.slack = std::max(A.covering_radius, B.covering_radius);
    v.total = c;
    v.total.distortion += v.slack;
    v.total.surjectivity += v.slack;
    v.total.phi_equivariance += v.slack;
    v.total.psi_equivariance += v.slack;
    v.valid = v.total.max() < w.epsilon;
    return v;
}

/// The identity witness between a snapshot and itself.
inline ApproximationWitness identity_witness(const TripleSnapshot& A, double epsilon) {
    ApproximationWitness w;
    w.epsilon = epsilon;
    for (std::size_t i = 0; i < A.points.size(); ++i) w.f.push_back(i);
    for (std::size_t i = 0; i < A.elements.size(); ++i) w.phi.push_back(i), w.psi.push_back(i);
    return w;
}

struct WitnessHints {
    /// Points and elements correspond by label and word across the two snapshots.
    bool word_labels = true;
};

struct WitnessSearch {
    std::optional<ApproximationWitness> witness; ///< set only when verified
    WitnessVerdict best;
    ApproximationWitness candidate; ///< the tables that produced `best`
    std::string method;
};

namespace convergence_detail {

inline std::size_t nearest_point(const TripleSnapshot& B, const ModelPoint& q) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < B.points.size(); ++i) {
        double d = distance(B.space, B.points[i], q);
        if (d < best) best = d, arg = i;
    }
    return arg;
}

/// φ(e) minimizing the measured φ-defect, among all of B's elements.
inline std::size_t best_phi(const TripleSnapshot& A, const TripleSnapshot& B, const std::vector<std::size_t>& f,
                            std::size_t e) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < B.elements.size(); ++t) {
        double d = phi_defect(A, B, f, e, t);
        if (d < best) best = d, arg = t;
    }
    return arg;
}

inline std::size_t best_psi(const TripleSnapshot& A, const TripleSnapshot& B, const std::vector<std::size_t>& f,
                            std::size_t e) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < A.elements.size(); ++t) {
        double d = psi_defect(A, B, f, e, t);
        if (d < best) best = d, arg = t;
    }
    return arg;
}

inline std::size_t nearest_displacement(const std::vector<SnapshotElement>& pool, Length d) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double gap = std::abs(pool[i].displacement - d);
        if (gap < best) best = gap, arg = i;
    }
    return arg;
}

} // namespace convergence_detail

/// With label hints: f transports labels (snapping to the nearest net point when
/// a label is missing in B), φ and ψ match words, and elements without a
/// namesake take the target minimizing their equivariance defect. Without
/// hints: nearest-displacement matching of elements and a greedy
/// distortion-minimizing assignment of points against up to 16 anchors.
/// Returns a witness only after verify_witness accepts it.
inline WitnessSearch search_witness(const TripleSnapshot& A, const TripleSnapshot& B, double epsilon,
                                    const WitnessHints& hints = {}) {
    using namespace convergence_detail;
    WitnessSearch out;
    ApproximationWitness w;
    w.epsilon = epsilon;
    bool labelled = hints.word_labels && A.space.kind == B.space.kind;
    if (labelled) {
        out.method = "labels";
        for (std::size_t i = 0; i < A.points.size(); ++i) {
            auto it = B.index.find(A.labels[i]);
            w.f.push_back(it != B.index.end() ? it->second : nearest_point(B, A.points[i]));
        }
        for (std::size_t e = 0; e < A.elements.size(); ++e) {
            std::size_t t = B.find_element(A.elements[e].word);
            w.phi.push_back(t < B.elements.size() ? t : best_phi(A, B, w.f, e));
        }
        for (std::size_t e = 0; e < B.elements.size(); ++e) {
            std::size_t t = A.find_element(B.elements[e].word);
            w.psi.push_back(t < A.elements.size() ? t : best_psi(A, B, w.f, e));
        }
    } else {
        out.method = "greedy";
        std::vector<std::size_t> anchors;
        w.f.assign(A.points.size(), 0);
        std::size_t stride = std::max<std::size_t>(1, A.points.size() / 16);
        for (std::size_t p = 0; p < A.points.size(); ++p) {
            if (p == 0) {
                w.f[0] = 0;
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < B.points.size(); ++c) {
                    double worst = 0.0;
                    for (std::size_t a : anchors) {
                        worst = std::max(worst, std::abs(distance(B.space, B.points[c], B.points[w.f[a]]) -
                                                         distance(A.space, A.points[p], A.points[a])));
                        if (worst >= best) break;
                    }
                    if (worst < best) best = worst, w.f[p] = c;
                }
            }
            if (p % stride == 0 && anchors.size() < 16) anchors.push_back(p);
        }
        for (const auto& e : A.elements) w.phi.push_back(nearest_displacement(B.elements, e.displacement));
        for (const auto& e : B.elements) w.psi.push_back(nearest_displacement(A.elements, e.displacement));
    }
    out.best = verify_witness(A, B, w);
    out.candidate = w;
    if (out.best.valid) {
        w.defects = out.best;
        out.witness = w;
    }
    return out;
}

/// max over generator indices i and sampled y ∈ B̄(x, R) of d(g_n,i·y, g_∞,i·y).
inline Length algebraic_convergence_gap(const ModelSpace& space, const std::vector<Isometry>& gens_n,
                                        const std::vector<Isometry>& gens_limit, Length ball_radius,
                                        std::size_t samples = 4096, std::uint64_t seed = 1) {
    if (gens_n.size() != gens_limit.size())
        throw ArgumentError("generator lists differ in length (" + std::to_string(gens_n.size()) + " vs " +
                            std::to_string(gens_limit.size()) + ")");
    Rng rng(seed);
    std::vector<ModelPoint> ys{space.basepoint()};
    for (std::size_t i = 0; i < samples; ++i) ys.push_back(random_point(space, ball_radius, rng));
    Length gap = 0.0;
    for (std::size_t i = 0; i < gens_n.size(); ++i)
        for (const auto& y : ys) gap = std::max(gap, distance(space, hypcrit::apply(gens_n[i], y), hypcrit::apply(gens_limit[i], y)));
    return gap;
}

struct ContinuityFamily {
    std::string name;
    std::vector<double> params;
    double limit_param = 0.0;
    std::function<GroupAction(double)> make;
};

struct ContinuityConfig {
    Length T = 10.0;
    std::pair<Length, Length> window{4.0, 10.0};
    /// Multiply T and the window by the member's edge length (tree families).
    bool scale_by_edge = false;
    /// Use the continuum least-squares estimator on displacements instead of grid counts.
    bool continuous_estimator = false;
    EstimatorOptions estimator;
    double epsilon0 = 0.5;
    Length resolution = 0.0; ///< 0 selects ε0/4
    double estimator_tolerance = 0.01;
    double C_max = 1.0;
    double K_bound = 4.0;
    unsigned threads = 1;
    std::size_t algebraic_samples = 1024;
    int ladder_steps = 12; ///< coarser scales tried: ε0·2^{k/4}, k ≤ ladder_steps
    bool keep_witnesses = false;
};

struct ContinuityRow {
    double param = 0.0;
    /// Achieved ε: the total defect of the verified witness at ε0, or else the
    /// smallest ladder scale ε0·2^{k/4} admitting a verified witness (∞ if none).
    double eps = std::numeric_limits<double>::infinity();
    double scale = std::numeric_limits<double>::infinity();
    double eps_combinatorial = 0.0; ///< combinatorial defect of the ε0 candidate
    bool witness_valid = false;
    Rate h_hat = 0.0;
    double residual = 0.0;
    double K = 0.0;
    std::optional<Length> algebraic_gap;
    std::size_t orbit_points = 0;
    Counts counts;
};

struct ContinuityReport {
    std::string family;
    std::vector<ContinuityRow> rows;
    ContinuityRow limit;
    double epsilon0 = 0.0;
    double covering_radius = 0.0;
    double C = 0.0; ///< smallest C with |h_n − h_∞| ≤ tol + C·ε_n on every row
    bool h_agreement = false;
    double K_max = 0.0;
    bool K_uniform = false;
    bool pass = false;
    /// |h_n − h_{n−1}| / |h_{n+1} − h_n| for consecutive rows.
    std::vector<double> difference_ratios;
    std::vector<ApproximationWitness> witnesses;
};

namespace convergence_detail {

struct MemberResult {
    GroupAction action;
    OrbitBall ball;
    ContinuityRow row;
};

inline MemberResult run_member(const ContinuityFamily& fam, double param, std::size_t index, const ContinuityConfig& cfg,
                               bool is_limit) {
    MemberResult m;
    std::string who = is_limit ? "limit member" : "family member " + std::to_string(index);
    try {
        m.action = certify(fam.make(param));
    } catch (const Error& e) {
        throw CertificationError(who + " (parameter " + std::to_string(param) + "): " + e.what());
    }
    double scale = cfg.scale_by_edge ? m.action.space.edge() : 1.0;
    Length T = cfg.T * scale;
    std::pair<Length, Length> window{cfg.window.first * scale, cfg.window.second * scale};
    EnumerateOptions eo;
    eo.threads = 1;
    m.ball = enumerate_orbit_ball(m.action, std::max(T, 1.0 / cfg.epsilon0 + 1.0), eo);
    m.row.param = param;
    m.row.orbit_points = m.ball.entries.size();
    m.row.counts = m.ball.count_by_shell;
    if (cfg.continuous_estimator) {
        auto est = estimate_critical_exponent_continuous(m.ball, window);
        m.row.h_hat = est.h_hat;
        m.row.residual = est.residual;
    } else {
        auto est = estimate_critical_exponent(m.ball.count_by_shell, window, cfg.estimator);
        m.row.h_hat = est.h_hat;
        m.row.residual = est.residual;
    }
    Counts upto;
    for (const auto& c : m.ball.count_by_shell)
        if (c.first <= T + 1e-9) upto.push_back(c);
    m.row.K = equidistribution_constant(upto, m.row.h_hat).K_measured;
    return m;
}

} // namespace convergence_detail

/// Runs every member and the limit, estimates h and K per member, and measures
/// the ε achieved by witnesses searched between each member's snapshot and the
/// limit's. Members run in parallel; rows keep schedule order.
inline ContinuityReport run_continuity_experiment(const ContinuityFamily& fam, const ContinuityConfig& cfg) {
    using namespace convergence_detail;
    if (fam.params.empty()) throw ArgumentError("family schedule is empty");
    std::vector<std::optional<MemberResult>> res(fam.params.size());
    std::vector<std::exception_ptr> errs(fam.params.size());
    unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(fam.params.size())));
    auto work = [&](unsigned id) {
        for (std::size_t i = id; i < fam.params.size(); i += workers) {
            try {
                res[i] = run_member(fam, fam.params[i], i + 1, cfg, false);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    MemberResult lim = run_member(fam, fam.limit_param, 0, cfg, true);
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work, t);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    ContinuityReport rep;
    rep.family = fam.name;
    rep.epsilon0 = cfg.epsilon0;
    rep.limit = lim.row;
    Length res0 = cfg.resolution > 0 ? cfg.resolution : cfg.epsilon0 / 4.0;
    SnapshotOptions so;
    so.element_collar = res0;
    if (lim.action.space.kind == SpaceKind::tree) {
        double lmax = lim.action.space.edge();
        for (const auto& r : res) lmax = std::max(lmax, r->action.space.edge());
        so.subdivisions = static_cast<int>(std::ceil(lmax / res0 - 1e-12));
    }
    TripleSnapshot B = snapshot(lim.action, lim.ball, cfg.epsilon0, res0, so);
    rep.covering_radius = B.covering_radius;
    for (auto& r : res) {
        // finest scale first; coarser ladder scales only when ε0 admits no witness
        for (int k = 0; k <= cfg.ladder_steps; ++k) {
            double eps = cfg.epsilon0 * std::exp2(k / 4.0);
            TripleSnapshot Bk = k == 0 ? B : snapshot(lim.action, lim.ball, eps, res0, so);
            TripleSnapshot A = snapshot(r->action, r->ball, eps, res0, so);
            auto found = search_witness(A, Bk, eps);
            if (k == 0) {
                r->row.eps_combinatorial = found.best.combinatorial.max();
                if (cfg.keep_witnesses) rep.witnesses.push_back(found.candidate);
            }
            if (found.best.valid) {
                r->row.scale = eps;
                r->row.witness_valid = true;
                r->row.eps = k == 0 ? found.best.total.max() : eps;
                break;
            }
        }
        if (lim.action.space.kind == SpaceKind::plane)
            r->row.algebraic_gap = algebraic_convergence_gap(lim.action.space, r->action.generators,
                                                             lim.action.generators, 1.0 / cfg.epsilon0,
                                                             cfg.algebraic_samples);
        rep.rows.push_back(r->row);
    }
    rep.h_agreement = true;
    rep.K_max = lim.row.K;
    for (const auto& row : rep.rows) {
        double excess = std::abs(row.h_hat - lim.row.h_hat) - cfg.estimator_tolerance;
        if (excess > 0) rep.C = std::max(rep.C, excess / row.eps);
        rep.K_max = std::max(rep.K_max, row.K);
    }
    rep.h_agreement = rep.C <= cfg.C_max;
    rep.K_uniform = rep.K_max <= cfg.K_bound;
    rep.pass = rep.h_agreement && rep.K_uniform;
    for (std::size_t i = 1; i + 1 < rep.rows.size(); ++i) {
        double d0 = std::abs(rep.rows[i].h_hat - rep.rows[i - 1].h_hat);
        double d1 = std::abs(rep.rows[i + 1].h_hat - rep.rows[i].h_hat);
        rep.difference_ratios.push_back(d1 > 0 ? d0 / d1 : std::numeric_limits<double>::infinity());
    }
    return rep;
}

} // namespace hypcrit
