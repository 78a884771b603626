#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hypcrit/errors.hpp"
#include "hypcrit/models.hpp"
#include "hypcrit/space.hpp"

namespace hypcrit {

/// Linear displacement lower bound d(x, g x) ≥ c·|g| − c_prime in the word length |g|.
struct PruneParams {
    double c = 1.0;
    double c_prime = 0.0;
};

enum class Certification { none, free_tree, ping_pong, elementary };

inline const char* to_string(Certification c) {
    switch (c) {
    case Certification::none: return "none";
    case Certification::free_tree: return "free-tree";
    case Certification::ping_pong: return "ping-pong";
    case Certification::elementary: return "elementary";
    }
    return "?";
}

/// Generators (inverses implied by negative letters) acting on a model space,
/// with a basepoint and the declared constants (δ, D) of the class M(δ, D).
struct GroupAction {
    std::string name;
    ModelSpace space;
    std::vector<Isometry> generators;
    ModelPoint basepoint;
    Length declared_delta = 0.0;
    Length declared_codiameter = 0.0;
    PruneParams prune;
    /// Certified lower bound on the systole at the basepoint (0 when unknown).
    Length systole_bound = 0.0;
    Certification certification = Certification::none;
    std::optional<PingPongCertificate> ping_pong;
    /// Enumeration aborts beyond this many examined elements.
    std::size_t element_cap = 20'000'000;

    int rank() const { return static_cast<int>(generators.size()); }

    Isometry element(const Word& w) const { return evaluate(w, generators, space.kind); }

    ModelPoint orbit_point(const Isometry& g) const { return apply(g, basepoint); }

    Length displacement(const Isometry& g) const { return distance(space, basepoint, orbit_point(g)); }

    /// d(gx, hx) computed as the displacement of g⁻¹h. Coordinates of deep plane
    /// orbit points lose relative accuracy like e^{d}·ε, displacements do not.
    Length orbit_distance(const Word& g, const Word& h) const { return displacement(element(g.inverse() * h)); }
};

/// The free group of rank valence/2 acting on its Cayley tree; δ = 0, D = ℓ/2.
inline GroupAction free_group_action(int valence, Rational edge_length) {
    GroupAction a;
    a.space = ModelSpace::tree(valence, edge_length);
    a.name = "free group F" + std::to_string(a.space.rank()) + " on its Cayley tree";
    for (int i = 1; i <= a.space.rank(); ++i) a.generators.emplace_back(Word({static_cast<Letter>(i)}));
    a.basepoint = a.space.basepoint();
    a.declared_delta = 0.0;
    a.declared_codiameter = edge_length.to_double() / 2.0;
    a.prune = {edge_length.to_double(), 0.0};
    a.systole_bound = edge_length.to_double();
    a.certification = Certification::free_tree;
    return a;
}

/// Uncertified action of the given matrices on the plane with basepoint i.
inline GroupAction plane_action(std::vector<plane::Mat2> generators, Length delta, Length codiameter) {
    if (generators.empty()) throw ArgumentError("an action needs at least one generator");
    if (generators.size() > 26) throw ArgumentError("at most 26 generators are supported");
    GroupAction a;
    a.space = ModelSpace::hyperbolic_plane();
    a.name = "plane action";
    for (auto& g : generators) {
        if (std::abs(g.det() - 1.0) > 1e-9) throw ArgumentError("generator matrix must have determinant 1");
        a.generators.emplace_back(g.normalized());
    }
    a.basepoint = a.space.basepoint();
    a.declared_delta = delta;
    a.declared_codiameter = codiameter;
    return a;
}

struct CertifyOptions {
    /// Class threshold: certification refuses actions whose (probed) systole is smaller.
    Length systole_floor = 0.5;
    /// Word length up to which the systole is probed by brute force.
    std::size_t probe_length = 4;
    std::size_t boundary_samples = 10000;
};

namespace detail {

inline void for_each_reduced_word(int rank, std::size_t max_len, const std::function<void(const Word&)>& fn) {
    std::vector<Word> level{Word{}};
    for (std::size_t k = 0; k < max_len; ++k) {
        std::vector<Word> next;
        for (const auto& w : level) {
            for (int i = 1; i <= rank; ++i) {
                for (Letter l : {static_cast<Letter>(i), static_cast<Letter>(-i)}) {
                    if (!w.empty() && w.back() == -l) continue;
                    Word c = w;
                    c.push_back(l);
                    fn(c);
                    next.push_back(std::move(c));
                }
            }
        }
        level = std::move(next);
    }
}

} // namespace detail

/// Runs the certification pipeline and returns the certified action.
///   1. every generator displaces the basepoint by at least the systole floor;
///   2. every plane generator is hyperbolic (translation_length classifies it);
///   3. two or more plane generators: ping-pong on bisector disks;
///      one plane generator: elementary action along its axis through the basepoint;
///   4. no nonempty reduced word up to probe_length displaces by less than the floor.
/// Failures throw CertificationError ("systole below class threshold") or ClassificationError.
inline GroupAction certify(GroupAction a, const CertifyOptions& opt = {}) {
    char buf[160];
    for (std::size_t i = 0; i < a.generators.size(); ++i) {
        Length d = a.displacement(a.generators[i]);
        if (d < opt.systole_floor) {
            std::snprintf(buf, sizeof buf, "systole below class threshold: generator %c displaces the basepoint by %.6g < %.6g",
                          letter_char(static_cast<Letter>(i + 1)), d, opt.systole_floor);
            throw CertificationError(buf);
        }
    }
    if (a.space.kind == SpaceKind::tree) {
        a.certification = Certification::free_tree;
        a.systole_bound = a.space.edge();
        a.prune = {a.space.edge(), 0.0};
    } else {
        for (const auto& g : a.generators) translation_length(a.space, g);
        std::vector<plane::Mat2> mats;
        for (const auto& g : a.generators) mats.push_back(std::get<plane::Mat2>(g));
        if (mats.size() == 1) {
            Length moved = a.displacement(a.generators[0]);
            Length tl = translation_length(a.space, a.generators[0]);
            if (std::abs(moved - tl) > 1e-9)
                throw CertificationError("single generator whose axis misses the basepoint is not supported");
            a.certification = Certification::elementary;
            a.systole_bound = tl;
            a.prune = {tl, 0.0};
        } else {
            auto res = certify_ping_pong(SchottkyDescription::from_bisectors(mats), opt.boundary_samples);
            if (const auto* f = std::get_if<PingPongFailure>(&res))
                throw CertificationError("ping-pong certification failed: " + f->reason);
            const auto& cert = std::get<PingPongCertificate>(res);
            a.certification = Certification::ping_pong;
            a.ping_pong = cert;
            a.systole_bound = cert.systole_lower_bound;
            a.prune = {cert.per_letter_gain, cert.per_letter_gain - cert.first_letter_bound};
        }
    }
    Length probe = std::numeric_limits<Length>::infinity();
    Word attaining;
    detail::for_each_reduced_word(a.rank(), opt.probe_length, [&](const Word& w) {
        Length d = a.displacement(a.element(w));
        if (d < probe) {
            probe = d;
            attaining = w;
        }
    });
    if (probe < opt.systole_floor) {
        std::snprintf(buf, sizeof buf, "systole below class threshold: word %s displaces the basepoint by %.6g < %.6g",
                      attaining.str().c_str(), probe, opt.systole_floor);
        throw CertificationError(buf);
    }
    return a;
}

struct OrbitEntry {
    Word word;
    Isometry element;
    ModelPoint point;
    Length displacement = 0.0;
};

/// Γx ∩ B̄(x, T) with one witness word per orbit point.
struct OrbitBall {
    Length radius = 0.0;
    Length merge_radius = 0.0;
    /// Sorted lexicographically by word key (identity first).
    std::vector<OrbitEntry> entries;
    /// (t, N(t)) on the shell grid t = 0, step, 2·step, … ≤ radius.
    std::vector<std::pair<Length, std::size_t>> count_by_shell;
    Length shell_step = 1.0;
    std::size_t elements_examined = 0;
    std::size_t merged = 0;
    std::size_t max_word_length = 0;
};

struct EnumerateOptions {
    /// Negative selects the default min(1e−6, systole/10).
    Length merge_radius = -1.0;
    unsigned threads = 1;
    /// Replaces the action's prune bound.
    std::optional<PruneParams> prune;
    /// When set, words are enumerated up to this length with no displacement-based cap.
    std::optional<std::size_t> max_word_length;
    /// Shell grid step; nonpositive selects the edge length (tree) or 0.5 (plane).
    Length shell_step = 0.0;
};

namespace detail {

/// Displacement comparison with slack for values computed as k·ℓ in floating point.
inline bool within(Length d, Length t) { return d <= t + 1e-12 * std::max(1.0, std::abs(t)); }

struct Node {
    Word word;
    Isometry element;
};

struct LevelOutput {
    std::vector<Node> children;
    std::vector<OrbitEntry> kept;
};

inline LevelOutput expand(const GroupAction& a, const std::vector<Node>& frontier, std::size_t begin, std::size_t end,
                          Length T) {
    LevelOutput out;
    int rank = a.rank();
    std::vector<Isometry> gens;
    for (int i = 1; i <= rank; ++i) {
        gens.push_back(a.generators[static_cast<std::size_t>(i - 1)]);
        gens.push_back(inverse(a.generators[static_cast<std::size_t>(i - 1)]));
    }
    for (std::size_t n = begin; n < end; ++n) {
        const Node& node = frontier[n];
        for (int i = 1; i <= rank; ++i) {
            for (int s = 0; s < 2; ++s) {
                auto l = static_cast<Letter>(s == 0 ? i : -i);
                if (!node.word.empty() && node.word.back() == -l) continue;
                Node child{node.word, compose(node.element, gens[static_cast<std::size_t>(2 * (i - 1) + s)])};
                child.word.push_back(l);
                ModelPoint p = a.orbit_point(child.element);
                Length d = distance(a.space, a.basepoint, p);
                if (within(d, T)) out.kept.push_back(OrbitEntry{child.word, child.element, p, d});
                out.children.push_back(std::move(child));
            }
        }
    }
    return out;
}

/// Merges plane entries closer than r, keeping the lexicographically smaller word.
/// Index: entries sorted by log Im, since d(p,q) < r forces |log Im p − log Im q| < r
/// and |Re p − Re q| < 2 sinh(r/2)·√(Im p · Im q); candidates are confirmed with
/// the displacement of g⁻¹h, which stays accurate where coordinates do not.
inline std::size_t merge_close(const GroupAction& a, std::vector<OrbitEntry>& entries, Length r) {
    if (entries.size() < 2 || r <= 0) return 0;
    std::vector<std::size_t> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> key(entries.size());
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = std::log(std::get<PlanePoint>(entries[i].point).im);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return key[x] != key[y] ? key[x] < key[y] : entries[x].word < entries[y].word;
    });
    std::vector<bool> dead(entries.size(), false);
    std::size_t merged = 0;
    double spread = 2.0 * std::sinh(r / 2.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::size_t p = order[i];
        if (dead[p]) continue;
        const auto& pp = std::get<PlanePoint>(entries[p].point);
        for (std::size_t j = i + 1; j < order.size() && key[order[j]] - key[p] < r; ++j) {
            std::size_t q = order[j];
            if (dead[q]) continue;
            const auto& pq = std::get<PlanePoint>(entries[q].point);
            double slack = 1e-14 * std::max({1.0, std::abs(pp.re), std::abs(pq.re)});
            if (std::abs(pp.re - pq.re) > spread * std::sqrt(pp.im * pq.im) + slack) continue;
            if (a.orbit_distance(entries[p].word, entries[q].word) < r) {
                std::size_t loser = entries[q].word < entries[p].word ? p : q;
                dead[loser] = true;
                ++merged;
                if (loser == p) break;
            }
        }
    }
    std::vector<OrbitEntry> kept;
    kept.reserve(entries.size() - merged);
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (!dead[i]) kept.push_back(std::move(entries[i]));
    entries = std::move(kept);
    return merged;
}

} // namespace detail

inline std::vector<std::pair<Length, std::size_t>> shell_counts(const OrbitBall& ball, const std::vector<Length>& grid) {
    std::vector<Length> d;
    d.reserve(ball.entries.size());
    for (const auto& e : ball.entries) d.push_back(e.displacement);
    std::sort(d.begin(), d.end());
    std::vector<std::pair<Length, std::size_t>> out;
    for (Length t : grid) {
        if (t > ball.radius + 1e-12 * std::max(1.0, ball.radius))
            throw InsufficientData("shell grid point beyond the ball radius");
        auto it = std::upper_bound(d.begin(), d.end(), t + 1e-12 * std::max(1.0, std::abs(t)));
        out.emplace_back(t, static_cast<std::size_t>(it - d.begin()));
    }
    return out;
}

/// Grid t_k = k·step (k = 0, 1, …) up to `radius`, each computed as k·step.
inline std::vector<Length> uniform_grid(Length step, Length radius) {
    if (!(step > 0)) throw ArgumentError("grid step must be positive");
    std::vector<Length> g;
    for (std::size_t k = 0;; ++k) {
        Length t = static_cast<double>(k) * step;
        if (t > radius + 1e-12 * std::max(1.0, radius)) break;
        g.push_back(t);
    }
    return g;
}

/// Breadth-first enumeration of reduced words with the linear length cap
/// floor((T + c′)/c), parallel over frontier batches, followed by
/// deduplication and a canonical lexicographic order.
inline OrbitBall enumerate_orbit_ball(const GroupAction& a, Length T, const EnumerateOptions& opt = {}) {
    if (T < 0) throw ArgumentError("orbit-ball radius must be nonnegative");
    PruneParams prune = opt.prune.value_or(a.prune);
    std::size_t cap;
    if (opt.max_word_length) {
        cap = *opt.max_word_length;
    } else {
        if (!(prune.c > 0)) throw ArgumentError("prune constant c must be positive (enumeration would not terminate)");
        double len = std::floor((T + prune.c_prime) / prune.c + 1e-12);
        cap = len < 0 ? 0 : static_cast<std::size_t>(len);
    }
    Length merge = opt.merge_radius;
    if (a.space.kind == SpaceKind::plane) {
        if (merge < 0) merge = a.systole_bound > 0 ? std::min(1e-6, a.systole_bound / 10.0) : 1e-6;
        if (a.systole_bound > 0 && merge >= a.systole_bound / 3.0)
            throw ArgumentError("merge radius must be below a third of the certified systole bound");
    } else {
        merge = 0.0;
    }

    OrbitBall ball;
    ball.radius = T;
    ball.merge_radius = merge;
    ball.max_word_length = cap;
    ball.entries.push_back(OrbitEntry{Word{}, identity_isometry(a.space.kind), a.basepoint, 0.0});
    std::vector<detail::Node> frontier{detail::Node{Word{}, identity_isometry(a.space.kind)}};
    ball.elements_examined = 1;
    unsigned threads = std::max(1u, opt.threads);
    for (std::size_t level = 0; level < cap && !frontier.empty(); ++level) {
        std::size_t n = frontier.size();
        std::size_t parts = std::min<std::size_t>(threads, std::max<std::size_t>(1, n / 256));
        std::vector<detail::LevelOutput> outs(parts);
        auto work = [&](std::size_t part) {
            std::size_t b = n * part / parts, e = n * (part + 1) / parts;
            outs[part] = detail::expand(a, frontier, b, e, T);
        };
        if (parts == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t p = 0; p < parts; ++p) pool.emplace_back(work, p);
            for (auto& t : pool) t.join();
        }
        std::vector<detail::Node> next;
        for (auto& o : outs) {
            ball.elements_examined += o.children.size();
            for (auto& e : o.kept) ball.entries.push_back(std::move(e));
            if (level + 1 < cap)
                for (auto& c : o.children) next.push_back(std::move(c));
        }
        frontier = std::move(next);
        if (ball.elements_examined > a.element_cap)
            throw CertificationError("element cap of " + std::to_string(a.element_cap) +
                                     " exceeded during enumeration; the action is likely not discrete");
    }
    if (a.space.kind == SpaceKind::plane) ball.merged = detail::merge_close(a, ball.entries, merge);
    std::sort(ball.entries.begin(), ball.entries.end(),
              [](const OrbitEntry& x, const OrbitEntry& y) { return x.word < y.word; });
    ball.shell_step = opt.shell_step > 0 ? opt.shell_step : (a.space.kind == SpaceKind::tree ? a.space.edge() : 0.5);
    ball.count_by_shell = shell_counts(ball, uniform_grid(ball.shell_step, T));
    return ball;
}

/// Σ_R(Γ, x): ball elements displacing the basepoint by at most R.
inline std::vector<OrbitEntry> sigma_R(const OrbitBall& ball, Length R) {
    if (R > ball.radius + 1e-12 * std::max(1.0, ball.radius))
        throw InsufficientData("Σ_R requested beyond the enumerated radius");
    std::vector<OrbitEntry> out;
    for (const auto& e : ball.entries)
        if (detail::within(e.displacement, R)) out.push_back(e);
    return out;
}

struct GeneratingReport {
    bool pass = true;
    Length threshold = 0.0;
    /// Paper threshold 2D + 72δ; `threshold` is smaller when the ball was too shallow for it.
    Length class_threshold = 0.0;
    std::size_t reachable = 0;
    std::optional<Word> unreachable;
};

namespace detail {

/// BFS distances (in steps ≤ R) from the identity entry in the orbit graph on
/// ball entries. Neighbours of g are the entries g·s with s ∈ Σ_R, since
/// d(gx, hx) = d(x, g⁻¹h x); when R covers the whole ball every entry is adjacent
/// to the identity.
inline std::vector<std::size_t> orbit_graph_distances(const OrbitBall& ball, Length R) {
    constexpr auto inf = std::numeric_limits<std::size_t>::max();
    std::size_t n = ball.entries.size();
    std::vector<std::size_t> dist(n, inf);
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(n);
    for (std::size_t i = 0; i < n; ++i) index.emplace(ball.entries[i].word.key(), i);
    auto root_it = index.find("");
    if (root_it == index.end()) throw InsufficientData("ball has no identity entry");
    std::size_t root = root_it->second;
    dist[root] = 0;
    if (R >= ball.radius) {
        for (std::size_t i = 0; i < n; ++i)
            if (i != root) dist[i] = 1;
        return dist;
    }
    std::vector<Word> steps;
    for (const auto& e : ball.entries)
        if (!e.word.empty() && within(e.displacement, R)) steps.push_back(e.word);
    std::deque<std::size_t> q{root};
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop_front();
        for (const auto& s : steps) {
            auto it = index.find((ball.entries[u].word * s).key());
            if (it == index.end() || dist[it->second] != inf) continue;
            dist[it->second] = dist[u] + 1;
            q.push_back(it->second);
        }
    }
    return dist;
}

} // namespace detail

/// Checks that every ball entry is reachable from the identity through orbit
/// points with steps ≤ 2D + 72δ. When the ball radius is below twice that
/// threshold and `allow_reduced` is set, the check runs at radius/2 instead:
/// generation by the smaller set Σ_{radius/2} implies generation by Σ_{2D+72δ}.
inline GeneratingReport check_generating(const GroupAction& a, const OrbitBall& ball,
                                         std::optional<Length> threshold_override = std::nullopt,
                                         bool allow_reduced = true) {
    GeneratingReport r;
    r.class_threshold = 2.0 * a.declared_codiameter + 72.0 * a.declared_delta;
    r.threshold = threshold_override.value_or(r.class_threshold);
    if (ball.radius < 2.0 * r.threshold) {
        if (threshold_override || !allow_reduced)
            throw InsufficientData("check_generating needs ball radius at least twice the step threshold");
        r.threshold = ball.radius / 2.0;
    }
    auto dist = detail::orbit_graph_distances(ball, r.threshold);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] == std::numeric_limits<std::size_t>::max()) {
            if (r.pass || ball.entries[i].word < *r.unreachable) r.unreachable = ball.entries[i].word;
            r.pass = false;
        } else {
            ++r.reachable;
        }
    }
    return r;
}

struct SystoleReport {
    Length min_displacement = std::numeric_limits<Length>::infinity();
    Word attaining_word;
    std::size_t elements_examined = 0;
    /// Only an upper bound on the true systole: deeper elements could be shorter.
    bool upper_bound_only = true;
};

inline SystoleReport measure_systole(const OrbitBall& ball) {
    SystoleReport r;
    for (const auto& e : ball.entries) {
        if (e.word.empty()) continue;
        ++r.elements_examined;
        if (e.displacement < r.min_displacement) {
            r.min_displacement = e.displacement;
            r.attaining_word = e.word;
        }
    }
    if (r.elements_examined == 0) throw InsufficientData("systole needs a ball containing a nonidentity element");
    return r;
}

struct CodiameterReport {
    Length value = 0.0;
    std::size_t sample_count = 0;
    ModelPoint worst_sample;
};

/// Max over samples of the distance to the nearest ball entry (an empirical lower estimate of D).
inline CodiameterReport measure_codiameter(const GroupAction& a, const OrbitBall& ball,
                                           const std::vector<ModelPoint>& hull_samples) {
    if (hull_samples.empty()) throw ArgumentError("measure_codiameter needs hull samples");
    CodiameterReport r;
    r.sample_count = hull_samples.size();
    r.worst_sample = hull_samples.front();
    for (const auto& p : hull_samples) {
        Length best = std::numeric_limits<Length>::infinity();
        for (const auto& e : ball.entries) best = std::min(best, distance(a.space, p, e.point));
        if (best > r.value) {
            r.value = best;
            r.worst_sample = p;
        }
    }
    return r;
}

struct WordMetricReport {
    bool pass = true;
    Length R = 0.0;
    Length lower_constant = 0.0; ///< R − 2D − 72δ
    /// min over g ≠ id of d(x,gx) / ((R − 2D − 72δ)·d_Σ(g)); ≥ 1 on pass.
    double worst_lower_ratio = std::numeric_limits<double>::infinity();
    /// max over g ≠ id of d(x,gx) / (R·d_Σ(g)); ≤ 1 on pass.
    double worst_upper_ratio = 0.0;
    std::optional<Word> violator;
    std::size_t checked = 0;
};

/// (R − 2D − 72δ)·d_Σ(g, id) ≤ d(x, gx) ≤ R·d_Σ(g, id) for every enumerated g,
/// with d_Σ the BFS distance in the orbit graph with step threshold R.
inline WordMetricReport check_word_metric_comparison(const GroupAction& a, const OrbitBall& ball, Length R) {
    WordMetricReport r;
    r.R = R;
    r.lower_constant = R - 2.0 * a.declared_codiameter - 72.0 * a.declared_delta;
    if (!(r.lower_constant > 0)) throw ArgumentError("word-metric comparison needs R > 2D + 72δ");
    auto dist = detail::orbit_graph_distances(ball, R);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const auto& e = ball.entries[i];
        if (dist[i] == std::numeric_limits<std::size_t>::max())
            throw InsufficientData("entry " + e.word.str() + " unreachable in the orbit graph; enlarge the ball");
        ++r.checked;
        if (dist[i] == 0) continue;
        double ds = static_cast<double>(dist[i]);
        double lo = e.displacement / (r.lower_constant * ds);
        double hi = e.displacement / (R * ds);
        r.worst_lower_ratio = std::min(r.worst_lower_ratio, lo);
        r.worst_upper_ratio = std::max(r.worst_upper_ratio, hi);
        bool ok = r.lower_constant * ds <= e.displacement + 1e-9 && e.displacement <= R * ds + 1e-9;
        if (!ok && r.pass) {
            r.pass = false;
            r.violator = e.word;
        }
    }
    return r;
}

} // namespace hypcrit
