#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypcrit/errors.hpp"
#include "hypcrit/space.hpp"

namespace hypcrit {

/// Bucketed index answering "which inserted points may lie within `radius` of p".
/// Tree: buckets keyed by the vertex of a point; a query visits the vertices
/// within ⌈radius/ℓ⌉ + 1 edges. Plane: buckets on (log Im, Re) cells whose Re
/// width grows with Im, so that each query touches a 3×3 block.
class NeighborIndex {
public:
    NeighborIndex(const ModelSpace& space, Length radius) : space_(space), radius_(radius) {
        if (!(radius >= 0)) throw ArgumentError("neighbor radius must be nonnegative");
        if (space.kind == SpaceKind::tree) {
            hops_ = static_cast<int>(std::ceil(radius / space.edge())) + 1;
        } else {
            cell_ = std::max(radius, 1e-3);
        }
    }

    void insert(const ModelPoint& p, std::size_t id) {
        space_.require(p);
        if (const auto* t = std::get_if<TreePoint>(&p)) {
            tree_[t->vertex.key()].push_back(id);
        } else {
            auto [u, v] = cell_of(std::get<PlanePoint>(p));
            plane_[{u, v}].push_back(id);
        }
    }

    /// Ids of inserted points possibly within the radius of p (a superset of the true neighbours).
    template <class Fn>
    void for_each_candidate(const ModelPoint& p, Fn&& fn) const {
        if (const auto* t = std::get_if<TreePoint>(&p)) {
            visit_tree(t->vertex, 0, 0, fn);
            return;
        }
        const auto& q = std::get<PlanePoint>(p);
        auto u = static_cast<std::int64_t>(std::floor(std::log(q.im) / cell_));
        for (std::int64_t du = -1; du <= 1; ++du) {
            double w = width(u + du);
            auto v = static_cast<std::int64_t>(std::floor(q.re / w));
            for (std::int64_t dv = -1; dv <= 1; ++dv) {
                auto it = plane_.find({u + du, v + dv});
                if (it == plane_.end()) continue;
                for (std::size_t id : it->second) fn(id);
            }
        }
    }

private:
    std::pair<std::int64_t, std::int64_t> cell_of(const PlanePoint& q) const {
        auto u = static_cast<std::int64_t>(std::floor(std::log(q.im) / cell_));
        return {u, static_cast<std::int64_t>(std::floor(q.re / width(u)))};
    }

    // Re-width of row u: bounds |Re p − Re q| ≤ 2 sinh(r/2)·√(Im p·Im q) for p in rows u ± 1.
    double width(std::int64_t u) const {
        return 4.0 * std::sinh(cell_ / 2.0) * std::exp(cell_) * std::exp(static_cast<double>(u + 2) * cell_);
    }

    template <class Fn>
    void visit_tree(const Word& v, int depth, Letter came_from, Fn& fn) const {
        auto it = tree_.find(v.key());
        if (it != tree_.end())
            for (std::size_t id : it->second) fn(id);
        if (depth == hops_) return;
        int rank = space_.rank();
        for (int i = 1; i <= rank; ++i) {
            for (Letter l : {static_cast<Letter>(i), static_cast<Letter>(-i)}) {
                if (l == -came_from) continue;
                Word w = v;
                w.push_back(l);
                visit_tree(w, depth + 1, l, fn);
            }
        }
    }

    ModelSpace space_;
    Length radius_;
    int hops_ = 0;
    double cell_ = 1.0;
    std::unordered_map<std::string, std::vector<std::size_t>> tree_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> plane_;
};

enum class NetMode { exact, greedy };

/// A covering or packing count. Greedy results are bounds: a greedy cover is an
/// upper bound on Cov, a greedy maximal separated set a lower bound on Pack.
struct NetCount {
    std::size_t value = 0;
    NetMode mode = NetMode::exact;
    std::vector<std::size_t> chosen;
};

namespace detail {

constexpr std::size_t exact_net_limit = 24;

inline std::vector<std::uint32_t> close_masks(const ModelSpace& space, const std::vector<ModelPoint>& pts, Length r) {
    std::vector<std::uint32_t> m(pts.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            Length d = distance(space, pts[i], pts[j]);
            if (d <= r + space.tolerance) m[i] |= std::uint32_t{1} << j;
        }
    return m;
}

inline void min_cover(const std::vector<std::uint32_t>& masks, std::uint32_t all, std::uint32_t covered,
                      std::vector<std::size_t>& current, std::vector<std::size_t>& best) {
    if (covered == all) {
        if (best.empty() || current.size() < best.size()) best = current;
        return;
    }
    if (!best.empty() && current.size() + 1 >= best.size()) return;
    // branch on the centres covering the first uncovered point
    int first = __builtin_ctz(~covered & all);
    for (std::size_t c = 0; c < masks.size(); ++c) {
        if (!(masks[c] >> first & 1u)) continue;
        current.push_back(c);
        min_cover(masks, all, covered | masks[c], current, best);
        current.pop_back();
    }
}

inline void max_packing(const std::vector<std::uint32_t>& conflict, std::uint32_t candidates,
                        std::vector<std::size_t>& current, std::vector<std::size_t>& best) {
    if (current.size() + static_cast<std::size_t>(__builtin_popcount(candidates)) <= best.size()) return;
    if (candidates == 0) {
        best = current;
        return;
    }
    int v = __builtin_ctz(candidates);
    current.push_back(static_cast<std::size_t>(v));
    max_packing(conflict, candidates & ~conflict[static_cast<std::size_t>(v)] & ~(std::uint32_t{1} << v), current, best);
    current.pop_back();
    max_packing(conflict, candidates & ~(std::uint32_t{1} << v), current, best);
}

} // namespace detail

/// Cov(Y, r): minimal size of an r-dense subset (every point within r of a chosen one).
/// Greedy: scan in order, choosing each point not yet within r of a chosen one.
inline NetCount covering_number(const ModelSpace& space, const std::vector<ModelPoint>& pts, Length r, NetMode mode) {
    if (r < 0) throw ArgumentError("covering radius must be nonnegative");
    NetCount out;
    out.mode = mode;
    if (pts.empty()) return out;
    if (mode == NetMode::exact) {
        if (pts.size() > detail::exact_net_limit)
            throw ArgumentError("exact covering number is limited to 24 points");
        auto masks = detail::close_masks(space, pts, r);
        std::uint32_t all = (std::uint32_t{1} << pts.size()) - 1;
        std::vector<std::size_t> cur;
        detail::min_cover(masks, all, 0, cur, out.chosen);
        out.value = out.chosen.size();
        return out;
    }
    NeighborIndex index(space, r);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool covered = false;
        index.for_each_candidate(pts[i], [&](std::size_t c) {
            if (!covered && distance(space, pts[i], pts[c]) <= r + space.tolerance) covered = true;
        });
        if (!covered) {
            out.chosen.push_back(i);
            index.insert(pts[i], i);
        }
    }
    out.value = out.chosen.size();
    return out;
}

/// Pack(Y, r): maximal size of a 2r-separated subset (pairwise distances > 2r).
/// Greedy: the lexicographically first maximal separated subset in input order.
inline NetCount packing_number(const ModelSpace& space, const std::vector<ModelPoint>& pts, Length r, NetMode mode) {
    if (r < 0) throw ArgumentError("packing radius must be nonnegative");
    NetCount out;
    out.mode = mode;
    if (pts.empty()) return out;
    if (mode == NetMode::exact) {
        if (pts.size() > detail::exact_net_limit)
            throw ArgumentError("exact packing number is limited to 24 points");
        // conflict: distance ≤ 2r
        std::vector<std::uint32_t> conflict(pts.size(), 0);
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (i != j && distance(space, pts[i], pts[j]) <= 2.0 * r) conflict[i] |= std::uint32_t{1} << j;
        std::uint32_t all = (std::uint32_t{1} << pts.size()) - 1;
        std::vector<std::size_t> cur;
        detail::max_packing(conflict, all, cur, out.chosen);
        out.value = out.chosen.size();
        return out;
    }
    NeighborIndex index(space, 2.0 * r);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool blocked = false;
        index.for_each_candidate(pts[i], [&](std::size_t c) {
            if (!blocked && distance(space, pts[i], pts[c]) <= 2.0 * r) blocked = true;
        });
        if (!blocked) {
            out.chosen.push_back(i);
            index.insert(pts[i], i);
        }
    }
    out.value = out.chosen.size();
    return out;
}

} // namespace hypcrit
