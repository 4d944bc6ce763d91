#include "nestcut/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace nestcut {

PairwiseLinks reparameterize_pairwise(double ss, double st, double ts, double tt) {
    // symmetric gauge: table = A + B.[p source] + C.[q sink] + D.[labels differ]
    const double a = 0.5 * (ss + tt + ts - st);
    PairwiseLinks out;
    out.to_sink_p = ss - a;
    out.from_source_q = tt - a;
    out.pq = 0.5 * (st + ts - ss - tt);
    return out;
}

FlowGraph::FlowGraph(int node_count, std::int64_t arc_pair_hint) {
    if (node_count > 0) add_nodes(node_count);
    if (arc_pair_hint > 0) {
        arc_head_.reserve(static_cast<std::size_t>(2 * arc_pair_hint));
        arc_next_.reserve(static_cast<std::size_t>(2 * arc_pair_hint));
        arc_cap_.reserve(static_cast<std::size_t>(2 * arc_pair_hint));
    }
}

int FlowGraph::add_nodes(int n) {
    if (n < 0) throw std::invalid_argument("add_nodes: negative count");
    const int base = node_count();
    cap_src_.resize(cap_src_.size() + static_cast<std::size_t>(n), 0.0);
    cap_snk_.resize(cap_snk_.size() + static_cast<std::size_t>(n), 0.0);
    first_.resize(first_.size() + static_cast<std::size_t>(n), -1);
    return base;
}

void FlowGraph::add_terminal(int v, double cap_from_source, double cap_to_sink) {
    if (v < 0 || v >= node_count()) throw std::invalid_argument("add_terminal: bad node");
    if (std::isnan(cap_from_source) || std::isnan(cap_to_sink))
        throw std::invalid_argument("add_terminal: NaN capacity");
    cap_src_[static_cast<std::size_t>(v)] += cap_from_source;
    cap_snk_[static_cast<std::size_t>(v)] += cap_to_sink;
}

void FlowGraph::add_edge(int u, int v, double cap_uv, double cap_vu) {
    if (u < 0 || u >= node_count() || v < 0 || v >= node_count() || u == v)
        throw std::invalid_argument("add_edge: bad endpoints");
    if (!(cap_uv >= 0.0) || !(cap_vu >= 0.0))
        throw std::invalid_argument("add_edge: capacities must be >= 0");
    const std::int32_t a = static_cast<std::int32_t>(arc_head_.size());
    arc_head_.push_back(static_cast<std::int32_t>(v));
    arc_next_.push_back(first_[static_cast<std::size_t>(u)]);
    arc_cap_.push_back(cap_uv);
    first_[static_cast<std::size_t>(u)] = a;
    arc_head_.push_back(static_cast<std::int32_t>(u));
    arc_next_.push_back(first_[static_cast<std::size_t>(v)]);
    arc_cap_.push_back(cap_vu);
    first_[static_cast<std::size_t>(v)] = a + 1;
}

void FlowGraph::add_pairwise_energy(int p, int q, double ss, double st, double ts, double tt) {
    if (!std::isfinite(ss) || !std::isfinite(st) || !std::isfinite(ts) || !std::isfinite(tt))
        throw std::invalid_argument("add_pairwise_energy: table entries must be finite");
    PairwiseLinks l = reparameterize_pairwise(ss, st, ts, tt);
    const double scale = std::max({std::abs(ss), std::abs(st), std::abs(ts), std::abs(tt), 1.0});
    if (l.pq < 0.0) {
        if (l.pq < -1e-9 * scale)
            throw std::invalid_argument("add_pairwise_energy: table is not submodular");
        l.pq = 0.0;  // rounding noise
    }
    add_terminal(p, 0.0, l.to_sink_p);
    add_terminal(q, l.from_source_q, 0.0);
    add_edge(p, q, l.pq, l.pq);
}

double FlowGraph::inf_sentinel() const {
    double m = 0.0;
    for (double c : arc_cap_)
        if (c != kInf) m = std::max(m, c);
    for (int v = 0; v < node_count(); ++v) {
        const double a = cap_src_[static_cast<std::size_t>(v)];
        const double b = cap_snk_[static_cast<std::size_t>(v)];
        const double shift = std::min({a, b, 0.0});
        if (a != kInf) m = std::max(m, a - shift);
        if (b != kInf) m = std::max(m, b - shift);
    }
    return 1e12 * std::max(m, 1.0);
}

std::pair<double, double> FlowGraph::terminal_caps(int v) const {
    if (v < 0 || v >= node_count()) throw std::invalid_argument("terminal_caps: bad node");
    return {cap_src_[static_cast<std::size_t>(v)], cap_snk_[static_cast<std::size_t>(v)]};
}

double FlowGraph::assignment_cost(const std::vector<CutSide>& side) const {
    if (static_cast<int>(side.size()) != node_count())
        throw std::invalid_argument("assignment_cost: size mismatch");
    const double sentinel = inf_sentinel();
    double cost = 0.0;
    for (int v = 0; v < node_count(); ++v) {
        double a = cap_src_[static_cast<std::size_t>(v)];
        double b = cap_snk_[static_cast<std::size_t>(v)];
        if (a == kInf) a = sentinel;
        if (b == kInf) b = sentinel;
        const double shift = std::min({a, b, 0.0});
        cost += (side[static_cast<std::size_t>(v)] == CutSide::Sink) ? a - shift : b - shift;
    }
    for (int u = 0; u < node_count(); ++u) {
        if (side[static_cast<std::size_t>(u)] != CutSide::Source) continue;
        for (std::int32_t a = first_[static_cast<std::size_t>(u)]; a >= 0;
             a = arc_next_[static_cast<std::size_t>(a)]) {
            const std::int32_t h = arc_head_[static_cast<std::size_t>(a)];
            if (side[static_cast<std::size_t>(h)] == CutSide::Sink) {
                const double c = arc_cap_[static_cast<std::size_t>(a)];
                cost += (c == kInf) ? sentinel : c;
            }
        }
    }
    return cost;
}

namespace {

constexpr std::int32_t kParentTerminal = -1;
constexpr std::int32_t kParentNone = -2;
constexpr std::int32_t kParentOrphan = -3;

enum : std::uint8_t { kFree = 0, kTreeS = 1, kTreeT = 2 };

}  // namespace

CutResult FlowGraph::solve_min_cut() const {
    const int n = node_count();
    const double sentinel = inf_sentinel();

    std::vector<double> rcap(arc_cap_);
    for (double& c : rcap)
        if (c == kInf) c = sentinel;

    std::vector<double> excess(static_cast<std::size_t>(n));
    double flow = 0.0;
    for (int v = 0; v < n; ++v) {
        double a = cap_src_[static_cast<std::size_t>(v)];
        double b = cap_snk_[static_cast<std::size_t>(v)];
        if (a == kInf && b == kInf)
            throw std::invalid_argument("solve_min_cut: node forced to both terminals");
        if (a == kInf) a = sentinel;
        if (b == kInf) b = sentinel;
        excess[static_cast<std::size_t>(v)] = a - b;
        const double locked = std::min(a, b);
        if (locked > 0.0) flow += locked;  // shift-normalized min(a,b)
    }

    std::vector<std::int32_t> parent(static_cast<std::size_t>(n), kParentNone);
    std::vector<std::uint8_t> tree(static_cast<std::size_t>(n), kFree);
    std::vector<std::uint64_t> stamp(static_cast<std::size_t>(n), 0);
    std::vector<std::int32_t> dist(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> queued(static_cast<std::size_t>(n), 0);
    std::deque<std::int32_t> active;
    std::deque<std::int32_t> orphans;
    std::uint64_t time = 0;

    auto activate = [&](std::int32_t v) {
        if (!queued[static_cast<std::size_t>(v)]) {
            queued[static_cast<std::size_t>(v)] = 1;
            active.push_back(v);
        }
    };

    for (int v = 0; v < n; ++v) {
        if (excess[static_cast<std::size_t>(v)] > 0.0) {
            tree[static_cast<std::size_t>(v)] = kTreeS;
            parent[static_cast<std::size_t>(v)] = kParentTerminal;
            dist[static_cast<std::size_t>(v)] = 1;
            activate(v);
        } else if (excess[static_cast<std::size_t>(v)] < 0.0) {
            tree[static_cast<std::size_t>(v)] = kTreeT;
            parent[static_cast<std::size_t>(v)] = kParentTerminal;
            dist[static_cast<std::size_t>(v)] = 1;
            activate(v);
        }
    }

    // valid parent chain up to a terminal? stamps the chain so repeated
    // checks within one adoption phase stay cheap
    std::vector<std::int32_t> chain;
    auto has_origin = [&](std::int32_t v) -> bool {
        std::int32_t cur = v;
        for (;;) {
            if (stamp[static_cast<std::size_t>(cur)] == time) break;  // already verified
            const std::int32_t pa = parent[static_cast<std::size_t>(cur)];
            if (pa == kParentTerminal) {
                stamp[static_cast<std::size_t>(cur)] = time;
                dist[static_cast<std::size_t>(cur)] = 1;
                break;
            }
            if (pa == kParentNone || pa == kParentOrphan) return false;
            cur = arc_head_[static_cast<std::size_t>(pa)];
        }
        chain.clear();
        for (std::int32_t x = v; x != cur; x = arc_head_[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])])
            chain.push_back(x);
        std::int32_t d = dist[static_cast<std::size_t>(cur)];
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            ++d;
            stamp[static_cast<std::size_t>(*it)] = time;
            dist[static_cast<std::size_t>(*it)] = d;
        }
        return true;
    };

    auto process_orphan = [&](std::int32_t x) {
        const std::uint8_t side = tree[static_cast<std::size_t>(x)];
        std::int32_t best_arc = -1;
        std::int32_t best_dist = 0;
        for (std::int32_t a = first_[static_cast<std::size_t>(x)]; a >= 0;
             a = arc_next_[static_cast<std::size_t>(a)]) {
            const std::int32_t q = arc_head_[static_cast<std::size_t>(a)];
            if (tree[static_cast<std::size_t>(q)] != side) continue;
            const double feed = (side == kTreeS) ? rcap[static_cast<std::size_t>(a ^ 1)]
                                                 : rcap[static_cast<std::size_t>(a)];
            if (!(feed > 0.0)) continue;
            if (!has_origin(q)) continue;
            const std::int32_t dq = dist[static_cast<std::size_t>(q)];
            if (best_arc < 0 || dq < best_dist) {
                best_arc = a;
                best_dist = dq;
            }
        }
        if (best_arc >= 0) {
            parent[static_cast<std::size_t>(x)] = best_arc;
            stamp[static_cast<std::size_t>(x)] = time;
            dist[static_cast<std::size_t>(x)] = best_dist + 1;
            return;
        }
        // no parent: drop from the tree, wake neighbors
        for (std::int32_t a = first_[static_cast<std::size_t>(x)]; a >= 0;
             a = arc_next_[static_cast<std::size_t>(a)]) {
            const std::int32_t q = arc_head_[static_cast<std::size_t>(a)];
            if (tree[static_cast<std::size_t>(q)] != side) continue;
            const std::int32_t pq = parent[static_cast<std::size_t>(q)];
            if (pq >= 0 && arc_head_[static_cast<std::size_t>(pq)] == x) {
                parent[static_cast<std::size_t>(q)] = kParentOrphan;
                orphans.push_back(q);
            }
            const double feed = (side == kTreeS) ? rcap[static_cast<std::size_t>(a ^ 1)]
                                                 : rcap[static_cast<std::size_t>(a)];
            if (feed > 0.0) activate(q);
        }
        tree[static_cast<std::size_t>(x)] = kFree;
        parent[static_cast<std::size_t>(x)] = kParentNone;
    };

    for (;;) {
        // ---- growth ----
        std::int32_t boundary = -1;  // arc from the S side into the T side
        while (!active.empty() && boundary < 0) {
            const std::int32_t p = active.front();
            active.pop_front();
            queued[static_cast<std::size_t>(p)] = 0;
            const std::uint8_t side = tree[static_cast<std::size_t>(p)];
            if (side == kFree) continue;
            for (std::int32_t a = first_[static_cast<std::size_t>(p)]; a >= 0;
                 a = arc_next_[static_cast<std::size_t>(a)]) {
                const double grow_cap = (side == kTreeS) ? rcap[static_cast<std::size_t>(a)]
                                                         : rcap[static_cast<std::size_t>(a ^ 1)];
                if (!(grow_cap > 0.0)) continue;
                const std::int32_t q = arc_head_[static_cast<std::size_t>(a)];
                const std::uint8_t tq = tree[static_cast<std::size_t>(q)];
                if (tq == kFree) {
                    tree[static_cast<std::size_t>(q)] = side;
                    parent[static_cast<std::size_t>(q)] = a ^ 1;
                    stamp[static_cast<std::size_t>(q)] = stamp[static_cast<std::size_t>(p)];
                    dist[static_cast<std::size_t>(q)] = dist[static_cast<std::size_t>(p)] + 1;
                    activate(q);
                } else if (tq == side) {
                    if (stamp[static_cast<std::size_t>(q)] <= stamp[static_cast<std::size_t>(p)] &&
                        dist[static_cast<std::size_t>(q)] > dist[static_cast<std::size_t>(p)] + 1) {
                        parent[static_cast<std::size_t>(q)] = a ^ 1;
                        stamp[static_cast<std::size_t>(q)] = stamp[static_cast<std::size_t>(p)];
                        dist[static_cast<std::size_t>(q)] = dist[static_cast<std::size_t>(p)] + 1;
                    }
                } else {
                    boundary = (side == kTreeS) ? a : (a ^ 1);
                    if (!queued[static_cast<std::size_t>(p)]) {  // revisit remaining arcs
                        queued[static_cast<std::size_t>(p)] = 1;
                        active.push_front(p);
                    }
                    break;
                }
            }
        }
        if (boundary < 0) break;  // trees can no longer meet: maximum flow
        ++time;

        // ---- augment along the found path ----
        const std::int32_t s_tail = arc_head_[static_cast<std::size_t>(boundary ^ 1)];
        const std::int32_t t_head = arc_head_[static_cast<std::size_t>(boundary)];
        double delta = rcap[static_cast<std::size_t>(boundary)];
        for (std::int32_t x = s_tail;;) {
            const std::int32_t pa = parent[static_cast<std::size_t>(x)];
            if (pa == kParentTerminal) {
                delta = std::min(delta, excess[static_cast<std::size_t>(x)]);
                break;
            }
            delta = std::min(delta, rcap[static_cast<std::size_t>(pa ^ 1)]);
            x = arc_head_[static_cast<std::size_t>(pa)];
        }
        for (std::int32_t x = t_head;;) {
            const std::int32_t pa = parent[static_cast<std::size_t>(x)];
            if (pa == kParentTerminal) {
                delta = std::min(delta, -excess[static_cast<std::size_t>(x)]);
                break;
            }
            delta = std::min(delta, rcap[static_cast<std::size_t>(pa)]);
            x = arc_head_[static_cast<std::size_t>(pa)];
        }

        rcap[static_cast<std::size_t>(boundary)] -= delta;
        rcap[static_cast<std::size_t>(boundary ^ 1)] += delta;
        for (std::int32_t x = s_tail;;) {
            const std::int32_t pa = parent[static_cast<std::size_t>(x)];
            if (pa == kParentTerminal) {
                excess[static_cast<std::size_t>(x)] -= delta;
                if (excess[static_cast<std::size_t>(x)] == 0.0) {
                    parent[static_cast<std::size_t>(x)] = kParentOrphan;
                    orphans.push_back(x);
                }
                break;
            }
            rcap[static_cast<std::size_t>(pa ^ 1)] -= delta;
            rcap[static_cast<std::size_t>(pa)] += delta;
            if (rcap[static_cast<std::size_t>(pa ^ 1)] == 0.0) {
                parent[static_cast<std::size_t>(x)] = kParentOrphan;
                orphans.push_back(x);
            }
            x = arc_head_[static_cast<std::size_t>(pa)];
        }
        for (std::int32_t x = t_head;;) {
            const std::int32_t pa = parent[static_cast<std::size_t>(x)];
            if (pa == kParentTerminal) {
                excess[static_cast<std::size_t>(x)] += delta;
                if (excess[static_cast<std::size_t>(x)] == 0.0) {
                    parent[static_cast<std::size_t>(x)] = kParentOrphan;
                    orphans.push_back(x);
                }
                break;
            }
            rcap[static_cast<std::size_t>(pa)] -= delta;
            rcap[static_cast<std::size_t>(pa ^ 1)] += delta;
            if (rcap[static_cast<std::size_t>(pa)] == 0.0) {
                parent[static_cast<std::size_t>(x)] = kParentOrphan;
                orphans.push_back(x);
            }
            x = arc_head_[static_cast<std::size_t>(pa)];
        }
        flow += delta;

        // ---- adoption ----
        while (!orphans.empty()) {
            const std::int32_t x = orphans.front();
            orphans.pop_front();
            if (tree[static_cast<std::size_t>(x)] != kFree) process_orphan(x);
        }
    }

    // minimal source side: residual reachability from nodes with remaining
    // source excess; unique for every maximum flow, hence deterministic
    CutResult res;
    res.side.assign(static_cast<std::size_t>(n), CutSide::Sink);
    std::deque<std::int32_t> bfs;
    for (int v = 0; v < n; ++v)
        if (excess[static_cast<std::size_t>(v)] > 0.0) {
            res.side[static_cast<std::size_t>(v)] = CutSide::Source;
            bfs.push_back(v);
        }
    while (!bfs.empty()) {
        const std::int32_t u = bfs.front();
        bfs.pop_front();
        for (std::int32_t a = first_[static_cast<std::size_t>(u)]; a >= 0;
             a = arc_next_[static_cast<std::size_t>(a)]) {
            if (!(rcap[static_cast<std::size_t>(a)] > 0.0)) continue;
            const std::int32_t q = arc_head_[static_cast<std::size_t>(a)];
            if (res.side[static_cast<std::size_t>(q)] == CutSide::Sink) {
                res.side[static_cast<std::size_t>(q)] = CutSide::Source;
                bfs.push_back(q);
            }
        }
    }
    res.cut_value = flow;
    return res;
}

}  // namespace nestcut
