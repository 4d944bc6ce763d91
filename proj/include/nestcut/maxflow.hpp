#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace nestcut {

enum class CutSide : std::uint8_t { Source, Sink };

struct CutResult {
    std::vector<CutSide> side;
    double cut_value = 0.0;
};

// The B/C/D split of a submodular 2x2 pair cost table (the additive constant
// A is dropped): to_sink_p charges p's source-side label, from_source_q
// charges q's sink-side label, pq is the symmetric link capacity.
struct PairwiseLinks {
    double to_sink_p = 0.0;
    double from_source_q = 0.0;
    double pq = 0.0;
};
PairwiseLinks reparameterize_pairwise(double ss, double st, double ts, double tt);

// s-t min-cut solver on a directed residual graph with merged terminal
// capacities. Arcs are stored as paired half-edges (index ^ 1 is the
// reverse), capacities are doubles, kInf marks uncuttable arcs and is
// replaced by a finite sentinel (1e12 times the largest finite capacity)
// before solving. Terminal capacities accumulate and may go negative
// through add_pairwise_energy; a per-node shift restores nonnegativity and
// only moves the cut value by a constant, which solve adds back.
//
// The graph is immutable once built: solve_min_cut copies the residual
// state, so concurrent solves of different graphs are safe. The returned
// assignment is the unique minimal source side over all minimum cuts, which
// makes segmentations reproducible across thread counts and arc orderings.
class FlowGraph {
  public:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    explicit FlowGraph(int node_count = 0, std::int64_t arc_pair_hint = 0);

    int add_nodes(int n);
    int node_count() const { return static_cast<int>(cap_src_.size()); }
    std::int64_t arc_count() const { return static_cast<std::int64_t>(arc_head_.size()); }

    void add_terminal(int v, double cap_from_source, double cap_to_sink);
    void add_edge(int u, int v, double cap_uv, double cap_vu);
    // Adds the B/C/D split of the table; errors if the table is not
    // submodular (the pair link would be negative).
    void add_pairwise_energy(int p, int q, double ss, double st, double ts, double tt);

    CutResult solve_min_cut() const;

    // Direct cost of an arbitrary side assignment under the same normalized
    // view solve_min_cut uses (shifted terminals, sentinel for kInf); equals
    // cut_value exactly when the assignment is a minimum cut.
    double assignment_cost(const std::vector<CutSide>& side) const;

    double inf_sentinel() const;
    std::pair<double, double> terminal_caps(int v) const;  // raw accumulated values

  private:
    std::vector<double> cap_src_, cap_snk_;
    std::vector<std::int32_t> first_;
    std::vector<std::int32_t> arc_head_, arc_next_;
    std::vector<double> arc_cap_;
};

}  // namespace nestcut
