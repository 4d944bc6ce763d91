#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nestcut/maxflow.hpp"
#include "nestcut/reference.hpp"
#include "nestcut/rng.hpp"

using namespace nestcut;

TEST_CASE("a lone node keeps the cheaper terminal link") {
    FlowGraph g(1);
    g.add_terminal(0, 3.0, 1.0);
    const CutResult res = g.solve_min_cut();
    CHECK(res.cut_value == doctest::Approx(1.0));
    CHECK(res.side[0] == CutSide::Source);
}

TEST_CASE("two nodes cut through the middle when that is cheapest") {
    FlowGraph g(2);
    g.add_terminal(0, 5.0, 0.0);
    g.add_terminal(1, 0.0, 3.0);
    g.add_edge(0, 1, 2.0, 2.0);
    const CutResult res = g.solve_min_cut();
    CHECK(res.cut_value == doctest::Approx(2.0));
    CHECK(res.side[0] == CutSide::Source);
    CHECK(res.side[1] == CutSide::Sink);
    CHECK(g.assignment_cost(res.side) == doctest::Approx(2.0));
}

TEST_CASE("a chain bottleneck sets the cut value") {
    FlowGraph g(4);
    g.add_terminal(0, 10.0, 0.0);
    g.add_terminal(3, 0.0, 10.0);
    g.add_edge(0, 1, 7.0, 0.0);
    g.add_edge(1, 2, 4.0, 0.0);
    g.add_edge(2, 3, 6.0, 0.0);
    const CutResult res = g.solve_min_cut();
    CHECK(res.cut_value == doctest::Approx(4.0));
    CHECK(res.side[1] == CutSide::Source);
    CHECK(res.side[2] == CutSide::Sink);
}

TEST_CASE("pairwise energy reproduces its table up to one shared constant") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const double ss = rng.uniform(-5.0, 5.0);
        const double st = rng.uniform(-5.0, 5.0);
        const double ts = rng.uniform(-5.0, 5.0);
        const double tt = st + ts - ss - rng.uniform(0.0, 5.0);  // submodular
        FlowGraph g(2);
        g.add_pairwise_energy(0, 1, ss, st, ts, tt);

        const std::vector<CutSide> sides[4] = {{CutSide::Source, CutSide::Source},
                                               {CutSide::Source, CutSide::Sink},
                                               {CutSide::Sink, CutSide::Source},
                                               {CutSide::Sink, CutSide::Sink}};
        const double table[4] = {ss, st, ts, tt};
        const double base = g.assignment_cost(sides[0]);
        for (int i = 1; i < 4; ++i)
            CHECK(g.assignment_cost(sides[i]) - base == doctest::Approx(table[i] - ss));
    }
}

TEST_CASE("the reparameterized split itself evaluates back to the table") {
    const double ss = 1.5, st = 4.0, ts = 3.0, tt = 2.0;
    const PairwiseLinks l = reparameterize_pairwise(ss, st, ts, tt);
    const double a = 0.5 * (ss + tt + ts - st);
    CHECK(a + l.to_sink_p == doctest::Approx(ss));
    CHECK(a + l.from_source_q == doctest::Approx(tt));
    CHECK(a + l.to_sink_p + l.from_source_q + l.pq == doctest::Approx(st));
    CHECK(a + l.pq == doctest::Approx(ts));
}

TEST_CASE("non-submodular tables are rejected") {
    FlowGraph g(2);
    CHECK_THROWS_AS(g.add_pairwise_energy(0, 1, 5.0, 1.0, 1.0, 5.0), std::invalid_argument);
    // borderline rounding noise is tolerated
    g.add_pairwise_energy(0, 1, 1.0, 1.0, 1.0, 1.0 - 1e-12);
}

TEST_CASE("random graphs with mixed energies match enumeration") {
    Rng rng(17);
    for (int t = 0; t < 60; ++t) {
        const int n = 2 + static_cast<int>(rng.next_below(7));
        FlowGraph g(n);
        for (int v = 0; v < n; ++v)
            g.add_terminal(v, rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0));
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) {
                if (rng.next_double() < 0.4) continue;
                const double ss = rng.uniform(-4.0, 4.0);
                const double st = rng.uniform(-4.0, 4.0);
                const double ts = rng.uniform(-4.0, 4.0);
                const double tt = st + ts - ss - rng.uniform(0.0, 4.0);
                g.add_pairwise_energy(u, v, ss, st, ts, tt);
            }
        const CutResult res = g.solve_min_cut();
        std::vector<CutSide> best;
        const double oracle = reference::enumerate_min_cut(g, &best);
        CHECK(res.cut_value == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(g.assignment_cost(res.side) == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("infinite links drag nodes together instead of being cut") {
    FlowGraph g(2);
    g.add_terminal(0, FlowGraph::kInf, 0.0);
    g.add_terminal(1, 0.0, 5.0);
    g.add_edge(0, 1, FlowGraph::kInf, FlowGraph::kInf);
    const CutResult res = g.solve_min_cut();
    CHECK(res.side[0] == CutSide::Source);
    CHECK(res.side[1] == CutSide::Source);
    CHECK(res.cut_value == doctest::Approx(5.0));
}

TEST_CASE("a node pinned to both terminals is an error") {
    FlowGraph g(1);
    g.add_terminal(0, FlowGraph::kInf, FlowGraph::kInf);
    CHECK_THROWS_AS(g.solve_min_cut(), std::invalid_argument);
}

TEST_CASE("ties resolve to the smallest possible source side") {
    // three cuts of equal value: empty, {0}, {0,1}; the empty one must win
    FlowGraph g(2);
    g.add_terminal(0, 1.0, 0.0);
    g.add_edge(0, 1, 1.0, 1.0);
    g.add_terminal(1, 0.0, 1.0);
    const CutResult res = g.solve_min_cut();
    CHECK(res.cut_value == doctest::Approx(1.0));
    CHECK(res.side[0] == CutSide::Sink);
    CHECK(res.side[1] == CutSide::Sink);

    // a perfectly balanced lone node also stays on the sink side
    FlowGraph h(1);
    h.add_terminal(0, 1.0, 1.0);
    CHECK(h.solve_min_cut().side[0] == CutSide::Sink);
}

TEST_CASE("arc insertion order does not change the answer") {
    auto build = [](bool reversed) {
        FlowGraph g(3);
        g.add_terminal(0, 4.0, 0.0);
        g.add_terminal(2, 0.0, 4.0);
        g.add_terminal(1, 1.0, 1.0);
        const int e[3][2] = {{0, 1}, {1, 2}, {0, 2}};
        const double caps[3][2] = {{3.0, 1.0}, {2.0, 2.0}, {1.0, 1.0}};
        if (reversed)
            for (int i = 2; i >= 0; --i) g.add_edge(e[i][0], e[i][1], caps[i][0], caps[i][1]);
        else
            for (int i = 0; i < 3; ++i) g.add_edge(e[i][0], e[i][1], caps[i][0], caps[i][1]);
        return g.solve_min_cut();
    };
    const CutResult a = build(false);
    const CutResult b = build(true);
    CHECK(a.cut_value == b.cut_value);
    CHECK(a.side == b.side);
}

TEST_CASE("terminal capacities accumulate") {
    FlowGraph g(1);
    g.add_terminal(0, 1.0, 2.0);
    g.add_terminal(0, 3.0, 4.0);
    const auto [src, snk] = g.terminal_caps(0);
    CHECK(src == doctest::Approx(4.0));
    CHECK(snk == doctest::Approx(6.0));
}

TEST_CASE("the finite stand-in for infinity dwarfs every real capacity") {
    FlowGraph g(2);
    g.add_edge(0, 1, 3.0, 0.5);
    CHECK(g.inf_sentinel() == doctest::Approx(3e12));
    FlowGraph empty(1);
    CHECK(empty.inf_sentinel() == doctest::Approx(1e12));
}

TEST_CASE("malformed construction is rejected") {
    FlowGraph g(2);
    CHECK_THROWS_AS(g.add_terminal(2, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(g.add_terminal(0, std::nan(""), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(0, 0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(0, 2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(0, 1, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(g.add_nodes(-1), std::invalid_argument);
    CHECK_THROWS_AS(g.assignment_cost({CutSide::Source}), std::invalid_argument);
    CHECK(g.add_nodes(2) == 2);
    CHECK(g.node_count() == 4);
}

TEST_CASE("solving twice gives identical results") {
    Rng rng(23);
    FlowGraph g(6);
    for (int v = 0; v < 6; ++v) g.add_terminal(v, rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0));
    for (int u = 0; u < 6; ++u)
        for (int v = u + 1; v < 6; ++v)
            if (rng.next_double() < 0.5) g.add_edge(u, v, rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0));
    const CutResult a = g.solve_min_cut();
    const CutResult b = g.solve_min_cut();
    CHECK(a.cut_value == b.cut_value);
    CHECK(a.side == b.side);
}
