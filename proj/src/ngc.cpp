#include "nestcut/ngc.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "nestcut/energy.hpp"
#include "nestcut/maxflow.hpp"

namespace nestcut {

NgcDataCost ngc_data_costs(double intensity, double threshold, double slope) {
    if (!(slope > 0.0)) throw std::invalid_argument("ngc_data_costs: slope must be positive");
    const double z = (intensity - threshold) / slope;
    NgcDataCost c;
    c.pbs = logistic(z);
    c.fat = logistic(-z);
    c.lnp = std::min(c.pbs, c.fat);
    return c;
}

double vote_transition_cost(int votes_core_side, int votes_shell_side) {
    if (votes_shell_side > votes_core_side) return 1.0;
    if (votes_shell_side == votes_core_side) return 4.0;
    return FlowGraph::kInf;
}

namespace {

// Forbidden vote transitions enter the graph with this finite cost instead of
// kInf. It dwarfs every data and smoothness aggregate, so against those it
// acts as a prohibition, but a chain of such edges can never outweigh an
// explicit seed or containment pin: those stay at kInf and must hold even
// where the vote field disagrees.
constexpr double kVoteHard = 1e6;

void validate(const NgcProblem& prob) {
    if (!prob.vol || prob.vol->size() == 0)
        throw std::invalid_argument("ngc: missing or empty volume");
    const Dims3 d = prob.vol->dims;
    const std::size_t extent = static_cast<std::size_t>(d[prob.vol->depth_axis]);
    if (prob.threshold.size() != extent || prob.slope.size() != extent)
        throw std::invalid_argument("ngc: threshold/slope must cover every depth slice");
    for (double s : prob.slope)
        if (!(s > 0.0)) throw std::invalid_argument("ngc: slopes must be positive");
    if (!(prob.alpha_mask >= 0.0) || !(prob.alpha_lnp >= 0.0))
        throw std::invalid_argument("ngc: smoothness weights must be >= 0");
    if (prob.hull_mask && prob.hull_mask->dims != d)
        throw std::invalid_argument("ngc: hull mask dims differ");
    if (prob.seeds) {
        if (prob.seeds->fat.dims != d || prob.seeds->lnp.dims != d)
            throw std::invalid_argument("ngc: seed dims differ");
        for (std::size_t i = 0; i < prob.seeds->fat.data.size(); ++i)
            if (prob.seeds->fat.data[i] && prob.seeds->lnp.data[i])
                throw std::invalid_argument("ngc: contradictory seeds");
    }
    if (prob.votes || prob.vote_domain) {
        if (!prob.votes || !prob.vote_domain)
            throw std::invalid_argument("ngc: votes and vote_domain must come together");
        if (prob.vote_domain->dims != d ||
            prob.votes->size() != static_cast<std::size_t>(voxel_count(d)))
            throw std::invalid_argument("ngc: vote dims differ");
        for (std::size_t i = 0; i < prob.votes->size(); ++i)
            if (prob.vote_domain->data[i] && (*prob.votes)[i] > 3)
                throw std::invalid_argument("ngc: votes must be 0..3");
    }
}

LabelVolume solve_once(const NgcProblem& prob, const BinaryMask* hull) {
    const IntensityVolume& vol = *prob.vol;
    const Dims3 d = vol.dims;
    const std::int64_t n = vol.size();
    const int axis = vol.depth_axis;

    const std::vector<Offset3> half = half_connectivity_offsets(18);
    FlowGraph g(static_cast<int>(2 * n),
                static_cast<std::int64_t>(n) * (2 * static_cast<std::int64_t>(half.size()) + 1));
    const auto u_of = [](std::int64_t p) { return static_cast<int>(p); };
    const auto v_of = [n](std::int64_t p) { return static_cast<int>(n + p); };

    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                const int dep = axis == 0 ? x : axis == 1 ? y : z;
                const NgcDataCost c =
                    ngc_data_costs(vol.data[static_cast<std::size_t>(p)],
                                   prob.threshold[static_cast<std::size_t>(dep)],
                                   prob.slope[static_cast<std::size_t>(dep)]);
                g.add_terminal(u_of(p), c.pbs, c.fat);
                g.add_terminal(v_of(p), 0.0, c.lnp - c.fat);
                g.add_edge(v_of(p), u_of(p), FlowGraph::kInf, 0.0);  // core implies foreground
                if (hull && !hull->data[static_cast<std::size_t>(p)])
                    g.add_terminal(v_of(p), 0.0, FlowGraph::kInf);
                if (prob.seeds) {
                    if (prob.seeds->fat.data[static_cast<std::size_t>(p)]) {
                        g.add_terminal(u_of(p), FlowGraph::kInf, 0.0);
                        g.add_terminal(v_of(p), 0.0, FlowGraph::kInf);
                    } else if (prob.seeds->lnp.data[static_cast<std::size_t>(p)]) {
                        g.add_terminal(u_of(p), FlowGraph::kInf, 0.0);
                        g.add_terminal(v_of(p), FlowGraph::kInf, 0.0);
                    }
                }
            }

    // boundary edges carry 1/length so the layer Potts terms approximate
    // boundary area instead of over-counting diagonals
    std::vector<double> wlen(half.size());
    for (std::size_t i = 0; i < half.size(); ++i) {
        const Offset3& o = half[i];
        wlen[i] = 1.0 / std::sqrt(static_cast<double>(o.dx * o.dx + o.dy * o.dy + o.dz * o.dz));
    }
    const bool voting = prob.votes != nullptr;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                for (std::size_t oi = 0; oi < half.size(); ++oi) {
                    const Offset3& o = half[oi];
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (!in_bounds(d, xx, yy, zz)) continue;
                    const std::int64_t q = linear_index(d, xx, yy, zz);
                    const double wm = prob.alpha_mask * wlen[oi];
                    g.add_edge(u_of(p), u_of(q), wm, wm);
                    if (!voting) {
                        const double wl = prob.alpha_lnp * wlen[oi];
                        g.add_edge(v_of(p), v_of(q), wl, wl);
                        continue;
                    }
                    const bool pin = prob.vote_domain->data[static_cast<std::size_t>(p)] != 0;
                    const bool qin = prob.vote_domain->data[static_cast<std::size_t>(q)] != 0;
                    int tp = pin ? (*prob.votes)[static_cast<std::size_t>(p)] : 0;
                    int tq = qin ? (*prob.votes)[static_cast<std::size_t>(q)] : 0;
                    if (pin && !qin) tq = tp + 1;   // outside counts as more shell-like
                    else if (!pin && qin) tp = tq + 1;
                    const double cpq = vote_transition_cost(tp, tq);
                    const double cqp = vote_transition_cost(tq, tp);
                    g.add_edge(v_of(p), v_of(q), cpq == FlowGraph::kInf ? kVoteHard : cpq,
                               cqp == FlowGraph::kInf ? kVoteHard : cqp);
                }
            }

    const CutResult cut = g.solve_min_cut();
    LabelVolume out;
    out.dims = d;
    out.spacing = vol.spacing;
    out.depth_axis = vol.depth_axis;
    out.data.resize(static_cast<std::size_t>(n));
    for (std::int64_t p = 0; p < n; ++p) {
        const bool fg = cut.side[static_cast<std::size_t>(u_of(p))] == CutSide::Source;
        const bool core = cut.side[static_cast<std::size_t>(v_of(p))] == CutSide::Source;
        assert(fg || !core);  // the infinite containment arc forbids core-only
        out.data[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(
            core ? Label::Lnp : fg ? Label::Fat : Label::Pbs);
    }
    return out;
}

}  // namespace

namespace {

BinaryMask hull_or_empty(const BinaryMask& region, bool any) {
    return any ? convex_hull_mask(region) : BinaryMask(region.dims);
}

}  // namespace

LabelVolume ngc_segment(const NgcProblem& prob) {
    validate(prob);
    if (prob.hull_mask) return solve_once(prob, prob.hull_mask);

    // The core's data cost never exceeds the other two, so an unconstrained
    // solve collapses into all-core; the core only ever runs inside a
    // containment support. Forbidding it outright is no better: a dim,
    // attenuated interior then pays the full shell data cost and the whole
    // object can lose to the bath. Start instead from the support the data
    // itself suggests -- the convex hull of the largest above-threshold
    // component -- and then re-derive the hull from the shell region each
    // solve produces, to a fixpoint. Isolated bright speckle stays out of the
    // initial support because it never forms the largest component.
    const IntensityVolume& vol = *prob.vol;
    const Dims3 d = vol.dims;
    const int axis = vol.depth_axis;
    BinaryMask bright(d);
    bool any_bright = false;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const int dep = axis == 0 ? x : axis == 1 ? y : z;
                const std::int64_t p = linear_index(d, x, y, z);
                if (vol.data[static_cast<std::size_t>(p)] >
                    prob.threshold[static_cast<std::size_t>(dep)]) {
                    bright.data[static_cast<std::size_t>(p)] = 1;
                    any_bright = true;
                }
            }
    if (any_bright) {
        const ComponentLabels cc = connected_components(bright, 26);
        int best = 0;
        for (int c = 1; c < cc.count(); ++c)
            if (cc.sizes[static_cast<std::size_t>(c)] > cc.sizes[static_cast<std::size_t>(best)])
                best = c;
        for (std::size_t i = 0; i < bright.data.size(); ++i)
            bright.data[i] = cc.label[i] == best ? 1 : 0;
    }
    // A core seed outside the support would be pinned to core and forbidden
    // from it at once, so seeded voxels always join the hulled region.
    if (prob.seeds)
        for (std::size_t i = 0; i < bright.data.size(); ++i)
            if (prob.seeds->lnp.data[i]) {
                bright.data[i] = 1;
                any_bright = true;
            }
    const BinaryMask support = hull_or_empty(bright, any_bright);

    LabelVolume cur = solve_once(prob, &support);
    const int max_hull_iters = 4;
    for (int iter = 0; iter < max_hull_iters; ++iter) {
        BinaryMask fg(cur.dims);
        bool any = false;
        for (std::size_t i = 0; i < cur.data.size(); ++i)
            if (cur.data[i] != static_cast<std::uint8_t>(Label::Pbs)) {
                fg.data[i] = 1;
                any = true;
            }
        if (prob.seeds)
            for (std::size_t i = 0; i < fg.data.size(); ++i)
                if (prob.seeds->lnp.data[i]) {
                    fg.data[i] = 1;
                    any = true;
                }
        const BinaryMask hull = hull_or_empty(fg, any);
        LabelVolume next = solve_once(prob, &hull);
        const bool stable = next.data == cur.data;
        cur = std::move(next);
        if (stable) break;
    }
    return cur;
}

LabelVolume refine_with_votes(const NgcProblem& prob) {
    validate(prob);
    if (!prob.seeds || !prob.votes)
        throw std::invalid_argument("refine_with_votes: seeds and votes are required");
    return ngc_segment(prob);
}

BinaryMask extract_ln_mask(const LabelVolume& labels) {
    BinaryMask fg(labels.dims);
    std::int64_t any = 0;
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        if (labels.data[i] != static_cast<std::uint8_t>(Label::Pbs)) {
            fg.data[i] = 1;
            ++any;
        }
    if (any == 0) throw std::runtime_error("extract_ln_mask: no foreground voxels");

    const ComponentLabels cc = connected_components(fg, 26);
    int best = 0;
    for (int c = 1; c < cc.count(); ++c)
        if (cc.sizes[static_cast<std::size_t>(c)] > cc.sizes[static_cast<std::size_t>(best)])
            best = c;  // ties keep the raster-first component
    BinaryMask keep(labels.dims);
    for (std::size_t i = 0; i < keep.data.size(); ++i)
        keep.data[i] = cc.label[i] == best ? 1 : 0;
    return fill_holes(keep);
}

}  // namespace nestcut
