#include "nestcut/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "nestcut/maxflow.hpp"

namespace nestcut {

int LocalStats::direction_index(const Offset3& d) const {
    for (std::size_t i = 0; i < directions.size(); ++i)
        if (directions[i] == d) return static_cast<int>(i);
    throw std::invalid_argument("direction not part of this neighborhood");
}

namespace {

void check_spec(const NeighborhoodSpec& spec) {
    if (spec.connectivity != 6 && spec.connectivity != 18 && spec.connectivity != 26)
        throw std::invalid_argument("connectivity must be 6, 18 or 26");
    if (spec.region_length < 1) throw std::invalid_argument("region_length must be >= 1");
    if (spec.region_width < 0) throw std::invalid_argument("region_width must be >= 0");
}

bool is_axis(const Offset3& o) {
    return std::abs(o.dx) + std::abs(o.dy) + std::abs(o.dz) == 1;
}

struct RegionVoxel {
    Offset3 off;
    double weight;
};

// all voxel offsets belonging to the stats region for one direction, with
// their weights (uniform, or j+1 for segment index j under distance weighting)
std::vector<RegionVoxel> region_offsets(const Offset3& dir, const NeighborhoodSpec& spec) {
    std::vector<RegionVoxel> out;
    const int w = (spec.region_width > 0 && is_axis(dir)) ? spec.region_width : 0;
    // two unit axes perpendicular to an axis direction
    Offset3 e1{0, 0, 0}, e2{0, 0, 0};
    if (w > 0) {
        if (dir.dx != 0) { e1 = {0, 1, 0}; e2 = {0, 0, 1}; }
        else if (dir.dy != 0) { e1 = {1, 0, 0}; e2 = {0, 0, 1}; }
        else { e1 = {1, 0, 0}; e2 = {0, 1, 0}; }
    }
    for (int j = 0; j < spec.region_length; ++j) {
        const double wt = spec.distance_weighting ? static_cast<double>(j + 1) : 1.0;
        for (int l = -w; l <= w; ++l)
            for (int m = -w; m <= w; ++m)
                out.push_back({{j * dir.dx + l * e1.dx + m * e2.dx,
                                j * dir.dy + l * e1.dy + m * e2.dy,
                                j * dir.dz + l * e1.dz + m * e2.dz},
                               wt});
    }
    return out;
}

}  // namespace

LocalStats local_stats(const IntensityVolume& vol, const BinaryMask& mask,
                       const NeighborhoodSpec& spec) {
    check_spec(spec);
    if (vol.dims != mask.dims) throw std::invalid_argument("local_stats: dims differ");
    LocalStats st;
    st.dims = vol.dims;
    st.spec = spec;
    st.directions = connectivity_offsets(spec.connectivity);
    const std::size_t nd = st.directions.size();
    const std::size_t n = static_cast<std::size_t>(vol.size());
    st.mean.assign(nd, std::vector<double>(n, 0.0));
    st.stddev.assign(nd, std::vector<double>(n, 0.0));

    std::vector<std::vector<RegionVoxel>> regions(nd);
    for (std::size_t di = 0; di < nd; ++di) regions[di] = region_offsets(st.directions[di], spec);

    const double floor = sigma_floor(vol);
    const Dims3 d = vol.dims;
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(p)]) continue;
                for (std::size_t di = 0; di < nd; ++di) {
                    double sum = 0.0, sumsq = 0.0, wsum = 0.0;
                    for (const RegionVoxel& rv : regions[di]) {
                        const int xx = x + rv.off.dx, yy = y + rv.off.dy, zz = z + rv.off.dz;
                        if (!in_bounds(d, xx, yy, zz)) continue;
                        const std::int64_t q = linear_index(d, xx, yy, zz);
                        if (!mask.data[static_cast<std::size_t>(q)]) continue;
                        const double v = vol.data[static_cast<std::size_t>(q)];
                        sum += rv.weight * v;
                        sumsq += rv.weight * v * v;
                        wsum += rv.weight;
                    }
                    const double mu = sum / wsum;  // wsum > 0: the region contains p
                    const double var = std::max(0.0, sumsq / wsum - mu * mu);
                    st.mean[di][static_cast<std::size_t>(p)] = mu;
                    st.stddev[di][static_cast<std::size_t>(p)] = std::max(std::sqrt(var), floor);
                }
            }
    return st;
}

LaeCosts lae_pair_costs(double ip, double iq, double mu_p, double sigma_p, double mu_q,
                        double sigma_q, double k) {
    if (!(sigma_p > 0.0) || !(sigma_q > 0.0))
        throw std::invalid_argument("lae_pair_costs: sigmas must be positive");
    if (!(k > 0.0)) throw std::invalid_argument("lae_pair_costs: k must be positive");
    const double ap = ip - mu_q;  // p judged by q's region
    const double aq = iq - mu_p;  // q judged by p's region
    const double hq = 1.0 / (2.0 * sigma_q * sigma_q);
    const double hp = 1.0 / (2.0 * sigma_p * sigma_p);
    LaeCosts c;
    c.ss = c.tt = ap * ap * hq + aq * aq * hp;
    const double bq = k * sigma_q, bp = k * sigma_p;
    c.st = (ap - bq) * (ap - bq) * hq + (aq + bp) * (aq + bp) * hp;
    c.ts = (ap + bq) * (ap + bq) * hq + (aq - bp) * (aq - bp) * hp;
    return c;
}

std::pair<double, double> global_term(double intensity, double mu_lnp, double mu_fat,
                                      double alpha) {
    const double sig = (mu_fat - mu_lnp) / 8.0;
    if (!(sig > 0.0)) throw std::invalid_argument("global_term: shell mean must exceed core mean");
    if (!(alpha >= 0.0)) throw std::invalid_argument("global_term: alpha must be >= 0");
    const double bright = alpha * logistic(-(intensity - mu_lnp) / sig);
    const double dark = alpha * logistic((intensity - mu_fat) / sig);
    return {bright, dark};
}

BinaryMask run_gclae(const IntensityVolume& vol, const BinaryMask& mask,
                     const NeighborhoodSpec& spec, double k, const LocalStats* stats,
                     const GlobalTerm* global) {
    check_spec(spec);
    if (vol.dims != mask.dims) throw std::invalid_argument("run_gclae: dims differ");
    if (!(k > 0.0)) throw std::invalid_argument("run_gclae: k must be positive");
    if (mask.count() == 0) throw std::invalid_argument("run_gclae: empty working mask");

    LocalStats computed;
    if (!stats) {
        computed = local_stats(vol, mask, spec);
        stats = &computed;
    } else {
        if (stats->dims != vol.dims || stats->spec.connectivity != spec.connectivity ||
            stats->spec.region_length != spec.region_length ||
            stats->spec.region_width != spec.region_width ||
            stats->spec.distance_weighting != spec.distance_weighting)
            throw std::invalid_argument("run_gclae: stats do not match this instance");
    }

    const Dims3 d = vol.dims;
    const std::int64_t n = vol.size();
    std::vector<std::int32_t> node(static_cast<std::size_t>(n), -1);
    std::int32_t nv = 0;
    for (std::int64_t i = 0; i < n; ++i)
        if (mask.data[static_cast<std::size_t>(i)]) node[static_cast<std::size_t>(i)] = nv++;

    const std::vector<Offset3> half = half_connectivity_offsets(spec.connectivity);
    struct DirPair {
        Offset3 o;
        int fwd, bwd;
    };
    std::vector<DirPair> dirs;
    for (const Offset3& o : half)
        dirs.push_back({o, stats->direction_index(o), stats->direction_index(-o)});

    FlowGraph g(nv, static_cast<std::int64_t>(nv) * static_cast<std::int64_t>(half.size()));
    std::int64_t pair_count = 0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                if (node[static_cast<std::size_t>(p)] < 0) continue;
                for (const DirPair& dp : dirs) {
                    const int xx = x + dp.o.dx, yy = y + dp.o.dy, zz = z + dp.o.dz;
                    if (!in_bounds(d, xx, yy, zz)) continue;
                    const std::int64_t q = linear_index(d, xx, yy, zz);
                    if (node[static_cast<std::size_t>(q)] < 0) continue;
                    const LaeCosts c = lae_pair_costs(
                        vol.data[static_cast<std::size_t>(p)], vol.data[static_cast<std::size_t>(q)],
                        stats->mean[static_cast<std::size_t>(dp.bwd)][static_cast<std::size_t>(p)],
                        stats->stddev[static_cast<std::size_t>(dp.bwd)][static_cast<std::size_t>(p)],
                        stats->mean[static_cast<std::size_t>(dp.fwd)][static_cast<std::size_t>(q)],
                        stats->stddev[static_cast<std::size_t>(dp.fwd)][static_cast<std::size_t>(q)],
                        k);
                    g.add_pairwise_energy(node[static_cast<std::size_t>(p)],
                                          node[static_cast<std::size_t>(q)], c.ss, c.st, c.ts,
                                          c.tt);
                    ++pair_count;
                }
            }

    if (global) {
        if (global->profile.depth_extent() != d[vol.depth_axis])
            throw std::invalid_argument("run_gclae: profile depth extent mismatch");
        const double alpha = global->alpha
                                 ? *global->alpha
                                 : 5.0 * static_cast<double>(pair_count) / static_cast<double>(nv);
        for (int z = 0; z < d[2]; ++z)
            for (int y = 0; y < d[1]; ++y)
                for (int x = 0; x < d[0]; ++x) {
                    const std::int64_t p = linear_index(d, x, y, z);
                    if (node[static_cast<std::size_t>(p)] < 0) continue;
                    const int dep = vol.depth_axis == 0 ? x : vol.depth_axis == 1 ? y : z;
                    const auto [bright, dark] = global_term(
                        vol.data[static_cast<std::size_t>(p)],
                        global->profile.mu_lnp[static_cast<std::size_t>(dep)],
                        global->profile.mu_fat[static_cast<std::size_t>(dep)], alpha);
                    g.add_terminal(node[static_cast<std::size_t>(p)], dark, bright);
                }
    }

    const CutResult cut = g.solve_min_cut();
    BinaryMask out(d);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int32_t id = node[static_cast<std::size_t>(i)];
        if (id >= 0 && cut.side[static_cast<std::size_t>(id)] == CutSide::Source)
            out.data[static_cast<std::size_t>(i)] = 1;
    }
    return out;
}

}  // namespace nestcut
