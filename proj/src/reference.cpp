#include "nestcut/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <stdexcept>

namespace nestcut::reference {

std::vector<double> brute_force_sq_distance(const BinaryMask& mask) {
    const Dims3 d = mask.dims;
    const std::int64_t n = voxel_count(d);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t i = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(i)]) continue;
                // nearest outside voxel, or the border one step beyond it
                std::int64_t best =
                    std::min({x + 1, y + 1, z + 1, d[0] - x, d[1] - y, d[2] - z});
                best = best * best;
                for (int zz = 0; zz < d[2]; ++zz)
                    for (int yy = 0; yy < d[1]; ++yy)
                        for (int xx = 0; xx < d[0]; ++xx) {
                            if (mask.at(xx, yy, zz)) continue;
                            const std::int64_t dx = xx - x, dy = yy - y, dz = zz - z;
                            best = std::min(best, dx * dx + dy * dy + dz * dz);
                        }
                out[static_cast<std::size_t>(i)] = static_cast<double>(best);
            }
    return out;
}

namespace {

std::vector<Offset3> ball_offsets(int radius) {
    std::vector<Offset3> out;
    for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                if (dx * dx + dy * dy + dz * dz <= radius * radius) out.push_back({dx, dy, dz});
    return out;
}

}  // namespace

BinaryMask naive_erode(const BinaryMask& mask, int radius) {
    const Dims3 d = mask.dims;
    const std::vector<Offset3> ball = ball_offsets(radius);
    BinaryMask out(d);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                bool keep = true;
                for (const Offset3& o : ball) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (!in_bounds(d, xx, yy, zz) || !mask.at(xx, yy, zz)) {
                        keep = false;
                        break;
                    }
                }
                if (keep && mask.at(x, y, z)) out.set(x, y, z, true);
            }
    return out;
}

BinaryMask naive_dilate(const BinaryMask& mask, int radius) {
    const Dims3 d = mask.dims;
    const std::vector<Offset3> ball = ball_offsets(radius);
    BinaryMask out(d);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                for (const Offset3& o : ball) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (in_bounds(d, xx, yy, zz) && mask.at(xx, yy, zz)) {
                        out.set(x, y, z, true);
                        break;
                    }
                }
            }
    return out;
}

ComponentLabels flood_fill_components(const BinaryMask& mask, int connectivity) {
    const Dims3 d = mask.dims;
    const std::vector<Offset3> offs = connectivity_offsets(connectivity);
    ComponentLabels out;
    out.dims = d;
    out.label.assign(static_cast<std::size_t>(voxel_count(d)), -1);
    std::deque<std::int64_t> queue;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t i = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(i)] ||
                    out.label[static_cast<std::size_t>(i)] >= 0)
                    continue;
                const std::int32_t id = out.count();
                out.sizes.push_back(0);
                out.label[static_cast<std::size_t>(i)] = id;
                queue.push_back(i);
                while (!queue.empty()) {
                    const std::int64_t j = queue.front();
                    queue.pop_front();
                    ++out.sizes[static_cast<std::size_t>(id)];
                    const int jx = static_cast<int>(j % d[0]);
                    const int jy = static_cast<int>((j / d[0]) % d[1]);
                    const int jz = static_cast<int>(j / (static_cast<std::int64_t>(d[0]) * d[1]));
                    for (const Offset3& o : offs) {
                        const int xx = jx + o.dx, yy = jy + o.dy, zz = jz + o.dz;
                        if (!in_bounds(d, xx, yy, zz)) continue;
                        const std::int64_t q = linear_index(d, xx, yy, zz);
                        if (mask.data[static_cast<std::size_t>(q)] &&
                            out.label[static_cast<std::size_t>(q)] < 0) {
                            out.label[static_cast<std::size_t>(q)] = id;
                            queue.push_back(q);
                        }
                    }
                }
            }
    return out;
}

namespace {

using I = std::int64_t;

struct V3 {
    I x, y, z;
};

V3 sub(const IPoint& a, const IPoint& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

V3 cross(const V3& a, const V3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

I dot(const V3& a, const V3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

bool on_segment(const IPoint& a, const IPoint& b, const IPoint& q) {
    const V3 ab = sub(b, a), aq = sub(q, a);
    const V3 c = cross(ab, aq);
    if (c.x != 0 || c.y != 0 || c.z != 0) return false;
    const I t = dot(aq, ab);
    return t >= 0 && t <= dot(ab, ab);
}

bool in_triangle(const IPoint& a, const IPoint& b, const IPoint& c, const IPoint& q) {
    const V3 n = cross(sub(b, a), sub(c, a));
    if (n.x == 0 && n.y == 0 && n.z == 0) return false;  // degenerate
    if (dot(n, sub(q, a)) != 0) return false;            // off the plane
    const I s1 = dot(cross(sub(b, a), sub(q, a)), n);
    const I s2 = dot(cross(sub(c, b), sub(q, b)), n);
    const I s3 = dot(cross(sub(a, c), sub(q, c)), n);
    return s1 >= 0 && s2 >= 0 && s3 >= 0;
}

I orient(const IPoint& a, const IPoint& b, const IPoint& c, const IPoint& d) {
    return dot(cross(sub(b, a), sub(c, a)), sub(d, a));
}

bool in_tetra(const IPoint& a, const IPoint& b, const IPoint& c, const IPoint& d,
              const IPoint& q) {
    const I o = orient(a, b, c, d);
    if (o == 0) return false;  // flat
    const I s1 = orient(a, b, c, q), s2 = orient(a, d, b, q), s3 = orient(a, c, d, q),
            s4 = orient(b, d, c, q);
    if (o > 0) return s1 >= 0 && s2 >= 0 && s3 >= 0 && s4 >= 0;
    return s1 <= 0 && s2 <= 0 && s3 <= 0 && s4 <= 0;
}

}  // namespace

bool hull_contains(const std::vector<IPoint>& pts, const IPoint& q) {
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        if (pts[i].x == q.x && pts[i].y == q.y && pts[i].z == q.z) return true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (on_segment(pts[i], pts[j], q)) return true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                if (in_triangle(pts[i], pts[j], pts[k], q)) return true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                for (std::size_t l = k + 1; l < n; ++l)
                    if (in_tetra(pts[i], pts[j], pts[k], pts[l], q)) return true;
    return false;
}

IntensityVolume serial_downsample(const IntensityVolume& vol, int factor) {
    if (factor < 1) throw std::invalid_argument("factor must be >= 1");
    IntensityVolume out;
    for (int i = 0; i < 3; ++i) {
        out.dims[i] = (vol.dims[i] + factor - 1) / factor;
        out.spacing[i] = vol.spacing[i] * factor;
    }
    out.depth_axis = vol.depth_axis;
    out.data.assign(static_cast<std::size_t>(out.size()), 0.0f);
    for (int z = 0; z < out.dims[2]; ++z)
        for (int y = 0; y < out.dims[1]; ++y)
            for (int x = 0; x < out.dims[0]; ++x) {
                double sum = 0.0;
                std::int64_t cnt = 0;
                for (int zz = z * factor; zz < std::min(vol.dims[2], (z + 1) * factor); ++zz)
                    for (int yy = y * factor; yy < std::min(vol.dims[1], (y + 1) * factor); ++yy)
                        for (int xx = x * factor; xx < std::min(vol.dims[0], (x + 1) * factor);
                             ++xx) {
                            sum += vol.at(xx, yy, zz);
                            ++cnt;
                        }
                out.at(x, y, z) = static_cast<float>(sum / static_cast<double>(cnt));
            }
    return out;
}

LocalStats serial_local_stats(const IntensityVolume& vol, const BinaryMask& mask,
                              const NeighborhoodSpec& spec) {
    LocalStats st;
    st.dims = vol.dims;
    st.spec = spec;
    st.directions = connectivity_offsets(spec.connectivity);
    const std::size_t nd = st.directions.size();
    const std::size_t n = static_cast<std::size_t>(vol.size());
    st.mean.assign(nd, std::vector<double>(n, 0.0));
    st.stddev.assign(nd, std::vector<double>(n, 0.0));
    const double floor = sigma_floor(vol);
    const Dims3 d = vol.dims;

    for (std::size_t di = 0; di < nd; ++di) {
        const Offset3 dir = st.directions[di];
        const bool axis_dir = std::abs(dir.dx) + std::abs(dir.dy) + std::abs(dir.dz) == 1;
        const int w = (spec.region_width > 0 && axis_dir) ? spec.region_width : 0;
        for (int z = 0; z < d[2]; ++z)
            for (int y = 0; y < d[1]; ++y)
                for (int x = 0; x < d[0]; ++x) {
                    if (!mask.at(x, y, z)) continue;
                    std::vector<std::pair<double, double>> vals;  // value, weight
                    for (int j = 0; j < spec.region_length; ++j) {
                        const int cx = x + j * dir.dx, cy = y + j * dir.dy, cz = z + j * dir.dz;
                        const double wt = spec.distance_weighting ? j + 1.0 : 1.0;
                        for (int l = -w; l <= w; ++l)
                            for (int m = -w; m <= w; ++m) {
                                int px = cx, py = cy, pz = cz;
                                if (w > 0) {
                                    if (dir.dx != 0) { py += l; pz += m; }
                                    else if (dir.dy != 0) { px += l; pz += m; }
                                    else { px += l; py += m; }
                                }
                                if (!in_bounds(d, px, py, pz) || !mask.at(px, py, pz)) continue;
                                vals.push_back({vol.at(px, py, pz), wt});
                            }
                    }
                    double mu = 0.0, wsum = 0.0;
                    for (auto [v, vw] : vals) { mu += vw * v; wsum += vw; }
                    mu /= wsum;
                    double var = 0.0;
                    for (auto [v, vw] : vals) var += vw * (v - mu) * (v - mu);
                    var /= wsum;
                    const std::int64_t p = linear_index(d, x, y, z);
                    st.mean[di][static_cast<std::size_t>(p)] = mu;
                    st.stddev[di][static_cast<std::size_t>(p)] = std::max(std::sqrt(var), floor);
                }
    }
    return st;
}

double enumerate_min_cut(const FlowGraph& g, std::vector<CutSide>* best_side) {
    const int n = g.node_count();
    if (n > 24) throw std::invalid_argument("enumerate_min_cut: too many nodes");
    std::vector<CutSide> side(static_cast<std::size_t>(n));
    double best = 0.0;
    bool first = true;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        for (int i = 0; i < n; ++i)
            side[static_cast<std::size_t>(i)] =
                (bits >> i) & 1u ? CutSide::Source : CutSide::Sink;
        const double c = g.assignment_cost(side);
        if (first || c < best) {
            best = c;
            first = false;
            if (best_side) *best_side = side;
        }
    }
    return best;
}

namespace {

// shared direct evaluation of one two-region labeling
double lae_energy_impl(const IntensityVolume& vol, const BinaryMask& mask,
                       const LocalStats& stats, double k, const GlobalTerm* global,
                       const BinaryMask& labeling, double alpha) {
    const Dims3 d = vol.dims;
    double e = 0.0;
    const std::vector<Offset3> half = half_connectivity_offsets(stats.spec.connectivity);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(p)]) continue;
                const bool bright_p = labeling.data[static_cast<std::size_t>(p)] != 0;
                if (global) {
                    const int dep = vol.depth_axis == 0 ? x : vol.depth_axis == 1 ? y : z;
                    const auto [bright_cost, dark_cost] = global_term(
                        vol.data[static_cast<std::size_t>(p)],
                        global->profile.mu_lnp[static_cast<std::size_t>(dep)],
                        global->profile.mu_fat[static_cast<std::size_t>(dep)], alpha);
                    e += bright_p ? bright_cost : dark_cost;
                }
                for (const Offset3& o : half) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (!in_bounds(d, xx, yy, zz)) continue;
                    const std::int64_t q = linear_index(d, xx, yy, zz);
                    if (!mask.data[static_cast<std::size_t>(q)]) continue;
                    const bool bright_q = labeling.data[static_cast<std::size_t>(q)] != 0;
                    const int fwd = stats.direction_index(o);
                    const int bwd = stats.direction_index(-o);
                    const LaeCosts c = lae_pair_costs(
                        vol.data[static_cast<std::size_t>(p)],
                        vol.data[static_cast<std::size_t>(q)],
                        stats.mean[static_cast<std::size_t>(bwd)][static_cast<std::size_t>(p)],
                        stats.stddev[static_cast<std::size_t>(bwd)][static_cast<std::size_t>(p)],
                        stats.mean[static_cast<std::size_t>(fwd)][static_cast<std::size_t>(q)],
                        stats.stddev[static_cast<std::size_t>(fwd)][static_cast<std::size_t>(q)],
                        k);
                    if (bright_p && bright_q) e += c.ss;
                    else if (bright_p && !bright_q) e += c.st;
                    else if (!bright_p && bright_q) e += c.ts;
                    else e += c.tt;
                }
            }
    return e;
}

double resolve_alpha(const BinaryMask& mask, const LocalStats& stats, const GlobalTerm* global) {
    if (!global) return 0.0;
    if (global->alpha) return *global->alpha;
    const Dims3 d = mask.dims;
    const std::vector<Offset3> half = half_connectivity_offsets(stats.spec.connectivity);
    std::int64_t pairs = 0, voxels = 0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (!mask.at(x, y, z)) continue;
                ++voxels;
                for (const Offset3& o : half) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (in_bounds(d, xx, yy, zz) && mask.at(xx, yy, zz)) ++pairs;
                }
            }
    return 5.0 * static_cast<double>(pairs) / static_cast<double>(voxels);
}

}  // namespace

double lae_energy(const IntensityVolume& vol, const BinaryMask& mask, const LocalStats& stats,
                  double k, const GlobalTerm* global, const BinaryMask& labeling) {
    return lae_energy_impl(vol, mask, stats, k, global, labeling,
                           resolve_alpha(mask, stats, global));
}

double lae_exhaustive_min(const IntensityVolume& vol, const BinaryMask& mask,
                          const LocalStats& stats, double k, const GlobalTerm* global,
                          BinaryMask* best) {
    std::vector<std::int64_t> voxels;
    for (std::int64_t i = 0; i < mask.size(); ++i)
        if (mask.data[static_cast<std::size_t>(i)]) voxels.push_back(i);
    if (voxels.size() > 20) throw std::invalid_argument("lae_exhaustive_min: mask too large");
    const double alpha = resolve_alpha(mask, stats, global);

    BinaryMask labeling(mask.dims);
    double best_e = 0.0;
    bool first = true;
    for (std::uint32_t bits = 0; bits < (1u << voxels.size()); ++bits) {
        for (std::size_t i = 0; i < voxels.size(); ++i)
            labeling.data[static_cast<std::size_t>(voxels[i])] =
                (bits >> i) & 1u ? 1 : 0;
        const double e = lae_energy_impl(vol, mask, stats, k, global, labeling, alpha);
        if (first || e < best_e) {
            best_e = e;
            first = false;
            if (best) *best = labeling;
        }
    }
    return best_e;
}

double ngc_energy(const NgcProblem& prob, const LabelVolume& labeling) {
    const IntensityVolume& vol = *prob.vol;
    const Dims3 d = vol.dims;
    const int axis = vol.depth_axis;
    const double big = 1e30;  // stands in for a forbidden configuration
    double e = 0.0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                const Label l = static_cast<Label>(labeling.data[static_cast<std::size_t>(p)]);
                const int dep = axis == 0 ? x : axis == 1 ? y : z;
                const NgcDataCost c =
                    ngc_data_costs(vol.data[static_cast<std::size_t>(p)],
                                   prob.threshold[static_cast<std::size_t>(dep)],
                                   prob.slope[static_cast<std::size_t>(dep)]);
                e += l == Label::Pbs ? c.pbs : l == Label::Fat ? c.fat : c.lnp;
                if (prob.hull_mask && l == Label::Lnp &&
                    !prob.hull_mask->data[static_cast<std::size_t>(p)])
                    e += big;
                if (prob.seeds) {
                    if (prob.seeds->fat.data[static_cast<std::size_t>(p)] && l != Label::Fat)
                        e += big;
                    if (prob.seeds->lnp.data[static_cast<std::size_t>(p)] && l != Label::Lnp)
                        e += big;
                }
            }

    const std::vector<Offset3> half = half_connectivity_offsets(18);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t p = linear_index(d, x, y, z);
                const Label lp = static_cast<Label>(labeling.data[static_cast<std::size_t>(p)]);
                for (const Offset3& o : half) {
                    const int xx = x + o.dx, yy = y + o.dy, zz = z + o.dz;
                    if (!in_bounds(d, xx, yy, zz)) continue;
                    const std::int64_t q = linear_index(d, xx, yy, zz);
                    const Label lq = static_cast<Label>(labeling.data[static_cast<std::size_t>(q)]);
                    const double wlen =
                        1.0 / std::sqrt(static_cast<double>(o.dx * o.dx + o.dy * o.dy +
                                                            o.dz * o.dz));
                    const bool fg_p = lp != Label::Pbs, fg_q = lq != Label::Pbs;
                    if (fg_p != fg_q) e += prob.alpha_mask * wlen;
                    const bool core_p = lp == Label::Lnp, core_q = lq == Label::Lnp;
                    if (core_p == core_q) continue;
                    if (!prob.votes) {
                        e += prob.alpha_lnp * wlen;
                        continue;
                    }
                    const bool pin = prob.vote_domain->data[static_cast<std::size_t>(p)] != 0;
                    const bool qin = prob.vote_domain->data[static_cast<std::size_t>(q)] != 0;
                    int tp = pin ? (*prob.votes)[static_cast<std::size_t>(p)] : 0;
                    int tq = qin ? (*prob.votes)[static_cast<std::size_t>(q)] : 0;
                    if (pin && !qin) tq = tp + 1;
                    else if (!pin && qin) tp = tq + 1;
                    const double c = core_p ? vote_transition_cost(tp, tq)
                                            : vote_transition_cost(tq, tp);
                    e += std::isinf(c) ? big : c;
                }
            }
    return e;
}

double ngc_exhaustive_min(const NgcProblem& prob, LabelVolume* best) {
    const std::int64_t n = prob.vol->size();
    if (n > 12) throw std::invalid_argument("ngc_exhaustive_min: volume too large");
    LabelVolume lab;
    lab.dims = prob.vol->dims;
    lab.spacing = prob.vol->spacing;
    lab.depth_axis = prob.vol->depth_axis;
    lab.data.assign(static_cast<std::size_t>(n), 0);

    std::int64_t total = 1;
    for (std::int64_t i = 0; i < n; ++i) total *= 3;
    double best_e = 0.0;
    bool first = true;
    for (std::int64_t code = 0; code < total; ++code) {
        std::int64_t c = code;
        for (std::int64_t i = 0; i < n; ++i) {
            lab.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c % 3);
            c /= 3;
        }
        const double e = ngc_energy(prob, lab);
        if (first || e < best_e) {
            best_e = e;
            first = false;
            if (best) *best = lab;
        }
    }
    return best_e;
}

}  // namespace nestcut::reference
