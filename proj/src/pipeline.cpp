#include "nestcut/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <exception>

#include <json.hpp>

#include "nestcut/rng.hpp"

namespace nestcut {

void PipelineConfig::validate() const {
    if (k_grid.empty()) throw std::invalid_argument("k_grid must not be empty");
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        if (!(k_grid[i] > 0.0)) throw std::invalid_argument("k_grid values must be positive");
        if (i > 0 && !(k_grid[i] > k_grid[i - 1]))
            throw std::invalid_argument("k_grid must be strictly ascending");
    }
    if (max_selected_k < 1) throw std::invalid_argument("max_selected_k must be >= 1");
    if (!(fat_ratio_max > 0.0)) throw std::invalid_argument("fat_ratio_max must be positive");
    if (!(inner_mask_frac > 0.0) || !(inner_mask_frac < 1.0))
        throw std::invalid_argument("inner_mask_frac must be in (0, 1)");
    if (neighborhood.connectivity != 6 && neighborhood.connectivity != 18 &&
        neighborhood.connectivity != 26)
        throw std::invalid_argument("neighborhood.connectivity must be 6, 18 or 26");
    if (neighborhood.region_length < 1)
        throw std::invalid_argument("neighborhood.region_length must be >= 1");
    if (neighborhood.region_width < 0)
        throw std::invalid_argument("neighborhood.region_width must be >= 0");
    if (alpha && !(*alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (downsample_factor < 0) throw std::invalid_argument("downsample_factor must be >= 0");
    if (opening_radius < 0) throw std::invalid_argument("opening_radius must be >= 0");
}

PipelineConfig parse_config(const std::string& json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    PipelineConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == "k_grid") {
            cfg.k_grid = value.get<std::vector<double>>();
        } else if (key == "max_selected_k") {
            cfg.max_selected_k = value.get<int>();
        } else if (key == "fat_ratio_max") {
            cfg.fat_ratio_max = value.get<double>();
        } else if (key == "inner_mask_frac") {
            cfg.inner_mask_frac = value.get<double>();
        } else if (key == "neighborhood") {
            if (!value.is_object())
                throw std::invalid_argument("config: neighborhood must be an object");
            for (const auto& [nk, nv] : value.items()) {
                if (nk == "connectivity") cfg.neighborhood.connectivity = nv.get<int>();
                else if (nk == "region_length") cfg.neighborhood.region_length = nv.get<int>();
                else if (nk == "region_width") cfg.neighborhood.region_width = nv.get<int>();
                else if (nk == "distance_weighting")
                    cfg.neighborhood.distance_weighting = nv.get<bool>();
                else throw std::invalid_argument("unknown config key: neighborhood." + nk);
            }
        } else if (key == "alpha") {
            if (!value.is_null()) cfg.alpha = value.get<double>();
        } else if (key == "rng_seed") {
            cfg.rng_seed = value.get<std::uint64_t>();
        } else if (key == "downsample_factor") {
            cfg.downsample_factor = value.get<int>();
        } else if (key == "opening_radius") {
            cfg.opening_radius = value.get<int>();
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

int choose_downsample_factor(const Dims3& dims) {
    int f = 1;
    while ((dims[0] + f - 1) / f > 99 || (dims[1] + f - 1) / f > 99 ||
           (dims[2] + f - 1) / f > 99)
        ++f;
    return f;
}

std::vector<double> select_k(const std::vector<double>& k_grid,
                             const std::vector<BinaryMask>& fat_by_k, const BinaryMask& ln_mask,
                             const PipelineConfig& cfg, std::vector<double>* ratios_out) {
    if (k_grid.size() != fat_by_k.size())
        throw std::invalid_argument("select_k: one shell mask per k required");
    const std::vector<double> dist = distance_transform(ln_mask);
    double max_dist = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (ln_mask.data[i]) max_dist = std::max(max_dist, dist[i]);
    BinaryMask inner(ln_mask.dims);
    std::int64_t inner_count = 0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (ln_mask.data[i] && dist[i] > cfg.inner_mask_frac * max_dist) {
            inner.data[i] = 1;
            ++inner_count;
        }
    if (inner_count == 0) throw std::runtime_error("select_k: empty inner mask");

    std::vector<double> ratios(k_grid.size(), 0.0);
    for (std::size_t ki = 0; ki < k_grid.size(); ++ki) {
        if (fat_by_k[ki].dims != ln_mask.dims)
            throw std::invalid_argument("select_k: mask dims differ");
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < inner.data.size(); ++i)
            if (inner.data[i] && fat_by_k[ki].data[i]) ++hits;
        ratios[ki] = static_cast<double>(hits) / static_cast<double>(inner_count);
    }
    if (ratios_out) *ratios_out = ratios;

    std::vector<double> qualifying;
    for (std::size_t ki = 0; ki < k_grid.size(); ++ki)
        if (ratios[ki] < cfg.fat_ratio_max) qualifying.push_back(k_grid[ki]);
    if (!qualifying.empty()) {
        if (static_cast<int>(qualifying.size()) > cfg.max_selected_k)
            qualifying.erase(qualifying.begin(),
                             qualifying.end() - cfg.max_selected_k);  // keep the largest
        return qualifying;
    }
    std::size_t best = 0;
    for (std::size_t ki = 1; ki < ratios.size(); ++ki)
        if (ratios[ki] < ratios[best]) best = ki;
    return {k_grid[best]};
}

FusedRegions fuse_confident(const std::vector<BinaryMask>& fat_masks, const BinaryMask& ln_mask) {
    if (fat_masks.empty() || fat_masks.size() > 3)
        throw std::invalid_argument("fuse_confident: expected 1 to 3 shell masks");
    for (const BinaryMask& m : fat_masks)
        if (m.dims != ln_mask.dims) throw std::invalid_argument("fuse_confident: dims differ");
    FusedRegions out;
    out.confident_fat = BinaryMask(ln_mask.dims);
    out.confident_lnp = BinaryMask(ln_mask.dims);
    out.votes.assign(ln_mask.data.size(), 0);
    for (std::size_t i = 0; i < ln_mask.data.size(); ++i) {
        int t = 0;
        for (const BinaryMask& m : fat_masks) t += m.data[i] ? 1 : 0;
        out.votes[i] = static_cast<std::uint8_t>(t);
        if (!ln_mask.data[i]) continue;
        if (t == static_cast<int>(fat_masks.size())) out.confident_fat.data[i] = 1;
        if (t == 0) out.confident_lnp.data[i] = 1;
    }
    return out;
}

SeedSet build_seeds(const BinaryMask& confident_lnp, const BinaryMask& confident_fat,
                    const BinaryMask& ln_mask, int opening_radius, bool* fallback_unopened) {
    if (confident_lnp.dims != ln_mask.dims || confident_fat.dims != ln_mask.dims)
        throw std::invalid_argument("build_seeds: dims differ");
    SeedSet seeds;
    seeds.lnp = open(confident_lnp, opening_radius);
    bool fell_back = false;
    if (seeds.lnp.count() == 0) {
        // opening wiped the core region out; fall back to the raw one
        seeds.lnp = confident_lnp;
        fell_back = true;
    }
    if (fallback_unopened) *fallback_unopened = fell_back;

    // keep only shell components that reach the outer rim of the working mask
    const BinaryMask eroded = erode(ln_mask, 1);
    BinaryMask rim(ln_mask.dims);
    for (std::size_t i = 0; i < ln_mask.data.size(); ++i)
        rim.data[i] = ln_mask.data[i] && !eroded.data[i] ? 1 : 0;
    const ComponentLabels comps = connected_components(confident_fat, 26);
    std::vector<std::uint8_t> touches(static_cast<std::size_t>(comps.count()), 0);
    for (std::size_t i = 0; i < rim.data.size(); ++i)
        if (rim.data[i] && comps.label[i] >= 0) touches[static_cast<std::size_t>(comps.label[i])] = 1;
    seeds.fat = BinaryMask(ln_mask.dims);
    for (std::size_t i = 0; i < confident_fat.data.size(); ++i)
        if (comps.label[i] >= 0 && touches[static_cast<std::size_t>(comps.label[i])])
            seeds.fat.data[i] = 1;
    return seeds;
}

namespace {

void validate_input(const IntensityVolume& vol) {
    if (vol.dims[0] < 1 || vol.dims[1] < 1 || vol.dims[2] < 1)
        throw std::invalid_argument("volume has empty dimensions");
    if (vol.data.size() != static_cast<std::size_t>(vol.size()))
        throw std::invalid_argument("volume data size does not match its dims");
    if (vol.depth_axis < 0 || vol.depth_axis > 2)
        throw std::invalid_argument("depth_axis must be 0, 1 or 2");
}

// The confident core region is an intersection of per-k dark sides. Under
// heavy speckle it keeps two kinds of junk: detached false fragments, and a
// porous sponge of dark shell grains that can bridge into the core body when
// every selected slice ran conservatively. A radius-1 opening removes the
// sponge (porous structures do not survive erosion) while the solid core body
// does; the largest connected remainder with its cavities filled is then an
// unbiased sampling domain for the core statistics.
BinaryMask largest_filled(const BinaryMask& mask) {
    const ComponentLabels comps = connected_components(mask, 26);
    if (comps.count() == 0) return mask;
    int best = 0;
    for (int c = 1; c < comps.count(); ++c)
        if (comps.sizes[static_cast<std::size_t>(c)] > comps.sizes[static_cast<std::size_t>(best)])
            best = c;
    BinaryMask body(mask.dims);
    for (std::size_t i = 0; i < body.data.size(); ++i)
        body.data[i] = comps.label[i] == best ? 1 : 0;
    return fill_holes(body);
}

BinaryMask solid_core(const BinaryMask& confident_lnp) {
    BinaryMask body = open(confident_lnp, 1);
    if (body.count() == 0) body = confident_lnp;  // tiny region: keep it as-is
    return largest_filled(body);
}

// 3x3x3 majority vote; at the border only in-bounds cells participate. One
// pass turns a mostly-set body solid and wipes sparsely-set grain patterns,
// which is the separation a per-voxel intensity test needs under speckle.
BinaryMask majority3(const BinaryMask& mask) {
    BinaryMask out(mask.dims);
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    const auto at = [&](int x, int y, int z) {
        return static_cast<std::size_t>((static_cast<std::int64_t>(z) * ny + y) * nx + x);
    };
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                int cells = 0, set = 0;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int xx = x + dx, yy = y + dy, zz = z + dz;
                            if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz)
                                continue;
                            ++cells;
                            set += mask.data[at(xx, yy, zz)];
                        }
                out.data[at(x, y, z)] = 2 * set > cells ? 1 : 0;
            }
    return out;
}

// Shell statistics domain: interior of the working mask minus the core body.
// Eroding first keeps the partial-volume band at the outer boundary out of the
// shell estimate; if erosion empties the mask the un-eroded difference is used.
BinaryMask shell_domain(const BinaryMask& ln_mask, const BinaryMask& core) {
    BinaryMask dom = erode(ln_mask, 2);
    bool any = false;
    for (std::size_t i = 0; i < dom.data.size(); ++i) {
        if (dom.data[i] && core.data[i]) dom.data[i] = 0;
        any = any || dom.data[i];
    }
    if (any) return dom;
    dom = ln_mask;
    for (std::size_t i = 0; i < dom.data.size(); ++i)
        if (core.data[i]) dom.data[i] = 0;
    return dom;
}

}  // namespace

SegmentationResult segment(const IntensityVolume& vol, const PipelineConfig& cfg) {
    cfg.validate();
    SegmentationResult result;
    PipelineTrace& trace = result.trace;
    const auto run_start = std::chrono::steady_clock::now();

    const auto staged = [&trace](const char* name, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        } catch (...) {
            throw StageError(name, "unknown error");
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        trace.stage_seconds.emplace_back(name, dt.count());
    };

    staged("input", [&] { validate_input(vol); });

    IntensityVolume vol_d;
    staged("downsample", [&] {
        trace.downsample_factor =
            cfg.downsample_factor > 0 ? cfg.downsample_factor : choose_downsample_factor(vol.dims);
        vol_d = downsample(vol, trace.downsample_factor);
        trace.working_dims = vol_d.dims;
    });

    Rng rng(cfg.rng_seed);
    staged("estimate_pbs", [&] { trace.pbs = estimate_pbs(vol_d, rng); });

    const int depth_len = vol_d.dims[vol_d.depth_axis];
    staged("ngc_initial", [&] {
        NgcProblem prob;
        prob.vol = &vol_d;
        prob.threshold.assign(static_cast<std::size_t>(depth_len), trace.pbs.threshold());
        prob.slope.assign(static_cast<std::size_t>(depth_len), trace.pbs.slope());
        trace.initial_labels = ngc_segment(prob);
    });

    staged("extract_ln_mask", [&] { trace.ln_mask = extract_ln_mask(trace.initial_labels); });

    LocalStats stats;
    staged("lae_sweep_round1", [&] {
        stats = local_stats(vol_d, trace.ln_mask, cfg.neighborhood);
        trace.swept_k = cfg.k_grid;
        trace.fat_by_k.assign(cfg.k_grid.size(), BinaryMask());
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < static_cast<int>(cfg.k_grid.size()); ++i) {
            try {
                trace.fat_by_k[static_cast<std::size_t>(i)] =
                    run_gclae(vol_d, trace.ln_mask, cfg.neighborhood,
                              cfg.k_grid[static_cast<std::size_t>(i)], &stats, nullptr);
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    });

    staged("select_k", [&] {
        trace.selected_k =
            select_k(trace.swept_k, trace.fat_by_k, trace.ln_mask, cfg, &trace.fat_ratios);
    });

    const auto selected_masks = [&](const std::vector<BinaryMask>& by_k,
                                    const std::vector<double>& grid) {
        std::vector<BinaryMask> out;
        for (double k : trace.selected_k)
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (grid[i] == k) out.push_back(by_k[i]);
        return out;
    };

    staged("fuse_round1", [&] {
        const FusedRegions fused =
            fuse_confident(selected_masks(trace.fat_by_k, trace.swept_k), trace.ln_mask);
        trace.confident_fat_r1 = fused.confident_fat;
        trace.confident_lnp_r1 = fused.confident_lnp;
    });

    staged("profiles_round1", [&] {
        const BinaryMask core_dom = solid_core(trace.confident_lnp_r1);
        const DepthStats ds =
            depth_stats(vol_d, shell_domain(trace.ln_mask, core_dom), core_dom);
        trace.profile_r1 = fit_profile(ds, vol_d, rng);
    });

    staged("lae_round2", [&] {
        const GlobalTerm anchor{trace.profile_r1, cfg.alpha};
        trace.fat_by_k_r2.assign(trace.selected_k.size(), BinaryMask());
        std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < static_cast<int>(trace.selected_k.size()); ++i) {
            try {
                trace.fat_by_k_r2[static_cast<std::size_t>(i)] =
                    run_gclae(vol_d, trace.ln_mask, cfg.neighborhood,
                              trace.selected_k[static_cast<std::size_t>(i)], &stats, &anchor);
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    });

    staged("fuse_round2", [&] {
        FusedRegions fused = fuse_confident(trace.fat_by_k_r2, trace.ln_mask);
        trace.confident_fat_r2 = fused.confident_fat;
        trace.confident_lnp_r2 = fused.confident_lnp;
        trace.votes = std::move(fused.votes);
    });

    BinaryMask core_geo;
    staged("profiles_round2", [&] {
        core_geo = solid_core(trace.confident_lnp_r2);
        const DepthStats ds = depth_stats(vol_d, shell_domain(trace.ln_mask, core_geo), core_geo);
        trace.profile_r2 = fit_profile(ds, vol_d, rng);
    });

    staged("build_seeds", [&] {
        // Core body for seeding: voxels darker than the per-depth midpoint of
        // the two fitted class means, taken inside the interior of the working
        // mask and cleaned like the statistics domain. The midpoint test keeps
        // the core near-solid while shell voxels pass it only as isolated
        // speckle grains, so the cleaned body tracks the core on sharp and
        // smoothed volumes alike.
        BinaryMask below(vol_d.dims);
        const BinaryMask inner = erode(trace.ln_mask, 1);
        std::size_t idx = 0;
        for (int z = 0; z < vol_d.dims[2]; ++z)
            for (int y = 0; y < vol_d.dims[1]; ++y)
                for (int x = 0; x < vol_d.dims[0]; ++x, ++idx) {
                    if (!inner.data[idx]) continue;
                    const std::size_t dep = static_cast<std::size_t>(
                        vol_d.depth_axis == 0 ? x : vol_d.depth_axis == 1 ? y : z);
                    const double mid = 0.5 * (trace.profile_r2.mu_lnp[dep] +
                                              trace.profile_r2.mu_fat[dep]);
                    if (vol_d.data[idx] < mid) below.data[idx] = 1;
                }
        const BinaryMask body = largest_filled(majority3(below));

        // Shell seed base: mask voxels that are clear of the core body and not
        // themselves midpoint-dark, so an undersized body cannot spread shell
        // seeds over core territory. Dilating the body keeps the boundary band
        // unseeded and the final cut decides it from the data. The outer rim
        // of the working mask always joins the base: where the shell is
        // locally thin the rim is the last separating layer, and pinning it
        // keeps the core from reaching the outside.
        const BinaryMask keep_out = dilate(body, 1);
        BinaryMask fat_base = trace.ln_mask;
        for (std::size_t i = 0; i < fat_base.data.size(); ++i)
            if (keep_out.data[i] || below.data[i]) fat_base.data[i] = 0;
        for (std::size_t i = 0; i < fat_base.data.size(); ++i)
            if (trace.ln_mask.data[i] && !inner.data[i]) fat_base.data[i] = 1;
        // Seed the core from the eroded body: a seed placed past the real
        // boundary is pinned for good, while an unseeded boundary band is
        // still recovered by the cut, so the base leans inward. A thin body
        // that erosion mostly destroys is kept whole instead — losing the
        // inward margin beats losing the anchor.
        BinaryMask core_base = erode(body, 1);
        if (4 * core_base.count() < body.count()) core_base = body;
        trace.seeds = build_seeds(core_base, fat_base, trace.ln_mask, cfg.opening_radius,
                                  &trace.seed_fallback_unopened);
        if (trace.seed_fallback_unopened)
            trace.notes.push_back("core seed opening removed everything; using unopened region");
    });

    staged("ngc_refine", [&] {
        NgcProblem prob;
        prob.vol = &vol_d;
        prob.threshold.resize(static_cast<std::size_t>(depth_len));
        prob.slope.resize(static_cast<std::size_t>(depth_len));
        for (int d = 0; d < depth_len; ++d) {
            prob.threshold[static_cast<std::size_t>(d)] =
                trace.profile_r2.mu_lnp[static_cast<std::size_t>(d)] -
                trace.profile_r2.sigma_lnp[static_cast<std::size_t>(d)];
            prob.slope[static_cast<std::size_t>(d)] =
                trace.profile_r2.sigma_lnp[static_cast<std::size_t>(d)] / 2.0;
        }
        prob.seeds = &trace.seeds;
        prob.votes = &trace.votes;
        prob.vote_domain = &trace.ln_mask;
        trace.refined_labels = refine_with_votes(prob);
    });

    staged("upsample", [&] {
        result.labels =
            upsample_labels(trace.refined_labels, trace.downsample_factor, vol.dims, vol.spacing);
    });

    const std::chrono::duration<double> total = std::chrono::steady_clock::now() - run_start;
    trace.runtime_seconds = total.count();
    return result;
}

}  // namespace nestcut
