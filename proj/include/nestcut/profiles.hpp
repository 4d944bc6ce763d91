#pragma once

#include <cstdint>
#include <vector>

#include "nestcut/rng.hpp"
#include "nestcut/volume.hpp"

namespace nestcut {

// Bath amplitude model fitted by repeated weighted sampling: dark voxels are
// drawn with probability proportional to (global mean - intensity), the
// sampling whose 3-sigma inlier set is largest wins, and mean/stddev come
// from that inlier set.
struct PbsModel {
    double mean = 0.0;
    double stddev = 0.0;  // floored, always > 0

    double threshold() const { return mean + 3.0 * stddev; }
    double slope() const { return stddev / 2.0; }
};

struct PbsParams {
    int samplings = 5;
    double sample_fraction = 0.2;
    double inlier_sigmas = 3.0;
};

PbsModel estimate_pbs(const IntensityVolume& vol, Rng& rng, const PbsParams& params = {});

// Raw per-depth class statistics; depths with fewer than min_count voxels of
// the class are omitted and later filled by the smoothing fit.
struct DepthSample {
    int depth = 0;
    double mean = 0.0;
    double stddev = 0.0;
    std::int64_t count = 0;
};

struct DepthStats {
    std::vector<DepthSample> lnp, fat;
};

DepthStats depth_stats(const IntensityVolume& vol, const BinaryMask& fat_mask,
                       const BinaryMask& lnp_mask, std::int64_t min_count = 10);

// Smoothed per-depth curves covering every slice of the volume. Invariant
// after fitting: sigma >= the shared variance floor and
// mu_fat(d) >= mu_lnp(d) + epsilon at every depth.
struct DepthProfile {
    std::vector<double> mu_lnp, sigma_lnp, mu_fat, sigma_fat;

    int depth_extent() const { return static_cast<int>(mu_lnp.size()); }
};

struct ProfileFitParams {
    int knot_spacing = 8;      // depth slices per spline segment
    int ransac_iters = 25;
    double sample_fraction = 0.6;
    double inlier_band = 2.0;  // multiples of each row's standard error
};

// Least-squares cubic B-spline per series with outlier-resistant row
// selection, flat extrapolation outside the observed depth range. rng is
// consumed in a fixed order: core mean, core stddev, shell mean, shell
// stddev.
DepthProfile fit_profile(const DepthStats& stats, const IntensityVolume& vol, Rng& rng,
                         const ProfileFitParams& params = {});

}  // namespace nestcut
