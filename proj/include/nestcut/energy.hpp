#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "nestcut/grid.hpp"
#include "nestcut/profiles.hpp"
#include "nestcut/volume.hpp"

namespace nestcut {

inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct NeighborhoodSpec {
    int connectivity = 6;   // 6, 18 or 26
    int region_length = 4;  // voxels per directional stats region, >= 1
    int region_width = 0;   // lateral half-width, axis directions only
    bool distance_weighting = false;  // weight region voxels by distance from the pair edge
};

// Directional local statistics: for voxel p and direction d, the mean and
// stddev of the in-mask intensities {p, p+d, ..., p+(r-1)d} (widened
// perpendicular to axis directions when region_width > 0). The region starts
// at p itself, so it is never empty for an in-mask voxel. Weights are
// uniform, or linear in the distance from the edge (voxel j of the segment
// gets weight j+1) when distance_weighting is set. stddev is floored.
struct LocalStats {
    Dims3 dims{0, 0, 0};
    NeighborhoodSpec spec;
    std::vector<Offset3> directions;         // connectivity_offsets(spec.connectivity)
    std::vector<std::vector<double>> mean;   // [direction][voxel]
    std::vector<std::vector<double>> stddev;

    int direction_index(const Offset3& d) const;
};

LocalStats local_stats(const IntensityVolume& vol, const BinaryMask& mask,
                       const NeighborhoodSpec& spec);

// Pair cost table for the bright/dark split of neighbors p and q, driven by
// each voxel's deviation from the other side's local statistics. Same-label
// costs use the raw region means; different-label costs shift the reference
// mean by k stddevs toward the labels' expected contrast. st is the cost of
// p bright / q dark, ts the reverse.
struct LaeCosts {
    double ss, st, ts, tt;
};
LaeCosts lae_pair_costs(double ip, double iq, double mu_p, double sigma_p, double mu_q,
                        double sigma_q, double k);

// Depth-profile anchor term. Returns {cost of labeling bright, cost of
// labeling dark} for one voxel: sigmoids around the core and shell profile
// means at the voxel's depth, with slope (mu_fat - mu_lnp) / 8.
std::pair<double, double> global_term(double intensity, double mu_lnp, double mu_fat,
                                      double alpha);

struct GlobalTerm {
    DepthProfile profile;
    std::optional<double> alpha;  // empty: 5 * (pair count / voxel count)
};

// Two-region cut inside the working mask; returns the bright (shell) side.
// stats may be precomputed (they do not depend on k); pass nullptr to
// compute them here.
BinaryMask run_gclae(const IntensityVolume& vol, const BinaryMask& mask,
                     const NeighborhoodSpec& spec, double k, const LocalStats* stats = nullptr,
                     const GlobalTerm* global = nullptr);

}  // namespace nestcut
