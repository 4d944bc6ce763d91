#pragma once

// Serial, deliberately naive counterparts of the production kernels. These
// trade speed for obviousness: direct definitions with no decomposition
// tricks, no OpenMP, no shared code paths with the optimized versions.
// Tests compare the two implementations; the benchmark target measures the
// gap. Keep this code boring.

#include <cstdint>
#include <optional>
#include <vector>

#include "nestcut/energy.hpp"
#include "nestcut/maxflow.hpp"
#include "nestcut/ngc.hpp"
#include "nestcut/volume.hpp"

namespace nestcut::reference {

// Squared Euclidean distance to the nearest voxel outside the mask (volume
// border counts as outside), by scanning every outside voxel.
std::vector<double> brute_force_sq_distance(const BinaryMask& mask);

BinaryMask naive_erode(const BinaryMask& mask, int radius);
BinaryMask naive_dilate(const BinaryMask& mask, int radius);

ComponentLabels flood_fill_components(const BinaryMask& mask, int connectivity);

// Caratheodory membership: q is inside the hull of pts iff some subset of at
// most 4 points spans a simplex containing it. Exact integer arithmetic.
// O(n^4), intended for small point sets only.
struct IPoint {
    std::int64_t x, y, z;
};
bool hull_contains(const std::vector<IPoint>& pts, const IPoint& q);

IntensityVolume serial_downsample(const IntensityVolume& vol, int factor);

LocalStats serial_local_stats(const IntensityVolume& vol, const BinaryMask& mask,
                              const NeighborhoodSpec& spec);

// Minimum s-t cut by brute force over all 2^n side assignments.
double enumerate_min_cut(const FlowGraph& g, std::vector<CutSide>* best_side = nullptr);

// Direct value of the two-region energy a labeling incurs (foreground =
// bright shell), summing unary terms and pair costs straight from the
// definitions. Independent of any graph construction.
double lae_energy(const IntensityVolume& vol, const BinaryMask& mask, const LocalStats& stats,
                  double k, const GlobalTerm* global, const BinaryMask& labeling);
double lae_exhaustive_min(const IntensityVolume& vol, const BinaryMask& mask,
                          const LocalStats& stats, double k, const GlobalTerm* global,
                          BinaryMask* best = nullptr);

// Same idea for the nested three-label model: direct energy of a labeling
// and exhaustive minimization over all 3^n labelings.
double ngc_energy(const NgcProblem& prob, const LabelVolume& labeling);
double ngc_exhaustive_min(const NgcProblem& prob, LabelVolume* best = nullptr);

}  // namespace nestcut::reference
