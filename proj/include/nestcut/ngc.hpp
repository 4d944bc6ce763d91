#pragma once

#include <cstdint>
#include <vector>

#include "nestcut/volume.hpp"

namespace nestcut {

// Per-voxel data costs for the three nested classes, driven by a per-depth
// amplitude threshold and sigmoid slope: z = (I - threshold) / slope,
// pbs = logistic(z), fat = logistic(-z), lnp = min(pbs, fat). The core cost
// equals min(1, e^z) / (1 + e^z) -- cheap wherever the voxel is NOT
// confidently shell-bright, which lets the core claim dark interior voxels
// the smoothness term would otherwise assign to the bath.
struct NgcDataCost {
    double pbs, fat, lnp;
};
NgcDataCost ngc_data_costs(double intensity, double threshold, double slope);

struct SeedSet {
    BinaryMask fat, lnp;  // hard constraints; must be disjoint
};

// One nested-cut instance. Non-owning pointers; null means "not used".
// threshold/slope hold one value per depth slice (vol dims along depth_axis).
// Each layer's smoothness is a Potts term over the 18-neighborhood whose
// edges are weighted by inverse length, so it approximates the boundary area
// of the region. votes, when present, carry 0..3 shell votes per voxel inside
// vote_domain and replace the weighted core-layer smoothness with literal
// 1/4/inf transition costs. hull_mask forbids core outside it; when absent,
// ngc_segment derives one itself: first the convex hull of the largest
// above-threshold component, then the hull of the foreground each solve
// produces, iterated until the labeling stops changing. Core seed voxels are
// always folded into the derived region so a seed can never fall outside it.
struct NgcProblem {
    const IntensityVolume* vol = nullptr;
    std::vector<double> threshold;
    std::vector<double> slope;
    double alpha_mask = 1.0;
    double alpha_lnp = 1.0;
    const BinaryMask* hull_mask = nullptr;
    const SeedSet* seeds = nullptr;
    const std::vector<std::uint8_t>* votes = nullptr;
    const BinaryMask* vote_domain = nullptr;
};

LabelVolume ngc_segment(const NgcProblem& prob);

// Seeded, vote-guided rerun of the nested cut (the problem must carry seeds,
// votes and vote_domain).
LabelVolume refine_with_votes(const NgcProblem& prob);

// Foreground (shell+core) cleanup: largest 26-connected component with its
// cavities filled. Errors when there is no foreground at all.
BinaryMask extract_ln_mask(const LabelVolume& labels);

// Transition cost between core-layer neighbors when shell votes are present:
// cutting "a stays core, b leaves" costs 1 when b out-votes a toward shell,
// 4 on a tie, and is forbidden when the votes point the other way. Voxels
// outside the vote domain count as one vote more shell-like than their
// in-domain neighbor; two outside voxels tie.
double vote_transition_cost(int votes_core_side, int votes_shell_side);

}  // namespace nestcut
