#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nestcut/energy.hpp"
#include "nestcut/ngc.hpp"
#include "nestcut/profiles.hpp"
#include "nestcut/volume.hpp"

namespace nestcut {

struct PipelineConfig {
    std::vector<double> k_grid{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    int max_selected_k = 3;
    double fat_ratio_max = 0.32;
    double inner_mask_frac = 0.70;
    NeighborhoodSpec neighborhood;          // shell/core cut neighborhood
    std::optional<double> alpha;            // depth-anchor weight; empty = automatic
    std::uint64_t rng_seed = 0;
    int downsample_factor = 0;              // 0 = choose automatically
    int opening_radius = 2;

    void validate() const;
};

// Parse a JSON config document; every key optional, unknown keys rejected.
PipelineConfig parse_config(const std::string& json_text);

// Smallest factor whose block-mean downsampling brings every dimension
// under 100.
int choose_downsample_factor(const Dims3& dims);

// Thrown by segment() with the failing stage's name attached.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& message)
        : std::runtime_error(message), stage(std::move(stage_name)) {}
};

struct PipelineTrace {
    int downsample_factor = 1;
    Dims3 working_dims{0, 0, 0};
    PbsModel pbs;
    LabelVolume initial_labels;         // first nested cut, working resolution
    BinaryMask ln_mask;
    std::vector<double> swept_k;        // the full grid, ascending
    std::vector<BinaryMask> fat_by_k;   // shell side per swept k
    std::vector<double> fat_ratios;     // inner-mask shell ratio per swept k
    std::vector<double> selected_k;     // ascending, 1..max_selected_k values
    BinaryMask confident_fat_r1, confident_lnp_r1;
    DepthProfile profile_r1;
    std::vector<BinaryMask> fat_by_k_r2;  // per selected k, with depth anchors
    BinaryMask confident_fat_r2, confident_lnp_r2;
    std::vector<std::uint8_t> votes;    // shell votes per working voxel, 0..|selected_k|
    DepthProfile profile_r2;
    SeedSet seeds;
    bool seed_fallback_unopened = false;
    LabelVolume refined_labels;         // final nested cut, working resolution
    std::vector<std::pair<std::string, double>> stage_seconds;
    double runtime_seconds = 0.0;
    std::vector<std::string> notes;
};

struct SegmentationResult {
    LabelVolume labels;  // original resolution
    PipelineTrace trace;
};

// Members of the staged flow, exposed for direct testing.
std::vector<double> select_k(const std::vector<double>& k_grid,
                             const std::vector<BinaryMask>& fat_by_k, const BinaryMask& ln_mask,
                             const PipelineConfig& cfg, std::vector<double>* ratios_out = nullptr);

struct FusedRegions {
    BinaryMask confident_fat, confident_lnp;
    std::vector<std::uint8_t> votes;
};
FusedRegions fuse_confident(const std::vector<BinaryMask>& fat_masks, const BinaryMask& ln_mask);

SeedSet build_seeds(const BinaryMask& confident_lnp, const BinaryMask& confident_fat,
                    const BinaryMask& ln_mask, int opening_radius,
                    bool* fallback_unopened = nullptr);

SegmentationResult segment(const IntensityVolume& vol, const PipelineConfig& cfg);

}  // namespace nestcut
