#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nestcut/grid.hpp"

namespace nestcut {

enum class Label : std::uint8_t { Pbs = 0, Fat = 1, Lnp = 2 };

// Scalar amplitude volume, x-fastest storage. depth_axis marks the acoustic
// depth direction (0=x, 1=y, 2=z): attenuation and per-depth statistics run
// along it.
struct IntensityVolume {
    Dims3 dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int depth_axis = 1;
    std::vector<float> data;

    std::int64_t size() const { return voxel_count(dims); }
    float& at(int x, int y, int z) { return data[linear_index(dims, x, y, z)]; }
    float at(int x, int y, int z) const { return data[linear_index(dims, x, y, z)]; }
};

struct LabelVolume {
    Dims3 dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int depth_axis = 1;
    std::vector<std::uint8_t> data;

    std::int64_t size() const { return voxel_count(dims); }
    Label at(int x, int y, int z) const {
        return static_cast<Label>(data[linear_index(dims, x, y, z)]);
    }
    void set(int x, int y, int z, Label l) {
        data[linear_index(dims, x, y, z)] = static_cast<std::uint8_t>(l);
    }
};

struct BinaryMask {
    Dims3 dims{0, 0, 0};
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    explicit BinaryMask(Dims3 d) : dims(d), data(static_cast<std::size_t>(voxel_count(d)), 0) {}

    std::int64_t size() const { return voxel_count(dims); }
    bool at(int x, int y, int z) const { return data[linear_index(dims, x, y, z)] != 0; }
    void set(int x, int y, int z, bool v) {
        data[linear_index(dims, x, y, z)] = v ? 1 : 0;
    }
    std::int64_t count() const;
};

struct ComponentLabels {
    Dims3 dims{0, 0, 0};
    std::vector<std::int32_t> label;  // -1 for background voxels
    std::vector<std::int64_t> sizes;  // indexed by component id
    int count() const { return static_cast<int>(sizes.size()); }
};

struct SegReport {
    std::array<double, 3> dice{0.0, 0.0, 0.0};  // indexed by Label value
    bool nested = false;  // no core voxel 6-adjacent to a bath voxel
};

// ---- file I/O (NCVOL container, see README for the exact header grammar) ----
IntensityVolume read_volume(const std::string& path);
void write_volume(const std::string& path, const IntensityVolume& vol);
LabelVolume read_labels(const std::string& path);
void write_labels(const std::string& path, const LabelVolume& labels);

// ---- resampling ----
// Block mean over factor^3 cells; ragged border blocks average the voxels
// that exist. Output dims are ceil(n/factor), spacing is scaled by factor.
IntensityVolume downsample(const IntensityVolume& vol, int factor);
// Nearest-neighbor inverse of downsample back onto full_dims.
LabelVolume upsample_labels(const LabelVolume& coarse, int factor, Dims3 full_dims,
                            std::array<double, 3> full_spacing);

// ---- overlap metrics ----
double dice(const BinaryMask& a, const BinaryMask& b);  // errors if both empty
SegReport seg_report(const LabelVolume& predicted, const LabelVolume& truth);

// ---- geometry ----
// Exact Euclidean distance (unit voxel spacing) to the nearest voxel outside
// the mask; the volume border counts as outside.
std::vector<double> distance_transform(const BinaryMask& mask);

// Morphology with a Euclidean ball structuring element of integer radius r
// (voxel offsets with dx^2+dy^2+dz^2 <= r^2), computed through distance
// transforms so results are exact for any radius.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask open(const BinaryMask& mask, int radius);

ComponentLabels connected_components(const BinaryMask& mask, int connectivity);

// Fill cavities: background components (6-connectivity) not reachable from
// the volume border become foreground.
BinaryMask fill_holes(const BinaryMask& mask);

// Voxelized convex hull of the mask's voxel centers (exact integer predicates).
BinaryMask convex_hull_mask(const BinaryMask& mask);

// Shared variance guard: local/region standard deviations are floored at
// 1e-3 times the volume's maximum amplitude so flat regions cannot produce
// infinite energies.
double sigma_floor(const IntensityVolume& vol);

}  // namespace nestcut
