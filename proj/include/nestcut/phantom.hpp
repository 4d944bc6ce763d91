#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nestcut/volume.hpp"

namespace nestcut {

// Synthetic particle-in-bath volume: a dark core ellipsoid wrapped in a
// bright shell of constant thickness, immersed in a dim bath, with optional
// imaging degradations. Amplitude at a voxel is
//   base(label, blurred) * exp(-attenuation * overlying_tissue)
//     * (1 + lateral_gradient * (x/nx - 1/2)) * speckle
// where overlying_tissue counts non-bath voxels strictly above the voxel
// along the depth axis. Labels stay sharp even when the amplitude is
// blurred.
struct PhantomSpec {
    Dims3 dims{64, 64, 64};
    std::array<double, 3> spacing{25.0, 25.0, 25.0};
    int depth_axis = 1;
    std::array<double, 3> center{32.0, 32.0, 32.0};
    std::array<double, 3> core_semi{16.0, 14.0, 15.0};  // core ellipsoid semi-axes (voxels)
    double shell_thickness = 5.0;                       // added to each semi-axis
    double base_pbs = 5.0;
    double base_fat = 80.0;
    double base_lnp = 40.0;
    double attenuation = 0.0;       // per overlying tissue voxel
    double lateral_gradient = 0.0;  // in [-1, 1]
    bool speckle = true;
    double blur_sigma = 0.0;        // on the base amplitude field only
    std::uint64_t seed = 0;
};

struct Phantom {
    IntensityVolume vol;
    LabelVolume truth;
};

Phantom generate_phantom(const PhantomSpec& spec);

// Named degradation classes with randomized geometry: clean speckled, depth
// attenuation with lateral gain, blurred low contrast, blurred high
// contrast. One spec per class per call.
struct Scenario {
    std::string name;
    PhantomSpec spec;
};
std::vector<Scenario> scenario_suite(std::uint64_t seed);

}  // namespace nestcut
