#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nestcut/volume.hpp"

namespace nestcut {

struct RgbImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB8
};

// Slice extraction: axis 2 -> rows y / cols x, axis 1 -> rows z / cols x,
// axis 0 -> rows z / cols y. Labels use the fixed palette bath=black,
// shell=pink (230,105,180), core=white; intensities are min-max normalized
// over the slice (a constant slice renders black).
RgbImage render_labels_slice(const LabelVolume& labels, int axis, int index);
RgbImage render_intensity_slice(const IntensityVolume& vol, int axis, int index);

void write_png(const std::string& path, const RgbImage& image);

}  // namespace nestcut
