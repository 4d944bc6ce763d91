#include "nestcut/render.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace nestcut {

namespace {

struct SliceFrame {
    int width, height;
    // maps (row, col) to voxel coordinates
    int ax_col, ax_row, ax_fixed;
};

SliceFrame slice_frame(const Dims3& dims, int axis, int index) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("slice axis must be 0, 1 or 2");
    if (index < 0 || index >= dims[axis]) throw std::out_of_range("slice index out of range");
    SliceFrame f{};
    f.ax_fixed = axis;
    if (axis == 2) { f.ax_col = 0; f.ax_row = 1; }
    else if (axis == 1) { f.ax_col = 0; f.ax_row = 2; }
    else { f.ax_col = 1; f.ax_row = 2; }
    f.width = dims[f.ax_col];
    f.height = dims[f.ax_row];
    return f;
}

std::int64_t frame_index(const Dims3& dims, const SliceFrame& f, int index, int row, int col) {
    int c[3];
    c[f.ax_fixed] = index;
    c[f.ax_col] = col;
    c[f.ax_row] = row;
    return linear_index(dims, c[0], c[1], c[2]);
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
    push_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + start, static_cast<uInt>(4 + data.size()));
    push_be32(out, crc);
}

}  // namespace

RgbImage render_labels_slice(const LabelVolume& labels, int axis, int index) {
    const SliceFrame f = slice_frame(labels.dims, axis, index);
    static const std::uint8_t palette[3][3] = {{0, 0, 0}, {230, 105, 180}, {255, 255, 255}};
    RgbImage img;
    img.width = f.width;
    img.height = f.height;
    img.pixels.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const std::uint8_t l =
                labels.data[static_cast<std::size_t>(frame_index(labels.dims, f, index, r, c))];
            if (l > 2) throw std::invalid_argument("label volume contains codes above 2");
            const std::size_t o = (static_cast<std::size_t>(r) * f.width + c) * 3;
            img.pixels[o] = palette[l][0];
            img.pixels[o + 1] = palette[l][1];
            img.pixels[o + 2] = palette[l][2];
        }
    return img;
}

RgbImage render_intensity_slice(const IntensityVolume& vol, int axis, int index) {
    const SliceFrame f = slice_frame(vol.dims, axis, index);
    float lo = 0.0f, hi = 0.0f;
    bool first = true;
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const float v =
                vol.data[static_cast<std::size_t>(frame_index(vol.dims, f, index, r, c))];
            if (first) { lo = hi = v; first = false; }
            else { lo = std::min(lo, v); hi = std::max(hi, v); }
        }
    const float span = hi - lo;
    RgbImage img;
    img.width = f.width;
    img.height = f.height;
    img.pixels.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const float v =
                vol.data[static_cast<std::size_t>(frame_index(vol.dims, f, index, r, c))];
            const int g = span > 0.0f
                              ? static_cast<int>((v - lo) / span * 255.0f + 0.5f)
                              : 0;
            const std::uint8_t b = static_cast<std::uint8_t>(std::min(std::max(g, 0), 255));
            const std::size_t o = (static_cast<std::size_t>(r) * f.width + c) * 3;
            img.pixels[o] = img.pixels[o + 1] = img.pixels[o + 2] = b;
        }
    return img;
}

void write_png(const std::string& path, const RgbImage& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw std::invalid_argument("write_png: inconsistent image buffer");

    // raw scanlines with per-row filter byte 0
    const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * image.height);
    for (int r = 0; r < image.height; ++r) {
        raw[(stride + 1) * r] = 0;
        std::memcpy(raw.data() + (stride + 1) * r + 1, image.pixels.data() + stride * r, stride);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(bound);
    if (compress2(packed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("write_png: deflate failed");
    packed.resize(bound);

    std::vector<std::uint8_t> out;
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.insert(out.end(), sig, sig + 8);
    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(image.width));
    push_be32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", packed);
    push_chunk(out, "IEND", {});

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);
    const std::size_t written = std::fwrite(out.data(), 1, out.size(), fp);
    std::fclose(fp);
    if (written != out.size()) throw std::runtime_error("write_png: short write to " + path);
}

}  // namespace nestcut
