#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace nestcut {

using Dims3 = std::array<int, 3>;

struct Offset3 {
    int dx = 0, dy = 0, dz = 0;
};

inline bool operator==(const Offset3& a, const Offset3& b) {
    return a.dx == b.dx && a.dy == b.dy && a.dz == b.dz;
}

inline Offset3 operator-(const Offset3& o) { return {-o.dx, -o.dy, -o.dz}; }

inline std::int64_t voxel_count(const Dims3& d) {
    return static_cast<std::int64_t>(d[0]) * d[1] * d[2];
}

// Linear index, x-fastest.
inline std::int64_t linear_index(const Dims3& d, int x, int y, int z) {
    return static_cast<std::int64_t>(z) * d[1] * d[0] + static_cast<std::int64_t>(y) * d[0] + x;
}

inline bool in_bounds(const Dims3& d, int x, int y, int z) {
    return x >= 0 && x < d[0] && y >= 0 && y < d[1] && z >= 0 && z < d[2];
}

// Neighbor offsets for 6/18/26-connectivity. "Half" variants enumerate each
// unordered pair once; the half offset is the lexicographically positive one
// in (z, y, x) order, so raster iteration over voxels plus half offsets
// visits pairs in a fixed deterministic order.
std::vector<Offset3> connectivity_offsets(int connectivity);
std::vector<Offset3> half_connectivity_offsets(int connectivity);

}  // namespace nestcut
