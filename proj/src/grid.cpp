#include "nestcut/grid.hpp"

#include <cstdlib>
#include <stdexcept>

namespace nestcut {

std::vector<Offset3> connectivity_offsets(int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw std::invalid_argument("connectivity must be 6, 18 or 26");
    std::vector<Offset3> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nz = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (nz == 0) continue;
                if (connectivity == 6 && nz > 1) continue;
                if (connectivity == 18 && nz > 2) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

std::vector<Offset3> half_connectivity_offsets(int connectivity) {
    std::vector<Offset3> out;
    for (const Offset3& o : connectivity_offsets(connectivity)) {
        if (o.dz > 0 || (o.dz == 0 && (o.dy > 0 || (o.dy == 0 && o.dx > 0))))
            out.push_back(o);
    }
    return out;
}

}  // namespace nestcut
