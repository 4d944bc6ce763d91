#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "nestcut/volume.hpp"

// Voxelized convex hull. All geometric predicates are exact 64-bit integer
// arithmetic on voxel coordinates, so the rasterized hull is bit-stable and
// never depends on floating-point rounding. Coordinates are bounded well
// below 2^15, which keeps triple products inside int64.

namespace nestcut {

namespace {

struct P3 {
    std::int64_t x, y, z;
    bool operator==(const P3&) const = default;
};

P3 sub(const P3& a, const P3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

P3 cross(const P3& a, const P3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

std::int64_t dot(const P3& a, const P3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Positive when d lies on the outer side of the plane (a,b,c) wound CCW.
std::int64_t orient(const P3& a, const P3& b, const P3& c, const P3& d) {
    return dot(cross(sub(b, a), sub(c, a)), sub(d, a));
}

std::int64_t floordiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t ceildiv(std::int64_t a, std::int64_t b) { return -floordiv(-a, b); }

struct Face {
    int v[3];
    std::vector<int> pts;  // candidate points outside this face
    bool alive = true;
};

// Half-space n.q <= c.
struct Plane {
    P3 n;
    std::int64_t c;
};

BinaryMask rasterize_planes(Dims3 dims, const std::vector<Plane>& planes, const P3& lo,
                            const P3& hi) {
    BinaryMask out(dims);
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y) {
            if (z < lo.z || z > hi.z || y < lo.y || y > hi.y) continue;
            std::int64_t xlo = lo.x, xhi = hi.x;
            for (const Plane& pl : planes) {
                const std::int64_t rhs = pl.c - pl.n.y * y - pl.n.z * z;
                if (pl.n.x > 0)
                    xhi = std::min(xhi, floordiv(rhs, pl.n.x));
                else if (pl.n.x < 0)
                    xlo = std::max(xlo, ceildiv(rhs, pl.n.x));
                else if (rhs < 0) {
                    xlo = 1;
                    xhi = 0;
                }
                if (xlo > xhi) break;
            }
            for (std::int64_t x = xlo; x <= xhi; ++x)
                out.set(static_cast<int>(x), y, z, true);
        }
    return out;
}

BinaryMask rasterize_segment(Dims3 dims, const P3& a, const P3& b) {
    BinaryMask out(dims);
    const P3 d = sub(b, a);
    const std::int64_t len2 = dot(d, d);
    const P3 lo{std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
    const P3 hi{std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
    for (std::int64_t z = lo.z; z <= hi.z; ++z)
        for (std::int64_t y = lo.y; y <= hi.y; ++y)
            for (std::int64_t x = lo.x; x <= hi.x; ++x) {
                const P3 q{x, y, z};
                const P3 aq = sub(q, a);
                const P3 cr = cross(d, aq);
                if (cr.x != 0 || cr.y != 0 || cr.z != 0) continue;
                const std::int64_t t = dot(aq, d);
                if (t < 0 || t > len2) continue;
                out.set(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z), true);
            }
    return out;
}

// 2D monotone chain on exact integer coordinates; returns CCW hull.
std::vector<std::array<std::int64_t, 2>> hull_2d(std::vector<std::array<std::int64_t, 2>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    auto cr = [](const auto& o, const auto& a, const auto& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::array<std::int64_t, 2>> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cr(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cr(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

BinaryMask rasterize_planar(Dims3 dims, const std::vector<P3>& pts, const P3& n, const P3& lo,
                            const P3& hi) {
    // project out the dominant normal axis, build the 2D hull there
    int drop = 0;
    std::int64_t best = std::abs(n.x);
    if (std::abs(n.y) > best) { drop = 1; best = std::abs(n.y); }
    if (std::abs(n.z) > best) drop = 2;
    auto proj = [&](const P3& p) -> std::array<std::int64_t, 2> {
        if (drop == 0) return {p.y, p.z};
        if (drop == 1) return {p.x, p.z};
        return {p.x, p.y};
    };
    std::vector<std::array<std::int64_t, 2>> flat;
    flat.reserve(pts.size());
    for (const P3& p : pts) flat.push_back(proj(p));
    const auto poly = hull_2d(std::move(flat));
    const std::int64_t plane_c = dot(n, pts[0]);

    BinaryMask out(dims);
    for (std::int64_t z = lo.z; z <= hi.z; ++z)
        for (std::int64_t y = lo.y; y <= hi.y; ++y)
            for (std::int64_t x = lo.x; x <= hi.x; ++x) {
                const P3 q{x, y, z};
                if (dot(n, q) != plane_c) continue;
                const auto f = proj(q);
                bool pos = false, neg = false;
                for (std::size_t i = 0; i < poly.size(); ++i) {
                    const auto& a = poly[i];
                    const auto& b = poly[(i + 1) % poly.size()];
                    const std::int64_t c =
                        (b[0] - a[0]) * (f[1] - a[1]) - (b[1] - a[1]) * (f[0] - a[0]);
                    pos |= c > 0;
                    neg |= c < 0;
                }
                if (pos && neg) continue;  // outside the polygon
                out.set(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z), true);
            }
    return out;
}

}  // namespace

BinaryMask convex_hull_mask(const BinaryMask& mask) {
    const Dims3 dims = mask.dims;
    for (int i = 0; i < 3; ++i)
        if (dims[i] > 20000) throw std::invalid_argument("hull: dims too large for exact predicates");

    // x-extreme voxels per (y,z) row are enough: no other voxel can be a
    // hull vertex, and the hull of the reduced set is identical.
    std::vector<P3> pts;
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y) {
            int xmin = -1, xmax = -1;
            for (int x = 0; x < dims[0]; ++x)
                if (mask.at(x, y, z)) {
                    if (xmin < 0) xmin = x;
                    xmax = x;
                }
            if (xmin < 0) continue;
            pts.push_back({xmin, y, z});
            if (xmax != xmin) pts.push_back({xmax, y, z});
        }
    if (pts.empty()) return BinaryMask(dims);

    P3 lo = pts[0], hi = pts[0];
    for (const P3& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }

    // dimensionality ladder: point / segment / planar polygon / polytope
    std::size_t i1 = 1;
    while (i1 < pts.size() && pts[i1] == pts[0]) ++i1;
    if (i1 == pts.size()) {
        BinaryMask out(dims);
        out.set(static_cast<int>(pts[0].x), static_cast<int>(pts[0].y),
                static_cast<int>(pts[0].z), true);
        return out;
    }

    const P3 dir = sub(pts[i1], pts[0]);
    std::size_t i2 = pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const P3 c = cross(dir, sub(pts[i], pts[0]));
        if (c.x != 0 || c.y != 0 || c.z != 0) {
            i2 = i;
            break;
        }
    }
    if (i2 == pts.size()) {
        // collinear: rasterize the extreme segment
        std::size_t ia = 0, ib = 0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (dot(dir, sub(pts[i], pts[ia])) < 0) ia = i;
            if (dot(dir, sub(pts[i], pts[ib])) > 0) ib = i;
        }
        return rasterize_segment(dims, pts[ia], pts[ib]);
    }

    const P3 nrm = cross(dir, sub(pts[i2], pts[0]));
    std::size_t i3 = pts.size();
    std::int64_t best_vol = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::int64_t v = orient(pts[0], pts[i1], pts[i2], pts[i]);
        if (std::abs(v) > std::abs(best_vol)) {
            best_vol = v;
            i3 = i;
        }
    }
    if (i3 == pts.size()) return rasterize_planar(dims, pts, nrm, lo, hi);

    // quickhull from the initial tetrahedron
    int a = 0, b = static_cast<int>(i1), c = static_cast<int>(i2), d = static_cast<int>(i3);
    if (best_vol > 0) std::swap(b, c);  // make orient(a,b,c,d) < 0: d inside face (a,b,c)

    std::vector<Face> faces;
    auto add_face = [&](int u, int v, int w) {
        faces.push_back(Face{{u, v, w}, {}, true});
        return static_cast<int>(faces.size() - 1);
    };
    add_face(a, b, c);
    add_face(a, c, d);
    add_face(a, d, b);
    add_face(b, d, c);

    auto outside_val = [&](const Face& f, int p) {
        return orient(pts[static_cast<std::size_t>(f.v[0])], pts[static_cast<std::size_t>(f.v[1])],
                      pts[static_cast<std::size_t>(f.v[2])], pts[static_cast<std::size_t>(p)]);
    };

    for (int p = 0; p < static_cast<int>(pts.size()); ++p) {
        for (Face& f : faces)
            if (outside_val(f, p) > 0) {
                f.pts.push_back(p);
                break;
            }
    }

    for (;;) {
        int fi = -1;
        for (int i = 0; i < static_cast<int>(faces.size()); ++i)
            if (faces[static_cast<std::size_t>(i)].alive &&
                !faces[static_cast<std::size_t>(i)].pts.empty()) {
                fi = i;
                break;
            }
        if (fi < 0) break;

        // furthest conflict point of that face (ties by lowest index)
        const Face& f0 = faces[static_cast<std::size_t>(fi)];
        int apex = f0.pts[0];
        std::int64_t apex_val = outside_val(f0, apex);
        for (int p : f0.pts) {
            const std::int64_t v = outside_val(f0, p);
            if (v > apex_val || (v == apex_val && p < apex)) {
                apex = p;
                apex_val = v;
            }
        }

        std::vector<int> visible;
        for (int i = 0; i < static_cast<int>(faces.size()); ++i)
            if (faces[static_cast<std::size_t>(i)].alive &&
                outside_val(faces[static_cast<std::size_t>(i)], apex) > 0)
                visible.push_back(i);

        auto key = [](int u, int v) {
            return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
                   static_cast<std::uint32_t>(v);
        };
        std::unordered_set<std::uint64_t> vis_edges;
        std::vector<int> orphan;
        for (int i : visible) {
            Face& f = faces[static_cast<std::size_t>(i)];
            for (int e = 0; e < 3; ++e) vis_edges.insert(key(f.v[e], f.v[(e + 1) % 3]));
            orphan.insert(orphan.end(), f.pts.begin(), f.pts.end());
            f.pts.clear();
            f.alive = false;
        }

        std::vector<int> fresh;
        for (int i : visible) {
            // copy the triple first: add_face may reallocate `faces`
            const int fv[3] = {faces[static_cast<std::size_t>(i)].v[0],
                               faces[static_cast<std::size_t>(i)].v[1],
                               faces[static_cast<std::size_t>(i)].v[2]};
            for (int e = 0; e < 3; ++e) {
                const int u = fv[e], v = fv[(e + 1) % 3];
                if (vis_edges.count(key(v, u))) continue;  // interior edge
                fresh.push_back(add_face(u, v, apex));
            }
        }

        for (int p : orphan) {
            if (p == apex) continue;
            for (int i : fresh) {
                Face& f = faces[static_cast<std::size_t>(i)];
                if (outside_val(f, p) > 0) {
                    f.pts.push_back(p);
                    break;
                }
            }
        }
    }

    std::vector<Plane> planes;
    for (const Face& f : faces) {
        if (!f.alive) continue;
        const P3& pa = pts[static_cast<std::size_t>(f.v[0])];
        const P3& pb = pts[static_cast<std::size_t>(f.v[1])];
        const P3& pc = pts[static_cast<std::size_t>(f.v[2])];
        const P3 n = cross(sub(pb, pa), sub(pc, pa));
        planes.push_back({n, dot(n, pa)});
    }
    return rasterize_planes(dims, planes, lo, hi);
}

}  // namespace nestcut
