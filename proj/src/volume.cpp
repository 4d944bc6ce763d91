#include "nestcut/volume.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nestcut {

static_assert(std::endian::native == std::endian::little,
              "payload byte order assumes a little-endian host");

std::int64_t BinaryMask::count() const {
    return std::count(data.begin(), data.end(), std::uint8_t{1});
}

// ---------------------------------------------------------------- file I/O

namespace {

[[noreturn]] void bad_file(const std::string& path, const std::string& why) {
    throw std::runtime_error(path + ": " + why);
}

struct Header {
    Dims3 dims;
    std::array<double, 3> spacing;
    int depth_axis;
    std::string dtype;
    std::size_t payload_offset;
};

double parse_double(const std::string& tok, const std::string& path) {
    double v = 0.0;
    const char* b = tok.data();
    auto [p, ec] = std::from_chars(b, b + tok.size(), v);
    if (ec != std::errc{} || p != b + tok.size()) bad_file(path, "bad number '" + tok + "'");
    return v;
}

long parse_int(const std::string& tok, const std::string& path) {
    long v = 0;
    const char* b = tok.data();
    auto [p, ec] = std::from_chars(b, b + tok.size(), v);
    if (ec != std::errc{} || p != b + tok.size()) bad_file(path, "bad integer '" + tok + "'");
    return v;
}

Header parse_header(const std::string& blob, const std::string& path) {
    Header h{};
    std::size_t pos = 0;
    std::array<std::string, 6> lines;
    for (auto& line : lines) {
        const std::size_t nl = blob.find('\n', pos);
        if (nl == std::string::npos) bad_file(path, "truncated header");
        line = blob.substr(pos, nl - pos);
        pos = nl + 1;
    }
    h.payload_offset = pos;

    auto fields = [&](const std::string& line) {
        std::istringstream ss(line);
        std::vector<std::string> out;
        std::string t;
        while (ss >> t) out.push_back(t);
        return out;
    };

    if (lines[0] != "NCVOL 1") bad_file(path, "not an NCVOL 1 file");
    auto d = fields(lines[1]);
    if (d.size() != 4 || d[0] != "dims") bad_file(path, "bad dims line");
    for (int i = 0; i < 3; ++i) {
        long v = parse_int(d[i + 1], path);
        if (v < 1 || v > (1 << 24)) bad_file(path, "dims out of range");
        h.dims[i] = static_cast<int>(v);
    }
    auto s = fields(lines[2]);
    if (s.size() != 4 || s[0] != "spacing") bad_file(path, "bad spacing line");
    for (int i = 0; i < 3; ++i) {
        h.spacing[i] = parse_double(s[i + 1], path);
        if (!(h.spacing[i] > 0.0)) bad_file(path, "spacing must be positive");
    }
    auto a = fields(lines[3]);
    if (a.size() != 2 || a[0] != "depth_axis") bad_file(path, "bad depth_axis line");
    h.depth_axis = static_cast<int>(parse_int(a[1], path));
    if (h.depth_axis < 0 || h.depth_axis > 2) bad_file(path, "depth_axis must be 0, 1 or 2");
    auto t = fields(lines[4]);
    if (t.size() != 2 || t[0] != "dtype") bad_file(path, "bad dtype line");
    h.dtype = t[1];
    if (h.dtype != "f32le" && h.dtype != "u8") bad_file(path, "unknown dtype '" + h.dtype + "'");
    if (lines[5] != "end") bad_file(path, "missing header terminator");
    return h;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad_file(path, "cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string make_header(Dims3 dims, const std::array<double, 3>& spacing, int depth_axis,
                        const char* dtype) {
    std::string h = "NCVOL 1\n";
    h += "dims " + std::to_string(dims[0]) + ' ' + std::to_string(dims[1]) + ' ' +
         std::to_string(dims[2]) + '\n';
    h += "spacing " + format_double(spacing[0]) + ' ' + format_double(spacing[1]) + ' ' +
         format_double(spacing[2]) + '\n';
    h += "depth_axis " + std::to_string(depth_axis) + '\n';
    h += std::string("dtype ") + dtype + "\n";
    h += "end\n";
    return h;
}

void dump(const std::string& path, const std::string& header, const void* payload,
          std::size_t bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) bad_file(path, "cannot open for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
    if (!out) bad_file(path, "write failed");
}

}  // namespace

IntensityVolume read_volume(const std::string& path) {
    const std::string blob = slurp(path);
    const Header h = parse_header(blob, path);
    if (h.dtype != "f32le") bad_file(path, "expected dtype f32le, got " + h.dtype);
    IntensityVolume vol;
    vol.dims = h.dims;
    vol.spacing = h.spacing;
    vol.depth_axis = h.depth_axis;
    const std::size_t n = static_cast<std::size_t>(vol.size());
    if (blob.size() - h.payload_offset != n * 4) bad_file(path, "payload size mismatch");
    vol.data.resize(n);
    std::memcpy(vol.data.data(), blob.data() + h.payload_offset, n * 4);
    for (float v : vol.data)
        if (!std::isfinite(v) || v < 0.0f) bad_file(path, "amplitudes must be finite and >= 0");
    return vol;
}

void write_volume(const std::string& path, const IntensityVolume& vol) {
    const std::string h = make_header(vol.dims, vol.spacing, vol.depth_axis, "f32le");
    dump(path, h, vol.data.data(), vol.data.size() * 4);
}

LabelVolume read_labels(const std::string& path) {
    const std::string blob = slurp(path);
    const Header h = parse_header(blob, path);
    if (h.dtype != "u8") bad_file(path, "expected dtype u8, got " + h.dtype);
    LabelVolume lab;
    lab.dims = h.dims;
    lab.spacing = h.spacing;
    lab.depth_axis = h.depth_axis;
    const std::size_t n = static_cast<std::size_t>(lab.size());
    if (blob.size() - h.payload_offset != n) bad_file(path, "payload size mismatch");
    lab.data.assign(blob.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), blob.end());
    for (std::uint8_t v : lab.data)
        if (v > 2) bad_file(path, "labels must be 0, 1 or 2");
    return lab;
}

void write_labels(const std::string& path, const LabelVolume& labels) {
    for (std::uint8_t v : labels.data)
        if (v > 2) throw std::invalid_argument("labels must be 0, 1 or 2");
    const std::string h = make_header(labels.dims, labels.spacing, labels.depth_axis, "u8");
    dump(path, h, labels.data.data(), labels.data.size());
}

// ------------------------------------------------------------- resampling

IntensityVolume downsample(const IntensityVolume& vol, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    if (factor == 1) return vol;
    IntensityVolume out;
    for (int i = 0; i < 3; ++i) {
        out.dims[i] = (vol.dims[i] + factor - 1) / factor;
        out.spacing[i] = vol.spacing[i] * factor;
    }
    out.depth_axis = vol.depth_axis;
    out.data.resize(static_cast<std::size_t>(out.size()));
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < out.dims[2]; ++z)
        for (int y = 0; y < out.dims[1]; ++y)
            for (int x = 0; x < out.dims[0]; ++x) {
                const int x1 = std::min(vol.dims[0], (x + 1) * factor);
                const int y1 = std::min(vol.dims[1], (y + 1) * factor);
                const int z1 = std::min(vol.dims[2], (z + 1) * factor);
                double sum = 0.0;
                std::int64_t n = 0;
                for (int zz = z * factor; zz < z1; ++zz)
                    for (int yy = y * factor; yy < y1; ++yy)
                        for (int xx = x * factor; xx < x1; ++xx) {
                            sum += vol.at(xx, yy, zz);
                            ++n;
                        }
                out.at(x, y, z) = static_cast<float>(sum / static_cast<double>(n));
            }
    return out;
}

LabelVolume upsample_labels(const LabelVolume& coarse, int factor, Dims3 full_dims,
                            std::array<double, 3> full_spacing) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    for (int i = 0; i < 3; ++i)
        if ((full_dims[i] + factor - 1) / factor != coarse.dims[i])
            throw std::invalid_argument("full dims do not downsample to the coarse dims");
    LabelVolume out;
    out.dims = full_dims;
    out.spacing = full_spacing;
    out.depth_axis = coarse.depth_axis;
    out.data.resize(static_cast<std::size_t>(out.size()));
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < full_dims[2]; ++z)
        for (int y = 0; y < full_dims[1]; ++y)
            for (int x = 0; x < full_dims[0]; ++x)
                out.data[linear_index(full_dims, x, y, z)] =
                    coarse.data[linear_index(coarse.dims, x / factor, y / factor, z / factor)];
    return out;
}

// -------------------------------------------------------------- overlap

double dice(const BinaryMask& a, const BinaryMask& b) {
    if (a.dims != b.dims) throw std::invalid_argument("dice: mask dims differ");
    std::int64_t na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        na += a.data[i] != 0;
        nb += b.data[i] != 0;
        ni += (a.data[i] != 0) && (b.data[i] != 0);
    }
    if (na + nb == 0) throw std::invalid_argument("dice undefined: both masks empty");
    return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

SegReport seg_report(const LabelVolume& predicted, const LabelVolume& truth) {
    if (predicted.dims != truth.dims) throw std::invalid_argument("seg_report: dims differ");
    SegReport r;
    std::array<std::int64_t, 3> np{}, nt{}, ni{};
    for (std::size_t i = 0; i < predicted.data.size(); ++i) {
        ++np[predicted.data[i]];
        ++nt[truth.data[i]];
        if (predicted.data[i] == truth.data[i]) ++ni[predicted.data[i]];
    }
    for (int c = 0; c < 3; ++c)
        r.dice[c] = (np[c] + nt[c] == 0)
                        ? 1.0
                        : 2.0 * static_cast<double>(ni[c]) / static_cast<double>(np[c] + nt[c]);

    r.nested = true;
    const Dims3 d = predicted.dims;
    for (int z = 0; z < d[2] && r.nested; ++z)
        for (int y = 0; y < d[1] && r.nested; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (predicted.at(x, y, z) != Label::Lnp) continue;
                const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                                      {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                for (const auto& p : nb)
                    if (in_bounds(d, p[0], p[1], p[2]) &&
                        predicted.at(p[0], p[1], p[2]) == Label::Pbs) {
                        r.nested = false;
                        break;
                    }
                if (!r.nested) break;
            }
    return r;
}

// ---------------------------------------------- exact distance transforms

namespace {

constexpr double kFar = 1e30;

// Lower envelope of parabolas (x - pos[i])^2 + f[i], sampled at 0..n-1.
// Positions may include -1 and n for virtual border features.
void envelope_1d(const std::vector<int>& pos, const std::vector<double>& f, int n,
                 std::vector<double>& out, std::vector<int>& v, std::vector<double>& z) {
    const int m = static_cast<int>(pos.size());
    v.resize(static_cast<std::size_t>(m));
    z.resize(static_cast<std::size_t>(m) + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -kFar;
    z[1] = kFar;
    for (int q = 1; q < m; ++q) {
        if (f[static_cast<std::size_t>(q)] >= kFar) continue;
        double s;
        for (;;) {
            const int p = v[static_cast<std::size_t>(k)];
            s = ((f[static_cast<std::size_t>(q)] + static_cast<double>(pos[static_cast<std::size_t>(q)]) * pos[static_cast<std::size_t>(q)]) -
                 (f[static_cast<std::size_t>(p)] + static_cast<double>(pos[static_cast<std::size_t>(p)]) * pos[static_cast<std::size_t>(p)])) /
                (2.0 * (pos[static_cast<std::size_t>(q)] - pos[static_cast<std::size_t>(p)]));
            if (s > z[static_cast<std::size_t>(k)]) break;
            --k;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = kFar;
    }
    int j = 0;
    for (int x = 0; x < n; ++x) {
        while (z[static_cast<std::size_t>(j) + 1] < x) ++j;
        const int p = v[static_cast<std::size_t>(j)];
        const double dx = x - pos[static_cast<std::size_t>(p)];
        out[static_cast<std::size_t>(x)] = dx * dx + f[static_cast<std::size_t>(p)];
    }
}

// Squared Euclidean distance to the nearest feature voxel. If
// border_is_feature, every out-of-bounds position counts as a feature
// (so the result is the inside-distance of the feature complement's
// complement -- used for erosion and the public distance transform).
std::vector<double> squared_feature_distance(const BinaryMask& features, bool border_is_feature) {
    const Dims3 d = features.dims;
    const std::int64_t n = voxel_count(d);
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = features.data[static_cast<std::size_t>(i)] ? 0.0 : kFar;

    const int strides[3] = {1, d[0], d[0] * d[1]};
    for (int axis = 0; axis < 3; ++axis) {
        const int len = d[axis];
        const int stride = strides[axis];
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        const std::int64_t rows = static_cast<std::int64_t>(d[a1]) * d[a2];
#pragma omp parallel
        {
            std::vector<int> pos;
            std::vector<double> f, out(static_cast<std::size_t>(len));
            std::vector<int> v;
            std::vector<double> z;
#pragma omp for schedule(static)
            for (std::int64_t row = 0; row < rows; ++row) {
                const int c1 = static_cast<int>(row % d[a1]);
                const int c2 = static_cast<int>(row / d[a1]);
                int coord[3] = {0, 0, 0};
                coord[a1] = c1;
                coord[a2] = c2;
                const std::int64_t base = linear_index(d, coord[0], coord[1], coord[2]);
                pos.clear();
                f.clear();
                if (border_is_feature) {
                    pos.push_back(-1);
                    f.push_back(0.0);
                }
                bool any = border_is_feature;
                for (int i = 0; i < len; ++i) {
                    const double fv = dist[static_cast<std::size_t>(base + static_cast<std::int64_t>(i) * stride)];
                    if (fv < kFar) {
                        pos.push_back(i);
                        f.push_back(fv);
                        any = true;
                    }
                }
                if (border_is_feature) {
                    pos.push_back(len);
                    f.push_back(0.0);
                }
                if (!any) continue;  // whole line stays far
                envelope_1d(pos, f, len, out, v, z);
                for (int i = 0; i < len; ++i)
                    dist[static_cast<std::size_t>(base + static_cast<std::int64_t>(i) * stride)] = out[static_cast<std::size_t>(i)];
            }
        }
    }
    return dist;
}

}  // namespace

std::vector<double> distance_transform(const BinaryMask& mask) {
    BinaryMask outside(mask.dims);
    for (std::size_t i = 0; i < mask.data.size(); ++i) outside.data[i] = mask.data[i] ? 0 : 1;
    std::vector<double> sq = squared_feature_distance(outside, true);
    for (double& v : sq) v = std::sqrt(v);
    return sq;
}

// ------------------------------------------------------------ morphology

BinaryMask erode(const BinaryMask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("radius must be >= 0");
    if (radius == 0) return mask;
    BinaryMask outside(mask.dims);
    for (std::size_t i = 0; i < mask.data.size(); ++i) outside.data[i] = mask.data[i] ? 0 : 1;
    const std::vector<double> sq = squared_feature_distance(outside, true);
    BinaryMask out(mask.dims);
    const double r2 = static_cast<double>(radius) * radius;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = sq[i] > r2 ? 1 : 0;
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("radius must be >= 0");
    if (radius == 0) return mask;
    const std::vector<double> sq = squared_feature_distance(mask, false);
    BinaryMask out(mask.dims);
    const double r2 = static_cast<double>(radius) * radius;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = sq[i] <= r2 ? 1 : 0;
    return out;
}

BinaryMask open(const BinaryMask& mask, int radius) { return dilate(erode(mask, radius), radius); }

// ------------------------------------------------------------ components

ComponentLabels connected_components(const BinaryMask& mask, int connectivity) {
    const std::vector<Offset3> back = [&] {
        std::vector<Offset3> v;
        for (const Offset3& o : half_connectivity_offsets(connectivity)) v.push_back(-o);
        return v;
    }();

    const Dims3 d = mask.dims;
    ComponentLabels out;
    out.dims = d;
    out.label.assign(static_cast<std::size_t>(voxel_count(d)), -1);

    std::vector<std::int32_t> parent;
    auto find = [&](std::int32_t a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };

    std::vector<std::int32_t> prov(out.label.size(), -1);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t i = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(i)]) continue;
                std::int32_t root = -1;
                for (const Offset3& o : back) {
                    const int nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
                    if (!in_bounds(d, nx, ny, nz)) continue;
                    const std::int64_t j = linear_index(d, nx, ny, nz);
                    if (prov[static_cast<std::size_t>(j)] < 0) continue;
                    std::int32_t r = find(prov[static_cast<std::size_t>(j)]);
                    if (root < 0) {
                        root = r;
                    } else if (r != root) {
                        // union onto the smaller id so roots stay raster-stable
                        if (r < root) std::swap(root, r);
                        parent[static_cast<std::size_t>(r)] = root;
                    }
                }
                if (root < 0) {
                    root = static_cast<std::int32_t>(parent.size());
                    parent.push_back(root);
                }
                prov[static_cast<std::size_t>(i)] = root;
            }

    // compact ids in raster order of each component's first voxel
    std::vector<std::int32_t> compact(parent.size(), -1);
    std::int32_t next_id = 0;
    for (std::size_t i = 0; i < prov.size(); ++i) {
        if (prov[i] < 0) continue;
        const std::int32_t r = find(prov[i]);
        if (compact[static_cast<std::size_t>(r)] < 0) {
            compact[static_cast<std::size_t>(r)] = next_id++;
            out.sizes.push_back(0);
        }
        out.label[i] = compact[static_cast<std::size_t>(r)];
        ++out.sizes[static_cast<std::size_t>(out.label[i])];
    }
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const Dims3 d = mask.dims;
    BinaryMask out = mask;
    std::vector<std::uint8_t> reached(mask.data.size(), 0);
    std::deque<std::int64_t> queue;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (x != 0 && x != d[0] - 1 && y != 0 && y != d[1] - 1 && z != 0 && z != d[2] - 1)
                    continue;
                const std::int64_t i = linear_index(d, x, y, z);
                if (!mask.data[static_cast<std::size_t>(i)] && !reached[static_cast<std::size_t>(i)]) {
                    reached[static_cast<std::size_t>(i)] = 1;
                    queue.push_back(i);
                }
            }
    const std::int64_t sx = 1, sy = d[0], sz = static_cast<std::int64_t>(d[0]) * d[1];
    while (!queue.empty()) {
        const std::int64_t i = queue.front();
        queue.pop_front();
        const int x = static_cast<int>(i % d[0]);
        const int y = static_cast<int>((i / d[0]) % d[1]);
        const int z = static_cast<int>(i / (static_cast<std::int64_t>(d[0]) * d[1]));
        const std::int64_t nb[6] = {i - sx, i + sx, i - sy, i + sy, i - sz, i + sz};
        const bool ok[6] = {x > 0, x < d[0] - 1, y > 0, y < d[1] - 1, z > 0, z < d[2] - 1};
        for (int k = 0; k < 6; ++k) {
            if (!ok[k]) continue;
            const std::size_t j = static_cast<std::size_t>(nb[k]);
            if (!mask.data[j] && !reached[j]) {
                reached[j] = 1;
                queue.push_back(nb[k]);
            }
        }
    }
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (!mask.data[i] && !reached[i]) out.data[i] = 1;
    return out;
}

double sigma_floor(const IntensityVolume& vol) {
    float vmax = 0.0f;
    for (float v : vol.data) vmax = std::max(vmax, v);
    return vmax > 0.0f ? 1e-3 * static_cast<double>(vmax) : 1e-3;
}

}  // namespace nestcut
