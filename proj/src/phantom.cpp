#include "nestcut/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nestcut/rng.hpp"

namespace nestcut {

namespace {

void validate(const PhantomSpec& s) {
    for (int i = 0; i < 3; ++i)
        if (s.dims[i] < 8) throw std::invalid_argument("phantom: dims too small");
    if (s.depth_axis < 0 || s.depth_axis > 2)
        throw std::invalid_argument("phantom: depth_axis must be 0, 1 or 2");
    if (!(s.shell_thickness > 0.0)) throw std::invalid_argument("phantom: shell_thickness <= 0");
    for (int i = 0; i < 3; ++i) {
        if (!(s.core_semi[i] > 0.0)) throw std::invalid_argument("phantom: core semi-axis <= 0");
        const double outer = s.core_semi[i] + s.shell_thickness;
        if (s.center[i] - outer < 2.0 || s.center[i] + outer > s.dims[i] - 3.0)
            throw std::invalid_argument("phantom: node must keep a 2-voxel bath margin");
    }
    if (s.base_pbs < 0.0 || s.base_fat < 0.0 || s.base_lnp < 0.0)
        throw std::invalid_argument("phantom: base amplitudes must be >= 0");
    if (std::abs(s.lateral_gradient) > 1.0)
        throw std::invalid_argument("phantom: |lateral_gradient| must be <= 1");
    if (s.blur_sigma < 0.0 || !(s.attenuation >= 0.0))
        throw std::invalid_argument("phantom: bad degradation parameters");
}

void gaussian_blur_axis(std::vector<double>& f, Dims3 d, int axis, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        ksum += v;
    }
    for (double& v : kernel) v /= ksum;

    std::vector<double> out(f.size());
    const int len = d[axis];
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                double acc = 0.0;
                int c[3] = {x, y, z};
                for (int i = -radius; i <= radius; ++i) {
                    int cc = c[axis] + i;
                    cc = std::clamp(cc, 0, len - 1);  // replicate the border
                    int cs[3] = {x, y, z};
                    cs[axis] = cc;
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           f[static_cast<std::size_t>(linear_index(d, cs[0], cs[1], cs[2]))];
                }
                out[static_cast<std::size_t>(linear_index(d, x, y, z))] = acc;
            }
    f = std::move(out);
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
    validate(spec);
    const Dims3 d = spec.dims;
    const std::int64_t n = voxel_count(d);

    Phantom ph;
    ph.truth.dims = d;
    ph.truth.spacing = spec.spacing;
    ph.truth.depth_axis = spec.depth_axis;
    ph.truth.data.resize(static_cast<std::size_t>(n));
    ph.vol.dims = d;
    ph.vol.spacing = spec.spacing;
    ph.vol.depth_axis = spec.depth_axis;
    ph.vol.data.resize(static_cast<std::size_t>(n));

#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const double c[3] = {x - spec.center[0], y - spec.center[1], z - spec.center[2]};
                double e_core = 0.0, e_outer = 0.0;
                for (int i = 0; i < 3; ++i) {
                    const double sc = c[i] / spec.core_semi[i];
                    e_core += sc * sc;
                    const double so = c[i] / (spec.core_semi[i] + spec.shell_thickness);
                    e_outer += so * so;
                }
                Label l = Label::Pbs;
                if (e_core <= 1.0)
                    l = Label::Lnp;
                else if (e_outer <= 1.0)
                    l = Label::Fat;
                ph.truth.data[static_cast<std::size_t>(linear_index(d, x, y, z))] =
                    static_cast<std::uint8_t>(l);
            }

    std::vector<double> field(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        switch (static_cast<Label>(ph.truth.data[static_cast<std::size_t>(i)])) {
            case Label::Pbs: field[static_cast<std::size_t>(i)] = spec.base_pbs; break;
            case Label::Fat: field[static_cast<std::size_t>(i)] = spec.base_fat; break;
            case Label::Lnp: field[static_cast<std::size_t>(i)] = spec.base_lnp; break;
        }
    }
    if (spec.blur_sigma > 0.0)
        for (int axis = 0; axis < 3; ++axis) gaussian_blur_axis(field, d, axis, spec.blur_sigma);

    // overlying tissue per voxel: non-bath voxels strictly above along depth
    std::vector<std::int32_t> path(static_cast<std::size_t>(n), 0);
    if (spec.attenuation > 0.0) {
        const int axis = spec.depth_axis;
        const int len = d[axis];
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
#pragma omp parallel for collapse(2) schedule(static)
        for (int c2 = 0; c2 < d[a2]; ++c2)
            for (int c1 = 0; c1 < d[a1]; ++c1) {
                std::int32_t acc = 0;
                for (int dep = 0; dep < len; ++dep) {
                    int coord[3];
                    coord[axis] = dep;
                    coord[a1] = c1;
                    coord[a2] = c2;
                    const std::int64_t i = linear_index(d, coord[0], coord[1], coord[2]);
                    path[static_cast<std::size_t>(i)] = acc;
                    if (ph.truth.data[static_cast<std::size_t>(i)] !=
                        static_cast<std::uint8_t>(Label::Pbs))
                        ++acc;
                }
            }
    }

    const double sigma_r = std::sqrt(2.0 / 3.14159265358979323846);  // unit-mean Rayleigh
    const int nx = d[0];
#pragma omp parallel for collapse(2) schedule(static)
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const std::int64_t i = linear_index(d, x, y, z);
                double v = field[static_cast<std::size_t>(i)];
                if (spec.attenuation > 0.0)
                    v *= std::exp(-spec.attenuation * path[static_cast<std::size_t>(i)]);
                v *= 1.0 + spec.lateral_gradient * (static_cast<double>(x) / nx - 0.5);
                if (spec.speckle) {
                    const double u = hash_double(spec.seed, static_cast<std::uint64_t>(i));
                    v *= sigma_r * std::sqrt(-2.0 * std::log1p(-u));
                }
                ph.vol.data[static_cast<std::size_t>(i)] = static_cast<float>(std::max(v, 0.0));
            }
    return ph;
}

std::vector<Scenario> scenario_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Scenario> out;

    auto geometry = [&](PhantomSpec& s) {
        for (int i = 0; i < 3; ++i) {
            s.core_semi[i] = rng.uniform(13.0, 17.0);
            s.center[i] = s.dims[i] / 2.0 + rng.uniform(-2.5, 2.5);
        }
        s.shell_thickness = rng.uniform(4.0, 6.0);
        s.seed = rng.next_u64();
    };
    auto half_depth_attenuation = [](const PhantomSpec& s) {
        // attenuation that halves the shell amplitude across the whole node
        const double height = 2.0 * (s.core_semi[s.depth_axis] + s.shell_thickness);
        return std::log(2.0) / height;
    };

    {
        Scenario sc{"clean_speckled", {}};
        geometry(sc.spec);
        out.push_back(sc);
    }
    {
        Scenario sc{"attenuated_graded", {}};
        geometry(sc.spec);
        sc.spec.attenuation = rng.uniform(0.5, 1.0) * half_depth_attenuation(sc.spec);
        const double g = rng.uniform(0.3, 0.6);
        sc.spec.lateral_gradient = rng.next_double() < 0.5 ? -g : g;
        out.push_back(sc);
    }
    {
        Scenario sc{"blurred_low_contrast", {}};
        geometry(sc.spec);
        sc.spec.blur_sigma = 2.0;
        sc.spec.base_fat = 60.0;
        sc.spec.attenuation = rng.uniform(0.0, 0.3) * half_depth_attenuation(sc.spec);
        out.push_back(sc);
    }
    {
        Scenario sc{"blurred_high_contrast", {}};
        geometry(sc.spec);
        sc.spec.blur_sigma = 2.0;
        sc.spec.base_fat = 110.0;
        sc.spec.attenuation = rng.uniform(0.0, 0.3) * half_depth_attenuation(sc.spec);
        out.push_back(sc);
    }
    return out;
}

}  // namespace nestcut
