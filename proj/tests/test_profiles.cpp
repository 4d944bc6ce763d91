#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nestcut/profiles.hpp"
#include "nestcut/rng.hpp"
#include "nestcut/volume.hpp"

using namespace nestcut;

namespace {

IntensityVolume make_vol(Dims3 dims, const std::vector<float>& values) {
    IntensityVolume vol;
    vol.dims = dims;
    vol.data = values;
    return vol;
}

// depth rows following value(d), constant spread, generous counts
DepthStats quadratic_stats(int lo, int hi, double offset) {
    DepthStats s;
    for (int d = lo; d <= hi; ++d) {
        const double q = 30.0 + 0.8 * d - 0.02 * d * d;
        DepthSample row;
        row.depth = d;
        row.mean = q + offset;
        row.stddev = 1.0;
        row.count = 100;
        s.lnp.push_back(row);
        row.mean = q + offset + 50.0;
        s.fat.push_back(row);
    }
    return s;
}

IntensityVolume span_volume(int depth_len, float vmax) {
    // depth along y; amplitudes span [0, vmax] so the variance floor and the
    // separation epsilon are fixed by vmax alone
    std::vector<float> vals(static_cast<std::size_t>(depth_len), 0.0f);
    vals[0] = vmax;
    return make_vol({1, depth_len, 1}, vals);
}

}  // namespace

TEST_CASE("bath estimate locks onto the dark mode of a bimodal volume") {
    int hits = 0;
    const int trials = 60;
    for (int t = 0; t < trials; ++t) {
        Rng gen(500 + static_cast<std::uint64_t>(t));
        std::vector<float> vals;
        for (int i = 0; i < 600; ++i) vals.push_back(static_cast<float>(gen.normal(5.0, 1.0)));
        for (int i = 0; i < 400; ++i) vals.push_back(static_cast<float>(gen.normal(50.0, 5.0)));
        const IntensityVolume vol = make_vol({10, 10, 10}, vals);
        Rng rng(900 + static_cast<std::uint64_t>(t));
        const PbsModel m = estimate_pbs(vol, rng);
        if (m.mean > 4.0 && m.mean < 6.0) ++hits;
        CHECK(m.stddev > 0.0);
    }
    CHECK(hits >= trials * 95 / 100);
}

TEST_CASE("identical dark candidates give their exact mean and the floored spread") {
    std::vector<float> vals(1000, 5.0f);
    for (int i = 500; i < 1000; ++i) vals[static_cast<std::size_t>(i)] = 100.0f;
    const IntensityVolume vol = make_vol({10, 10, 10}, vals);
    Rng rng(3);
    const PbsModel m = estimate_pbs(vol, rng);
    CHECK(m.mean == doctest::Approx(5.0));
    CHECK(m.stddev == doctest::Approx(sigma_floor(vol)));
    // threshold and slope are fixed functions of the two fitted numbers
    CHECK(m.threshold() == doctest::Approx(m.mean + 3.0 * m.stddev));
    CHECK(m.slope() == doctest::Approx(m.stddev / 2.0));
}

TEST_CASE("a constant volume leaves no candidates and fails loudly") {
    const IntensityVolume vol = make_vol({4, 4, 4}, std::vector<float>(64, 7.0f));
    Rng rng(1);
    CHECK_THROWS_AS(estimate_pbs(vol, rng), std::runtime_error);
}

TEST_CASE("bath estimation validates its inputs") {
    Rng rng(1);
    IntensityVolume empty;
    CHECK_THROWS_AS(estimate_pbs(empty, rng), std::invalid_argument);

    std::vector<float> vals(27, 1.0f);
    vals[0] = 10.0f;
    const IntensityVolume vol = make_vol({3, 3, 3}, vals);
    PbsParams p;
    p.samplings = 0;
    CHECK_THROWS_AS(estimate_pbs(vol, rng, p), std::invalid_argument);
    p = PbsParams{};
    p.sample_fraction = 0.0;
    CHECK_THROWS_AS(estimate_pbs(vol, rng, p), std::invalid_argument);
    p.sample_fraction = 1.5;
    CHECK_THROWS_AS(estimate_pbs(vol, rng, p), std::invalid_argument);
    p = PbsParams{};
    p.inlier_sigmas = 0.0;
    CHECK_THROWS_AS(estimate_pbs(vol, rng, p), std::invalid_argument);
}

TEST_CASE("bath estimation is a pure function of volume and seed") {
    Rng gen(11);
    std::vector<float> vals;
    for (int i = 0; i < 512; ++i)
        vals.push_back(static_cast<float>(gen.uniform(0.0, 60.0)));
    const IntensityVolume vol = make_vol({8, 8, 8}, vals);
    Rng a(42), b(42);
    const PbsModel ma = estimate_pbs(vol, a);
    const PbsModel mb = estimate_pbs(vol, b);
    CHECK(ma.mean == mb.mean);
    CHECK(ma.stddev == mb.stddev);
}

TEST_CASE("depth statistics match a direct per-slice computation") {
    const Dims3 dims{6, 5, 7};
    Rng gen(19);
    std::vector<float> vals;
    for (int i = 0; i < 6 * 5 * 7; ++i)
        vals.push_back(static_cast<float>(gen.uniform(0.0, 90.0)));
    IntensityVolume vol = make_vol(dims, vals);
    vol.depth_axis = 1;

    BinaryMask fat(dims), lnp(dims);
    for (std::size_t i = 0; i < fat.data.size(); ++i) {
        fat.data[i] = gen.next_double() < 0.4 ? 1 : 0;
        lnp.data[i] = gen.next_double() < 0.4 ? 1 : 0;
    }
    const DepthStats ds = depth_stats(vol, fat, lnp, 1);

    for (int cls = 0; cls < 2; ++cls) {
        const auto& rows = cls == 0 ? ds.lnp : ds.fat;
        int prev = -1;
        for (const DepthSample& row : rows) {
            CHECK(row.depth > prev);  // rows come out in depth order
            prev = row.depth;
            double sum = 0.0, sq = 0.0;
            std::int64_t n = 0;
            std::size_t i = 0;
            for (int z = 0; z < dims[2]; ++z)
                for (int y = 0; y < dims[1]; ++y)
                    for (int x = 0; x < dims[0]; ++x, ++i) {
                        if (y != row.depth) continue;
                        // a voxel under both masks counts as shell, not core
                        const bool is_fat = fat.data[i] != 0;
                        const bool is_lnp = !is_fat && lnp.data[i] != 0;
                        if ((cls == 0 && !is_lnp) || (cls == 1 && !is_fat)) continue;
                        sum += vol.data[i];
                        sq += static_cast<double>(vol.data[i]) * vol.data[i];
                        ++n;
                    }
            REQUIRE(n == row.count);
            const double mean = sum / static_cast<double>(n);
            const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
            CHECK(row.mean == doctest::Approx(mean).epsilon(1e-9));
            CHECK(row.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-7));
        }
    }
}

TEST_CASE("depth rows below the population floor are omitted") {
    const Dims3 dims{4, 3, 4};
    IntensityVolume vol = make_vol(dims, std::vector<float>(48, 10.0f));
    BinaryMask fat(dims), lnp(dims);
    // depth 0: 5 shell voxels; depth 1: 2 shell voxels; no core anywhere
    for (int i = 0; i < 5; ++i) fat.data[static_cast<std::size_t>(i)] = 1;
    fat.data[4 * 1 + 0] = 0;  // keep exactly 5 at y=0
    fat.data[static_cast<std::size_t>(4)] = 1;
    fat.data[static_cast<std::size_t>(5)] = 1;
    BinaryMask fat2(dims);
    for (int x = 0; x < 4; ++x) fat2.data[static_cast<std::size_t>(x)] = 1;  // y=0, 4 voxels
    fat2.data[static_cast<std::size_t>(4 + 0)] = 1;                         // y=1, 1 voxel
    const DepthStats ds = depth_stats(vol, fat2, lnp, 3);
    REQUIRE(ds.fat.size() == 1);
    CHECK(ds.fat[0].depth == 0);
    CHECK(ds.fat[0].count == 4);
    CHECK(ds.lnp.empty());
}

TEST_CASE("depth statistics reject mismatched mask shapes") {
    IntensityVolume vol = make_vol({3, 3, 3}, std::vector<float>(27, 1.0f));
    BinaryMask ok({3, 3, 3}), bad({3, 3, 2});
    CHECK_THROWS_AS(depth_stats(vol, bad, ok), std::invalid_argument);
    CHECK_THROWS_AS(depth_stats(vol, ok, bad), std::invalid_argument);
}

TEST_CASE("the spline reproduces an exact quadratic depth trend") {
    const DepthStats stats = quadratic_stats(0, 19, 0.0);
    const IntensityVolume vol = span_volume(20, 200.0f);
    Rng rng(5);
    const DepthProfile p = fit_profile(stats, vol, rng);
    REQUIRE(p.depth_extent() == 20);
    for (int d = 0; d < 20; ++d) {
        const double q = 30.0 + 0.8 * d - 0.02 * d * d;
        CHECK(p.mu_lnp[static_cast<std::size_t>(d)] ==
              doctest::Approx(q).epsilon(1e-6));
        CHECK(p.mu_fat[static_cast<std::size_t>(d)] ==
              doctest::Approx(q + 50.0).epsilon(1e-6));
        CHECK(p.sigma_lnp[static_cast<std::size_t>(d)] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gross row outliers barely move the fitted curves") {
    Rng noise(77);
    DepthStats clean = quadratic_stats(0, 19, 0.0);
    for (auto& row : clean.lnp) row.mean += noise.uniform(-0.1, 0.1);
    DepthStats dirty = clean;
    dirty.lnp[3].mean += 200.0;
    dirty.lnp[14].mean -= 200.0;

    const IntensityVolume vol = span_volume(20, 200.0f);
    Rng ra(9), rb(9);
    const DepthProfile pa = fit_profile(clean, vol, ra);
    const DepthProfile pb = fit_profile(dirty, vol, rb);
    double clean_err = 0.0, dirty_err = 0.0;
    for (int d = 0; d < 20; ++d) {
        const double q = 30.0 + 0.8 * d - 0.02 * d * d;
        clean_err = std::max(clean_err, std::abs(pa.mu_lnp[static_cast<std::size_t>(d)] - q));
        dirty_err = std::max(dirty_err, std::abs(pb.mu_lnp[static_cast<std::size_t>(d)] - q));
    }
    CHECK(dirty_err <= 3.0 * clean_err + 1e-9);
}

TEST_CASE("depths outside the observed rows extend flat") {
    DepthStats stats;
    for (int d = 5; d <= 12; ++d) {
        DepthSample row;
        row.depth = d;
        row.mean = 10.0 + 2.0 * d;
        row.stddev = 1.0;
        row.count = 50;
        stats.lnp.push_back(row);
        row.mean = 80.0;
        stats.fat.push_back(row);
    }
    const IntensityVolume vol = span_volume(30, 150.0f);
    Rng rng(2);
    const DepthProfile p = fit_profile(stats, vol, rng);
    for (int d = 0; d < 5; ++d)
        CHECK(p.mu_lnp[static_cast<std::size_t>(d)] == doctest::Approx(p.mu_lnp[5]));
    for (int d = 13; d < 30; ++d)
        CHECK(p.mu_lnp[static_cast<std::size_t>(d)] == doctest::Approx(p.mu_lnp[12]));
}

TEST_CASE("fewer than four usable rows cannot anchor a fit") {
    DepthStats stats;
    for (int d = 0; d < 3; ++d) {
        DepthSample row;
        row.depth = d;
        row.mean = 20.0;
        row.stddev = 1.0;
        row.count = 50;
        stats.lnp.push_back(row);
        stats.fat.push_back(row);
    }
    const IntensityVolume vol = span_volume(10, 100.0f);
    Rng rng(4);
    CHECK_THROWS_AS(fit_profile(stats, vol, rng), std::runtime_error);
}

TEST_CASE("fitted spreads are floored and the shell stays above the core") {
    DepthStats stats;
    for (int d = 0; d < 8; ++d) {
        DepthSample row;
        row.depth = d;
        row.mean = 50.0;
        row.stddev = 0.0;  // degenerate spread must come back floored
        row.count = 50;
        stats.lnp.push_back(row);
        row.mean = 45.0;  // inverted: shell reported darker than core
        stats.fat.push_back(row);
    }
    const IntensityVolume vol = span_volume(8, 100.0f);
    Rng rng(6);
    const DepthProfile p = fit_profile(stats, vol, rng);
    const double eps = 0.01 * 100.0;
    for (int d = 0; d < 8; ++d) {
        const auto i = static_cast<std::size_t>(d);
        CHECK(p.sigma_lnp[i] >= sigma_floor(vol));
        CHECK(p.sigma_fat[i] >= sigma_floor(vol));
        CHECK(p.mu_fat[i] >= p.mu_lnp[i] + eps - 1e-9);
    }
}

TEST_CASE("a fit that uses every row ignores the seed entirely") {
    // four rows force the all-rows path, so two different seeds agree exactly
    DepthStats stats;
    for (int d = 0; d < 4; ++d) {
        DepthSample row;
        row.depth = d;
        row.mean = 15.0 + d;
        row.stddev = 1.0;
        row.count = 40;
        stats.lnp.push_back(row);
        row.mean = 60.0 + d;
        stats.fat.push_back(row);
    }
    const IntensityVolume vol = span_volume(4, 100.0f);
    Rng a(1), b(999);
    const DepthProfile pa = fit_profile(stats, vol, a);
    const DepthProfile pb = fit_profile(stats, vol, b);
    for (int d = 0; d < 4; ++d) {
        const auto i = static_cast<std::size_t>(d);
        CHECK(pa.mu_lnp[i] == pb.mu_lnp[i]);
        CHECK(pa.mu_fat[i] == pb.mu_fat[i]);
    }
}

TEST_CASE("profile fitting is deterministic for a fixed seed") {
    const DepthStats stats = quadratic_stats(0, 15, 5.0);
    const IntensityVolume vol = span_volume(16, 150.0f);
    Rng a(33), b(33);
    const DepthProfile pa = fit_profile(stats, vol, a);
    const DepthProfile pb = fit_profile(stats, vol, b);
    for (int d = 0; d < 16; ++d) {
        const auto i = static_cast<std::size_t>(d);
        CHECK(pa.mu_lnp[i] == pb.mu_lnp[i]);
        CHECK(pa.sigma_lnp[i] == pb.sigma_lnp[i]);
        CHECK(pa.mu_fat[i] == pb.mu_fat[i]);
        CHECK(pa.sigma_fat[i] == pb.sigma_fat[i]);
    }
}
