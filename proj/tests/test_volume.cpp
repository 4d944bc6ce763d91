#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nestcut/reference.hpp"
#include "nestcut/rng.hpp"
#include "nestcut/volume.hpp"

using namespace nestcut;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

BinaryMask random_mask(Dims3 dims, Rng& rng, double p) {
    BinaryMask m(dims);
    for (auto& v : m.data) v = rng.next_double() < p ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("volume file round-trip preserves everything") {
    IntensityVolume vol;
    vol.dims = {4, 3, 2};
    vol.spacing = {25.0, 12.5, 40.0};
    vol.depth_axis = 2;
    Rng rng(11);
    vol.data.resize(24);
    for (float& v : vol.data) v = static_cast<float>(rng.uniform(0.0, 200.0));

    const auto p = temp_file("nc_roundtrip.ncvol");
    write_volume(p.string(), vol);
    const IntensityVolume back = read_volume(p.string());
    CHECK(back.dims == vol.dims);
    CHECK(back.spacing == vol.spacing);
    CHECK(back.depth_axis == vol.depth_axis);
    CHECK(back.data == vol.data);
    std::filesystem::remove(p);
}

TEST_CASE("label file round-trip preserves everything") {
    LabelVolume lab;
    lab.dims = {3, 3, 3};
    lab.spacing = {1.0, 2.0, 3.0};
    lab.depth_axis = 0;
    lab.data.resize(27);
    for (std::size_t i = 0; i < 27; ++i) lab.data[i] = static_cast<std::uint8_t>(i % 3);

    const auto p = temp_file("nc_roundtrip_labels.ncvol");
    write_labels(p.string(), lab);
    const LabelVolume back = read_labels(p.string());
    CHECK(back.dims == lab.dims);
    CHECK(back.spacing == lab.spacing);
    CHECK(back.depth_axis == lab.depth_axis);
    CHECK(back.data == lab.data);
    std::filesystem::remove(p);
}

TEST_CASE("malformed volume files are rejected") {
    const auto p = temp_file("nc_malformed.ncvol");
    const std::string payload1(4, '\0');  // one f32 zero

    auto expect_reject = [&](const std::string& content) {
        write_raw(p, content);
        CHECK_THROWS_AS(read_volume(p.string()), std::runtime_error);
    };

    expect_reject("NCVOL 2\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n" + payload1);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\n");  // truncated header
    expect_reject("NCVOL 1\ndims 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n" + payload1);
    expect_reject("NCVOL 1\ndims 0 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n");
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 0 1 1\ndepth_axis 0\ndtype f32le\nend\n" + payload1);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 3\ndtype f32le\nend\n" + payload1);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f64\nend\n" + payload1);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nEND\n" + payload1);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n");  // short
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n" +
                  payload1 + "x");  // long
    expect_reject("NCVOL 1\ndims one 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n");

    // negative and non-finite amplitudes
    const float neg = -1.0f;
    std::string negpay(reinterpret_cast<const char*>(&neg), 4);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n" + negpay);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::string nanpay(reinterpret_cast<const char*>(&nan), 4);
    expect_reject("NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype f32le\nend\n" + nanpay);

    // a labels file is not a volume file
    write_raw(p, "NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype u8\nend\n" +
                     std::string(1, '\0'));
    CHECK_THROWS_AS(read_volume(p.string()), std::runtime_error);
    // out-of-range label byte
    write_raw(p, "NCVOL 1\ndims 1 1 1\nspacing 1 1 1\ndepth_axis 0\ndtype u8\nend\n" +
                     std::string(1, '\x03'));
    CHECK_THROWS_AS(read_labels(p.string()), std::runtime_error);
    std::filesystem::remove(p);

    CHECK_THROWS_AS(read_volume(temp_file("nc_does_not_exist.ncvol").string()),
                    std::runtime_error);

    LabelVolume bad;
    bad.dims = {1, 1, 1};
    bad.data = {7};
    CHECK_THROWS_AS(write_labels(temp_file("nc_bad_label.ncvol").string(), bad),
                    std::invalid_argument);
}

TEST_CASE("error messages name the offending file") {
    const auto p = temp_file("nc_named.ncvol");
    write_raw(p, "not a header at all\n\n\n\n\n\n");
    try {
        read_volume(p.string());
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(p.string()) != std::string::npos);
    }
    std::filesystem::remove(p);
}

TEST_CASE("downsample averages complete blocks") {
    IntensityVolume vol;
    vol.dims = {2, 2, 2};
    vol.spacing = {1.0, 1.0, 1.0};
    vol.data = {0, 1, 2, 3, 4, 5, 6, 7};
    const IntensityVolume out = downsample(vol, 2);
    CHECK(out.dims == Dims3{1, 1, 1});
    CHECK(out.spacing == std::array<double, 3>{2.0, 2.0, 2.0});
    CHECK(out.data[0] == doctest::Approx(3.5));

    CHECK_THROWS_AS(downsample(vol, 0), std::invalid_argument);
    const IntensityVolume same = downsample(vol, 1);
    CHECK(same.data == vol.data);
}

TEST_CASE("downsample averages ragged border blocks over what exists") {
    IntensityVolume vol;
    vol.dims = {3, 1, 1};
    vol.data = {10, 20, 60};
    const IntensityVolume out = downsample(vol, 2);
    CHECK(out.dims == Dims3{2, 1, 1});
    CHECK(out.data[0] == doctest::Approx(15.0));
    CHECK(out.data[1] == doctest::Approx(60.0));
}

TEST_CASE("downsample matches the serial reference on random volumes") {
    Rng rng(21);
    for (int t = 0; t < 8; ++t) {
        IntensityVolume vol;
        vol.dims = {3 + static_cast<int>(rng.next_below(9)), 3 + static_cast<int>(rng.next_below(9)),
                    3 + static_cast<int>(rng.next_below(9))};
        vol.data.resize(static_cast<std::size_t>(vol.size()));
        for (float& v : vol.data) v = static_cast<float>(rng.uniform(0.0, 100.0));
        const int factor = 2 + static_cast<int>(rng.next_below(3));
        const IntensityVolume a = downsample(vol, factor);
        const IntensityVolume b = reference::serial_downsample(vol, factor);
        REQUIRE(a.dims == b.dims);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("upsample_labels is the nearest-neighbor inverse of downsampling") {
    LabelVolume coarse;
    coarse.dims = {2, 2, 1};
    coarse.depth_axis = 2;
    coarse.data = {0, 1, 2, 1};
    const LabelVolume full = upsample_labels(coarse, 3, {6, 6, 3}, {1.0, 1.0, 1.0});
    CHECK(full.dims == Dims3{6, 6, 3});
    CHECK(full.depth_axis == 2);
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x)
                CHECK(full.at(x, y, z) == coarse.at(x / 3, y / 3, z / 3));

    // ragged: full dims that truncate the last block
    const LabelVolume rag = upsample_labels(coarse, 3, {5, 4, 2}, {1.0, 1.0, 1.0});
    CHECK(rag.dims == Dims3{5, 4, 2});
    CHECK(rag.at(4, 3, 1) == coarse.at(1, 1, 0));

    CHECK_THROWS_AS(upsample_labels(coarse, 2, {6, 6, 3}, {1.0, 1.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("dice matches the definition") {
    const Dims3 d{5, 2, 1};
    BinaryMask a(d), b(d);
    for (int i = 0; i < 4; ++i) a.data[static_cast<std::size_t>(i)] = 1;   // {0,1,2,3}
    for (int i = 2; i < 8; ++i) b.data[static_cast<std::size_t>(i)] = 1;   // {2..7}
    CHECK(dice(a, b) == doctest::Approx(2.0 * 2 / (4 + 6)));
    CHECK(dice(a, a) == doctest::Approx(1.0));

    BinaryMask empty(d);
    CHECK(dice(a, empty) == doctest::Approx(0.0));
    CHECK_THROWS_AS(dice(empty, empty), std::invalid_argument);
    BinaryMask other({2, 2, 1});
    CHECK_THROWS_AS(dice(a, other), std::invalid_argument);
}

TEST_CASE("seg_report dice and the empty-class convention") {
    LabelVolume pred, truth;
    pred.dims = truth.dims = {4, 1, 1};
    pred.data = {0, 1, 1, 0};
    truth.data = {0, 1, 0, 0};
    const SegReport r = seg_report(pred, truth);
    CHECK(r.dice[0] == doctest::Approx(2.0 * 2 / (2 + 3)));
    CHECK(r.dice[1] == doctest::Approx(2.0 * 1 / (2 + 1)));
    CHECK(r.dice[2] == doctest::Approx(1.0));  // absent from both sides
    CHECK(r.nested);
}

TEST_CASE("seg_report flags a core voxel touching the bath") {
    LabelVolume pred;
    pred.dims = {3, 1, 1};
    pred.depth_axis = 0;
    pred.data = {2, 1, 0};  // core, shell, bath: fine
    LabelVolume truth = pred;
    CHECK(seg_report(pred, truth).nested);

    pred.data = {2, 0, 1};  // core directly beside bath
    CHECK_FALSE(seg_report(pred, truth).nested);

    // the volume border is not the bath
    pred.data = {2, 2, 1};
    CHECK(seg_report(pred, truth).nested);
}

TEST_CASE("distance transform equals brute force on random masks") {
    Rng rng(31);
    for (int t = 0; t < 10; ++t) {
        const Dims3 d{4 + static_cast<int>(rng.next_below(5)), 3 + static_cast<int>(rng.next_below(5)),
                      2 + static_cast<int>(rng.next_below(5))};
        const BinaryMask m = random_mask(d, rng, 0.55);
        const std::vector<double> dt = distance_transform(m);
        const std::vector<double> sq = reference::brute_force_sq_distance(m);
        for (std::size_t i = 0; i < dt.size(); ++i)
            CHECK(dt[i] * dt[i] == doctest::Approx(sq[i]).epsilon(1e-12));
    }
}

TEST_CASE("distance transform of a centered cube peaks at its center") {
    BinaryMask m({9, 9, 9});
    for (int z = 2; z <= 6; ++z)
        for (int y = 2; y <= 6; ++y)
            for (int x = 2; x <= 6; ++x) m.set(x, y, z, true);
    const std::vector<double> dt = distance_transform(m);
    CHECK(dt[linear_index({9, 9, 9}, 4, 4, 4)] == doctest::Approx(3.0));
    CHECK(dt[linear_index({9, 9, 9}, 2, 4, 4)] == doctest::Approx(1.0));
    CHECK(dt[linear_index({9, 9, 9}, 0, 0, 0)] == doctest::Approx(0.0));
}

TEST_CASE("the volume border counts as outside the mask") {
    BinaryMask m({4, 3, 5});
    for (auto& v : m.data) v = 1;
    const std::vector<double> dt = distance_transform(m);
    // nearest outside position for (1,1,2) is one step past the y border
    CHECK(dt[linear_index({4, 3, 5}, 1, 1, 2)] == doctest::Approx(2.0));
    CHECK(dt[linear_index({4, 3, 5}, 0, 0, 0)] == doctest::Approx(1.0));
}

TEST_CASE("morphology agrees with the naive reference") {
    Rng rng(41);
    for (int t = 0; t < 6; ++t) {
        const Dims3 d{5 + static_cast<int>(rng.next_below(6)), 5 + static_cast<int>(rng.next_below(6)),
                      4 + static_cast<int>(rng.next_below(4))};
        const BinaryMask m = random_mask(d, rng, 0.6);
        for (int r = 0; r <= 3; ++r) {
            CHECK(erode(m, r).data == reference::naive_erode(m, r).data);
            CHECK(dilate(m, r).data == reference::naive_dilate(m, r).data);
            CHECK(open(m, r).data ==
                  reference::naive_dilate(reference::naive_erode(m, r), r).data);
        }
    }
    CHECK_THROWS_AS(erode(random_mask({3, 3, 3}, rng, 0.5), -1), std::invalid_argument);
}

TEST_CASE("opening removes thin spurs but keeps the body") {
    BinaryMask m({11, 11, 5});
    for (int z = 1; z <= 3; ++z)
        for (int y = 2; y <= 8; ++y)
            for (int x = 2; x <= 8; ++x) m.set(x, y, z, true);
    for (int x = 0; x <= 1; ++x) m.set(x, 5, 2, true);  // one-voxel-thick spur
    const BinaryMask o = open(m, 1);
    CHECK_FALSE(o.at(0, 5, 2));
    CHECK(o.at(5, 5, 2));
}

TEST_CASE("connected components match flood fill across connectivities") {
    Rng rng(51);
    for (int conn : {6, 18, 26})
        for (int t = 0; t < 5; ++t) {
            const Dims3 d{6 + static_cast<int>(rng.next_below(4)),
                          6 + static_cast<int>(rng.next_below(4)),
                          3 + static_cast<int>(rng.next_below(4))};
            const BinaryMask m = random_mask(d, rng, 0.4);
            const ComponentLabels a = connected_components(m, conn);
            const ComponentLabels b = reference::flood_fill_components(m, conn);
            CHECK(a.label == b.label);
            CHECK(a.sizes == b.sizes);
        }
}

TEST_CASE("component ids follow raster order of first appearance") {
    BinaryMask m({7, 1, 1});
    m.data = {1, 0, 1, 1, 0, 0, 1};
    const ComponentLabels c = connected_components(m, 6);
    CHECK(c.count() == 3);
    CHECK(c.label[0] == 0);
    CHECK(c.label[2] == 1);
    CHECK(c.label[3] == 1);
    CHECK(c.label[6] == 2);
    CHECK(c.sizes == std::vector<std::int64_t>{1, 2, 1});
    CHECK(c.label[1] == -1);
}

TEST_CASE("diagonal touch merges only under wider connectivities") {
    BinaryMask m({2, 2, 1});
    m.data = {1, 0, 0, 1};  // touch across the xy diagonal
    CHECK(connected_components(m, 6).count() == 2);
    CHECK(connected_components(m, 18).count() == 1);

    BinaryMask c({2, 2, 2});
    c.data = {1, 0, 0, 0, 0, 0, 0, 1};  // touch across the body diagonal
    CHECK(connected_components(c, 18).count() == 2);
    CHECK(connected_components(c, 26).count() == 1);
}

TEST_CASE("fill_holes closes cavities but leaves tunnels open") {
    const Dims3 d{7, 7, 7};
    BinaryMask shell(d);
    for (int z = 1; z <= 5; ++z)
        for (int y = 1; y <= 5; ++y)
            for (int x = 1; x <= 5; ++x) {
                const int cheb =
                    std::max({std::abs(x - 3), std::abs(y - 3), std::abs(z - 3)});
                if (cheb == 2) shell.set(x, y, z, true);
            }
    const BinaryMask solid = fill_holes(shell);
    CHECK(solid.count() == shell.count() + 27);
    CHECK(solid.at(3, 3, 3));

    BinaryMask pierced = shell;
    pierced.set(3, 3, 1, false);  // drill through one wall
    const BinaryMask still = fill_holes(pierced);
    CHECK(still.data == pierced.data);
}

TEST_CASE("convex hull mask matches the simplex-membership oracle") {
    Rng rng(61);
    for (int t = 0; t < 8; ++t) {
        const Dims3 d{7 + static_cast<int>(rng.next_below(3)), 6 + static_cast<int>(rng.next_below(3)),
                      5 + static_cast<int>(rng.next_below(3))};
        BinaryMask m(d);
        std::vector<reference::IPoint> pts;
        const int npts = 3 + static_cast<int>(rng.next_below(6));
        for (int i = 0; i < npts; ++i) {
            const int x = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d[0])));
            const int y = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d[1])));
            const int z = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d[2])));
            if (!m.at(x, y, z)) {
                m.set(x, y, z, true);
                pts.push_back({x, y, z});
            }
        }
        const BinaryMask hull = convex_hull_mask(m);
        for (int z = 0; z < d[2]; ++z)
            for (int y = 0; y < d[1]; ++y)
                for (int x = 0; x < d[0]; ++x)
                    CHECK(hull.at(x, y, z) == reference::hull_contains(pts, {x, y, z}));
    }
}

TEST_CASE("convex hull handles degenerate point sets") {
    const Dims3 d{9, 9, 9};

    BinaryMask empty(d);
    CHECK(convex_hull_mask(empty).count() == 0);

    BinaryMask point(d);
    point.set(4, 5, 6, true);
    const BinaryMask hp = convex_hull_mask(point);
    CHECK(hp.count() == 1);
    CHECK(hp.at(4, 5, 6));

    BinaryMask segment(d);  // collinear, diagonal
    segment.set(1, 1, 1, true);
    segment.set(7, 7, 7, true);
    const BinaryMask hs = convex_hull_mask(segment);
    std::vector<reference::IPoint> spts{{1, 1, 1}, {7, 7, 7}};
    for (int z = 0; z < 9; ++z)
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 9; ++x)
                CHECK(hs.at(x, y, z) == reference::hull_contains(spts, {x, y, z}));

    BinaryMask planar(d);  // coplanar quad at z = 4
    planar.set(1, 1, 4, true);
    planar.set(7, 1, 4, true);
    planar.set(1, 7, 4, true);
    planar.set(7, 7, 4, true);
    const BinaryMask hq = convex_hull_mask(planar);
    std::vector<reference::IPoint> qpts{{1, 1, 4}, {7, 1, 4}, {1, 7, 4}, {7, 7, 4}};
    for (int z = 0; z < 9; ++z)
        for (int y = 0; y < 9; ++y)
            for (int x = 0; x < 9; ++x)
                CHECK(hq.at(x, y, z) == reference::hull_contains(qpts, {x, y, z}));
    CHECK(hq.count() == 49);
}

TEST_CASE("hull of a filled region is idempotent and contains the region") {
    Rng rng(71);
    BinaryMask blob({12, 12, 12});
    for (int z = 3; z <= 8; ++z)
        for (int y = 3; y <= 8; ++y)
            for (int x = 3; x <= 8; ++x)
                if (rng.next_double() < 0.7) blob.set(x, y, z, true);
    const BinaryMask h1 = convex_hull_mask(blob);
    for (std::size_t i = 0; i < blob.data.size(); ++i)
        if (blob.data[i]) CHECK(h1.data[i] == 1);
    const BinaryMask h2 = convex_hull_mask(h1);
    CHECK(h2.data == h1.data);
}

TEST_CASE("sigma_floor scales with the brightest voxel") {
    IntensityVolume vol;
    vol.dims = {2, 1, 1};
    vol.data = {250.0f, 1.0f};
    CHECK(sigma_floor(vol) == doctest::Approx(0.25));
    vol.data = {0.0f, 0.0f};
    CHECK(sigma_floor(vol) == doctest::Approx(1e-3));
}

TEST_CASE("mask count") {
    BinaryMask m({3, 2, 1});
    m.data = {1, 0, 1, 1, 0, 0};
    CHECK(m.count() == 3);
}
