#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nlos/fixtures.hpp"
#include "nlos/scene.hpp"
#include "oracles.hpp"

using namespace nlos;

namespace {
SensorGeometry pythagorean_geom() {
    // r1 = |laser - S| = 1, r4 = |I - detector| = 2.
    return SensorGeometry({0, 0, -1}, {1, 0, -2}, {0, 0, 0}, {{1, 0, 0}});
}
}  // namespace

TEST_CASE("path_length on the Pythagorean case") {
    const SensorGeometry g = pythagorean_geom();
    REQUIRE(g.r1() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(g.r4(0) == Catch::Approx(2.0).margin(1e-12));
    // 1 + 1 + sqrt(2) + 2
    REQUIRE(path_length(g, 0, {0, 0, 1}) ==
            Catch::Approx(4.0 + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("path_length degenerate collocated case is zero") {
    const SensorGeometry g({0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {{0, 0, 0}});
    REQUIRE(path_length(g, 0, {0, 0, 0}) == 0.0);
}

TEST_CASE("path_length rejects invalid image index") {
    REQUIRE_THROWS_AS(path_length(pythagorean_geom(), 1, {0, 0, 1}), std::out_of_range);
}

TEST_CASE("path_length equals an independent recomputation on random geometry") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Point3 laser{u(rng), u(rng), u(rng)};
        const Point3 det{u(rng), u(rng), u(rng)};
        const Point3 s{u(rng), u(rng), 0};
        std::vector<Point3> ips;
        for (int i = 0; i < 4; ++i) ips.push_back({u(rng), u(rng), 0});
        const SensorGeometry g(laser, det, s, ips);
        const Point3 p{u(rng), u(rng), std::abs(u(rng)) + 0.1};
        for (std::size_t i = 0; i < 4; ++i)
            REQUIRE(path_length(g, i, p) ==
                    Catch::Approx(oracle::naive_path_length(g, i, p)).epsilon(1e-13));
    }
}

TEST_CASE("path_length is symmetric under swapping the wall points") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Point3 laser{u(rng), u(rng), -1}, det{u(rng), u(rng), -1};
        const Point3 s{u(rng), u(rng), 0}, ip{u(rng), u(rng), 0};
        if (s == ip) continue;
        const Point3 p{u(rng), u(rng), 1.5};
        // Swapped roles: laser illuminates the old image point, the detector
        // watches the old source point.
        const SensorGeometry a(laser, det, s, {ip});
        const SensorGeometry b(det, laser, ip, {s});
        REQUIRE(path_length(a, 0, p) == Catch::Approx(path_length(b, 0, p)).epsilon(1e-12));
    }
}

TEST_CASE("path_length never undershoots the foci-distance floor") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Point3 laser{u(rng), u(rng), -1}, det{u(rng), u(rng), -1};
        const Point3 s{u(rng), u(rng), 0}, ip{u(rng), u(rng), 0};
        if (s == ip) continue;
        const SensorGeometry g(laser, det, s, {ip});
        const Point3 p{u(rng), u(rng), u(rng)};
        const double floor = g.r1() + g.r4(0) + distance(s, ip);
        REQUIRE(path_length(g, 0, p) >= floor - 1e-12);
    }
}

TEST_CASE("SensorGeometry invariants") {
    REQUIRE_THROWS_AS(SensorGeometry({0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(
        SensorGeometry({0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {{1, 0, 0}, {1, 0, 0}}),
        std::invalid_argument);
    // stored r1 must agree with the coordinates to 1e-9
    REQUIRE_THROWS_AS(SensorGeometry({0, 0, -1}, {1, 0, -2}, {0, 0, 0}, {{1, 0, 0}}, 1.1, {2.0}),
                      std::invalid_argument);
    REQUIRE_NOTHROW(SensorGeometry({0, 0, -1}, {1, 0, -2}, {0, 0, 0}, {{1, 0, 0}}, 1.0, {2.0}));
    const Point3 nan{std::nan(""), 0, 0};
    REQUIRE_THROWS_AS(SensorGeometry(nan, {0, 0, 0}, {0, 0, 0}, {{1, 0, 0}}),
                      std::invalid_argument);
}

TEST_CASE("path_to_bin maps path intervals onto bins") {
    const TimeAxis axis(10e-12, 100);
    CHECK(path_to_bin(axis, 0.0) == 0u);
    CHECK(path_to_bin(axis, kSpeedOfLight * 10e-12 * 3.5) == 3u);  // mid-bin
    CHECK_FALSE(path_to_bin(axis, kSpeedOfLight * 10e-12 * 100.5).has_value());
    REQUIRE_THROWS_AS(path_to_bin(axis, -1.0), std::invalid_argument);
}

TEST_CASE("TimeAxis validation") {
    REQUIRE_THROWS_AS(TimeAxis(0.0, 10), std::invalid_argument);
    REQUIRE_THROWS_AS(TimeAxis(1e-12, 0), std::invalid_argument);
}

TEST_CASE("voxel index -> center -> index round-trips everywhere") {
    const VoxelGridSpec grid({-1, -0.5, 0}, {2, 1, 1}, {7, 5, 3});
    for (std::uint64_t v = 0; v < grid.num_voxels(); ++v) {
        const auto back = grid.voxel_of(grid.voxel_center(v));
        REQUIRE(back.has_value());
        REQUIRE(*back == v);
    }
    CHECK_FALSE(grid.voxel_of({-1.01, 0, 0.5}).has_value());
    CHECK_FALSE(grid.voxel_of({1.01, 0, 0.5}).has_value());
}

TEST_CASE("VoxelGridSpec validation and center formula") {
    REQUIRE_THROWS_AS(VoxelGridSpec({0, 0, 0}, {0, 1, 1}, {1, 1, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(VoxelGridSpec({0, 0, 0}, {1, 1, 1}, {0, 1, 1}), std::invalid_argument);
    const VoxelGridSpec g({1, 2, 3}, {2, 2, 2}, {4, 4, 4});
    const Point3 c = g.voxel_center(0, 0, 0);
    CHECK(c.x == Catch::Approx(1.25));
    CHECK(c.y == Catch::Approx(2.25));
    CHECK(c.z == Catch::Approx(3.25));
}

TEST_CASE("SceneObject invariants") {
    REQUIRE_THROWS_AS(SceneObject("o", 0.0, {{0, 0, 0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(SceneObject("o", 1.5, {{0, 0, 0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(SceneObject("o", 0.5, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(SceneObject("o", 0.5, {{0, 0, 0}}, {{0, 0, 1}, {0, 0, 1}}),
                      std::invalid_argument);
    REQUIRE_NOTHROW(SceneObject("o", 1.0, {{0, 0, 0}}));
}

TEST_CASE("plate sampling stays inside the nominal outline") {
    PlateSpec spec;
    spec.center = {0.5, -0.25, 0.75};
    spec.normal = {0, 0, -1};
    spec.size_u = 0.4;
    spec.spacing = 0.05;

    spec.shape = PlateShape::square;
    for (const auto& p : sample_plate(spec)) {
        CHECK(std::abs(p.x - spec.center.x) <= 0.2 + 1e-12);
        CHECK(std::abs(p.y - spec.center.y) <= 0.2 + 1e-12);
        CHECK(p.z == Catch::Approx(0.75));
    }
    CHECK(sample_plate(spec).size() == 81);  // 9x9 lattice at 5 cm spacing

    spec.shape = PlateShape::round;
    for (const auto& p : sample_plate(spec)) {
        const double dx = p.x - spec.center.x, dy = p.y - spec.center.y;
        CHECK(dx * dx + dy * dy <= 0.2 * 0.2 + 1e-12);
    }

    spec.shape = PlateShape::triangle;
    const auto tri = sample_plate(spec);
    CHECK(!tri.empty());
    for (const auto& p : tri)
        CHECK(oracle::naive_distance(p.x, p.y, p.z, spec.center.x, spec.center.y, spec.center.z) <=
              0.4 / std::sqrt(3.0) + 1e-12);
}

TEST_CASE("unknown plate shape is rejected") {
    REQUIRE_THROWS_AS(plate_shape_from_string("hex"), std::invalid_argument);
    CHECK(plate_shape_from_string("rect") == PlateShape::rect);
}

TEST_CASE("paper-sim fixture matches the published setup") {
    const SceneBundle b = make_grid_scene_fixture("paper-sim");
    CHECK(b.grid.dims == std::array<std::uint32_t, 3>{100, 100, 50});
    CHECK(b.grid.extent.x == Catch::Approx(2.0));
    CHECK(b.grid.extent.y == Catch::Approx(2.0));
    CHECK(b.grid.extent.z == Catch::Approx(1.0));
    CHECK(b.axis.num_bins == 4024);
    CHECK(b.axis.bin_width_s == Catch::Approx(10e-12));
    REQUIRE(b.scene.objects.size() == 3);
    // three plates with the published reflectivities
    std::vector<double> rho;
    for (const auto& o : b.scene.objects) rho.push_back(o.reflectivity);
    std::sort(rho.begin(), rho.end());
    CHECK(rho == std::vector<double>{0.1, 0.3, 1.0});
}

TEST_CASE("desk-sim fixture is strictly smaller than paper-sim") {
    const SceneBundle paper = make_grid_scene_fixture("paper-sim");
    const SceneBundle desk = make_grid_scene_fixture("desk-sim");
    for (int a = 0; a < 3; ++a) CHECK(desk.grid.dims[a] < paper.grid.dims[a]);
    CHECK(desk.axis.num_bins < paper.axis.num_bins);
    CHECK(desk.scene.geometry.num_image_points() < paper.scene.geometry.num_image_points());
    REQUIRE_THROWS_AS(make_grid_scene_fixture("lab-sim"), std::invalid_argument);
}

TEST_CASE("fixture object points lie inside the grid and on the time axis") {
    for (const char* name : {"desk-sim", "paper-sim"}) {
        const SceneBundle b = make_grid_scene_fixture(name);
        for (const auto& obj : b.scene.objects)
            for (const auto& p : obj.points) {
                REQUIRE(b.grid.voxel_of(p).has_value());
                for (std::size_t i = 0; i < b.scene.geometry.num_image_points(); ++i)
                    REQUIRE(path_to_bin(b.axis, path_length(b.scene.geometry, i, p)).has_value());
            }
    }
}
