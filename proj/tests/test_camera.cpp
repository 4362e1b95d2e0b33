#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tafall/camera.hpp"

using namespace tafall;

namespace {

CameraModel reference_camera() {
    return CameraModel::look_at({0, -2, 1.0}, {0, 1, 1.0});  // level, facing +y
}

}  // namespace

TEST_CASE("point on the optical axis projects to the image center") {
    const CameraModel cam = reference_camera();
    const auto p = project({0, 0, 1.0}, cam);  // 2 m ahead
    REQUIRE(p.has_value());
    CHECK(p->u == doctest::Approx(0.5));
    CHECK(p->v == doctest::Approx(0.5));
    CHECK(p->depth == doctest::Approx(2.0));
}

TEST_CASE("a point at half the horizontal FoV lands on the u=1 boundary") {
    const CameraModel cam = reference_camera();
    // 45 degrees azimuth at depth 2: x = z for the analytic oracle
    const auto p = project({2.0, 0.0, 1.0}, cam);
    REQUIRE(p.has_value());
    // oracle: u = 0.5 + (x/z) * fx / W with fx = (W/2) / tan(45 deg)
    const double fx = (cam.width / 2.0) / std::tan(M_PI / 4.0);
    const double want = 0.5 + (2.0 / 2.0) * fx / cam.width;
    CHECK(want == doctest::Approx(1.0));
    CHECK(p->u == doctest::Approx(1.0));
    CHECK(p->v == doctest::Approx(0.5));
}

TEST_CASE("points behind the camera are rejected") {
    const CameraModel cam = reference_camera();
    CHECK_FALSE(project({0, -3, 1.0}, cam).has_value());
    CHECK_FALSE(project({0, -2, 1.0}, cam).has_value());  // depth exactly 0
}

TEST_CASE("unproject inverts project for random in-frustum points") {
    const CameraModel cam =
        CameraModel::look_at({1.5, -2.5, 1.8}, {0, 0, 0.9});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    std::uniform_real_distribution<double> uz(0.0, 1.9);
    int tested = 0;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p{u(rng), u(rng), uz(rng)};
        const auto proj = project(p, cam);
        if (!proj || proj->u < 0 || proj->u > 1 || proj->v < 0 || proj->v > 1) continue;
        const Vec3 back = unproject(*proj, cam);
        CHECK(std::abs(back.x - p.x) < 1e-9);
        CHECK(std::abs(back.y - p.y) < 1e-9);
        CHECK(std::abs(back.z - p.z) < 1e-9);
        ++tested;
    }
    CHECK(tested > 500);
}

TEST_CASE("camera validation rejects degenerate grids and FoV") {
    CameraModel cam = reference_camera();
    cam.width = 0;
    CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
    cam = reference_camera();
    cam.hfov_deg = 180.0;
    CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
}

TEST_CASE("sample_virtual_camera: degenerate ranges give that exact camera") {
    CameraBounds bounds;
    bounds.radius_min = bounds.radius_max = 2.5;
    bounds.height_min = bounds.height_max = 1.3;
    bounds.yaw_min = bounds.yaw_max = M_PI / 3.0;
    const CameraModel cam = sample_virtual_camera(42, bounds, {0, 0, 0.9});
    CHECK(cam.position.x == doctest::Approx(2.5 * std::cos(M_PI / 3.0)));
    CHECK(cam.position.y == doctest::Approx(2.5 * std::sin(M_PI / 3.0)));
    CHECK(cam.position.z == doctest::Approx(1.3));
}

TEST_CASE("sample_virtual_camera: same seed, same camera; empty range rejected") {
    CameraBounds bounds;
    const CameraModel a = sample_virtual_camera(1234, bounds, {0, 0, 0.9});
    const CameraModel b = sample_virtual_camera(1234, bounds, {0, 0, 0.9});
    CHECK(a.position == b.position);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(a.world_to_cam.m[r][c] == b.world_to_cam.m[r][c]);

    CameraBounds bad;
    bad.radius_min = 3.0;
    bad.radius_max = 2.0;
    CHECK_THROWS_AS(sample_virtual_camera(1, bad, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("sample_virtual_camera: bounds respected and uniform by chi-square") {
    CameraBounds bounds;
    bounds.radius_min = 1.5;
    bounds.radius_max = 4.0;
    bounds.height_min = 0.8;
    bounds.height_max = 2.2;
    bounds.yaw_min = 0.0;
    bounds.yaw_max = 2.0 * M_PI;

    const int n = 10000;
    const int bins = 10;
    std::vector<int> radius_bins(bins, 0), height_bins(bins, 0), yaw_bins(bins, 0);
    for (int i = 0; i < n; ++i) {
        const CameraModel cam = sample_virtual_camera(1000 + i, bounds, {0, 0, 0.9});
        const double radius = std::hypot(cam.position.x, cam.position.y);
        const double yaw = std::atan2(cam.position.y, cam.position.x);
        CHECK(radius >= bounds.radius_min - 1e-9);
        CHECK(radius <= bounds.radius_max + 1e-9);
        CHECK(cam.position.z >= bounds.height_min - 1e-9);
        CHECK(cam.position.z <= bounds.height_max + 1e-9);

        auto bin = [&](double v, double lo, double hi) {
            return std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
        };
        radius_bins[bin(radius, bounds.radius_min, bounds.radius_max)]++;
        height_bins[bin(cam.position.z, bounds.height_min, bounds.height_max)]++;
        yaw_bins[bin(yaw, -M_PI, M_PI)]++;
    }

    // chi-square with 9 dof: accept uniformity when the statistic stays below
    // the p=0.01 critical value 21.666
    auto chi2 = [&](const std::vector<int>& counts) {
        const double expected = static_cast<double>(n) / bins;
        double acc = 0.0;
        for (int c : counts) acc += (c - expected) * (c - expected) / expected;
        return acc;
    };
    CHECK(chi2(radius_bins) < 21.666);
    CHECK(chi2(height_bins) < 21.666);
    CHECK(chi2(yaw_bins) < 21.666);
}

TEST_CASE("sampled cameras look at the subject center") {
    CameraBounds bounds;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const Vec3 target{0.3, -0.2, 0.9};
        const CameraModel cam = sample_virtual_camera(seed, bounds, target);
        const auto p = project(target, cam);
        REQUIRE(p.has_value());
        CHECK(p->u == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p->v == doctest::Approx(0.5).epsilon(1e-9));
    }
}
