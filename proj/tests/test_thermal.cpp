#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "tafall/config.hpp"
#include "tafall/scenario.hpp"
#include "tafall/thermal.hpp"

using namespace tafall;

namespace {

// Simpson quadrature of x * h(x) over [0, truncation*a], normalized by the
// integral of h over the same interval.
double psf_mean_oracle(double a, double truncation) {
    const double hi = truncation * a;
    const int n = 4000;  // even
    const double dx = hi / n;
    auto h = [&](double x) { return std::exp(-x / a) / a; };
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = i * dx;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        num += w * x * h(x);
        den += w * h(x);
    }
    return num / den;
}

struct Fixture {
    SkeletonTopology topo = default_skeleton();
    AnthropometricTable table;
    BodyThermalProfile profile;
    CameraModel camera = CameraModel::look_at({0, -2.0, 1.0}, {0, 0, 0.9});

    Fixture() {
        table = load_anthropometric_table(default_table_path(), topo);
        profile = load_thermal_profile(default_profile_path(), topo);
    }

    WorldPose standing_at(double y_m) const {
        const Scenario sc = make_scenario("crouch", 1);  // opens standing
        WorldPose pose = sc.poses.frames[0];
        for (Vec3& j : pose.joints) j.y += y_m;
        return pose;
    }
};

int support_width_along(const TemperatureFrame& frame, double ambient, const Vec2& dir) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            if (frame.at(x, y) > ambient + 0.5) {
                const double s = x * dir.x + y * dir.y;
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
    }
    return hi >= lo ? static_cast<int>(std::lround(hi - lo)) : 0;
}

}  // namespace

TEST_CASE("psf_kernel: v = 0 yields the identity tap") {
    const PsfKernel k = psf_kernel(0.0, 20.0, 0.1);
    REQUIRE(k.taps.size() == 1);
    CHECK(k.taps[0] == 1.0);
    CHECK(k.scale_px == 0.0);
}

TEST_CASE("psf_kernel: negative velocity and bad params are rejected") {
    CHECK_THROWS_AS(psf_kernel(-1.0, 20.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(psf_kernel(1.0, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(psf_kernel(1.0, 20.0, 0.0), std::invalid_argument);
}

TEST_CASE("psf_kernel: taps normalize to 1 and stay non-negative") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uv(0.05, 6.0), ur(5.0, 60.0), ut(0.02, 0.3);
    for (int i = 0; i < 100; ++i) {
        const PsfKernel k = psf_kernel(uv(rng), ur(rng), ut(rng));
        const double sum = std::accumulate(k.taps.begin(), k.taps.end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (double t : k.taps) CHECK(t >= 0.0);
        CHECK(k.taps[0] > 0.0);
    }
}

TEST_CASE("psf_kernel: discrete mean tracks the quadrature oracle") {
    // the a = 2 px reference case
    const PsfKernel k2 = psf_kernel(1.0, 20.0, 0.1);  // a = 2 px
    CHECK(k2.scale_px == doctest::Approx(2.0));
    CHECK(std::abs(k2.mean_px() - 2.0) < 0.1);
    CHECK(std::abs(k2.mean_px() - psf_mean_oracle(2.0, 6.0)) < 0.1);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ua(0.15, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double a = ua(rng);
        const PsfKernel k = psf_kernel(a, 1.0, 1.0);
        CHECK(std::abs(k.mean_px() - psf_mean_oracle(a, 6.0)) < 0.1);
    }
}

TEST_CASE("render_frame: empty frustum yields pure background") {
    Fixture f;
    WorldPose pose = f.standing_at(-6.0);  // far behind the camera
    const RenderResult r = render_frame(pose, f.profile, f.camera, {});
    CHECK(r.silhouette_px == 0);
    for (double c : r.frame.celsius) CHECK(c == f.profile.ambient_c);

    const std::vector<HotRect> hot{{3, 4, 6, 8, 30.0}};
    const TemperatureFrame bg = background_frame(f.camera, f.profile.ambient_c, hot);
    CHECK(bg.at(4, 5) == 30.0);
    CHECK(bg.at(0, 0) == f.profile.ambient_c);
}

TEST_CASE("render_frame: head pixels run hotter than torso pixels") {
    Fixture f;
    const WorldPose pose = f.standing_at(0.0);
    const RenderResult r = render_frame(pose, f.profile, f.camera, {});
    REQUIRE(r.silhouette_px > 50);

    int head_part = -1, trunk_part = -1;
    for (size_t i = 0; i < f.profile.parts.size(); ++i) {
        if (f.profile.parts[i].name == "head") head_part = static_cast<int>(i);
        if (f.profile.parts[i].name == "trunk") trunk_part = static_cast<int>(i);
    }
    double head_min = 1e9, trunk_max = -1e9;
    for (int y = 0; y < r.frame.height; ++y) {
        for (int x = 0; x < r.frame.width; ++x) {
            const int part = r.part_labels[static_cast<size_t>(y) * r.frame.width + x];
            if (part == head_part) head_min = std::min(head_min, r.frame.at(x, y));
            if (part == trunk_part) trunk_max = std::max(trunk_max, r.frame.at(x, y));
        }
    }
    CHECK(head_min > trunk_max);
}

TEST_CASE("render_frame: silhouette shrinks with distance") {
    Fixture f;
    const RenderResult near = render_frame(f.standing_at(0.0), f.profile, f.camera, {});
    const RenderResult far = render_frame(f.standing_at(1.5), f.profile, f.camera, {});
    CHECK(near.silhouette_px > far.silhouette_px);
    CHECK(far.silhouette_px > 0);

    // projected-area oracle: pixel count scales roughly with 1/depth^2
    const double ratio = static_cast<double>(near.silhouette_px) / far.silhouette_px;
    const double want = (3.5 * 3.5) / (2.0 * 2.0);
    CHECK(ratio == doctest::Approx(want).epsilon(0.35));
}

TEST_CASE("blur_and_noise: static pose with zero noise reproduces the sharp frame") {
    Fixture f;
    const WorldPose pose = f.standing_at(0.0);
    RenderResult sharp = render_frame(pose, f.profile, f.camera, {});
    WorldPose prev = pose;
    prev.t = pose.t;  // dt = 0 path
    const TemperatureFrame out =
        blur_and_noise(sharp, prev, pose, f.profile, f.camera, {}, 0.1, 0.0, 7);

    TemperatureFrame want = sharp.frame;
    want.clamp_to_sensor_range();
    want.quantize_centi();
    CHECK(out == want);
}

TEST_CASE("blur_and_noise: lateral motion widens the support along the motion axis") {
    Fixture f;
    const WorldPose base = f.standing_at(0.0);
    int prev_width = 0;
    // velocity sweep: support width along x never decreases
    for (int step = 0; step <= 9; ++step) {
        WorldPose prev = base;
        prev.t = 0.0;
        WorldPose cur = base;
        cur.t = 0.05;
        const double v = 0.5 * step;  // m/s
        for (Vec3& j : cur.joints) j.x += v * 0.05;
        RenderResult sharp = render_frame(cur, f.profile, f.camera, {});
        const TemperatureFrame out =
            blur_and_noise(sharp, prev, cur, f.profile, f.camera, {}, 0.1, 0.0, 7);
        const int width = support_width_along(out, f.profile.ambient_c, {1.0, 0.0});
        CHECK(width >= prev_width);
        if (step == 4) {
            RenderResult sharp_only = sharp;
            const int sharp_width =
                support_width_along(sharp_only.frame, f.profile.ambient_c, {1.0, 0.0});
            CHECK(width > sharp_width);  // strictly wider under fast motion
        }
        prev_width = width;
    }
}

TEST_CASE("blur_and_noise: energy is conserved within 1% for sigma = 0") {
    Fixture f;
    WorldPose prev = f.standing_at(0.0);
    prev.t = 0.0;
    WorldPose cur = prev;
    cur.t = 0.05;
    for (Vec3& j : cur.joints) j.x += 1.5 * 0.05;

    RenderResult sharp = render_frame(cur, f.profile, f.camera, {});
    const TemperatureFrame out =
        blur_and_noise(sharp, prev, cur, f.profile, f.camera, {}, 0.1, 0.0, 3);

    const TemperatureFrame bg = background_frame(f.camera, f.profile.ambient_c, {});
    double sharp_mass = 0.0, out_mass = 0.0;
    for (size_t i = 0; i < bg.celsius.size(); ++i) {
        sharp_mass += sharp.frame.celsius[i] - bg.celsius[i];
        out_mass += out.celsius[i] - bg.celsius[i];
    }
    CHECK(out_mass == doctest::Approx(sharp_mass).epsilon(0.01));
}

TEST_CASE("blur_and_noise: gaussian noise std comes out as configured") {
    Fixture f;
    // 125 x 80 = 10^4 pixels of pure background
    const CameraModel wide = CameraModel::look_at({0, -2.0, 1.0}, {0, 0, 0.9}, 125, 80);
    WorldPose pose = f.standing_at(-6.0);  // background only
    RenderResult sharp = render_frame(pose, f.profile, wide, {});
    const double sigma = 0.5;
    const TemperatureFrame out =
        blur_and_noise(sharp, pose, pose, f.profile, wide, {}, 0.1, sigma, 99);

    double mean = 0.0;
    for (double c : out.celsius) mean += c - f.profile.ambient_c;
    mean /= static_cast<double>(out.celsius.size());
    double var = 0.0;
    for (double c : out.celsius) {
        const double d = c - f.profile.ambient_c - mean;
        var += d * d;
    }
    var /= static_cast<double>(out.celsius.size() - 1);
    CHECK(std::sqrt(var) == doctest::Approx(sigma).epsilon(0.10));
}

TEST_CASE("simulate_sequence: ground truth aligned, deterministic, noise-independent") {
    Fixture f;
    const Scenario sc = make_scenario("fast_sit", 11);
    PoseSequence script = sc.poses;
    script.frames.resize(30);

    SimParams params;
    params.sigma_noise_c = 0.3;
    params.seed = 5;
    const SimOutput a = simulate_sequence(script, f.camera, f.profile, f.table, {}, params);
    const SimOutput b = simulate_sequence(script, f.camera, f.profile, f.table, {}, params);
    params.seed = 6;
    const SimOutput c = simulate_sequence(script, f.camera, f.profile, f.table, {}, params);

    REQUIRE(a.frames.size() == script.frames.size());
    REQUIRE(a.pose25d.frames.size() == script.frames.size());
    REQUIRE(a.trajectory.samples.size() == script.frames.size());
    REQUIRE(a.states.states.size() == script.frames.size());

    // determinism: same seed gives bit-identical frames
    for (size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i] == b.frames[i]);
    // different seed: same ground truth, different noise realization
    CHECK(a.pose25d.frames == c.pose25d.frames);
    bool any_difference = false;
    for (size_t i = 0; i < a.frames.size(); ++i) {
        if (!(a.frames[i] == c.frames[i])) any_difference = true;
    }
    CHECK(any_difference);

    // projection consistency: 2.5D ground truth equals project() joint-wise
    for (size_t i = 0; i < script.frames.size(); ++i) {
        const Pose25D want = project_pose(script.frames[i], f.camera);
        CHECK(a.pose25d.frames[i] == want);
    }
}

TEST_CASE("simulate_sequence: single static frame is labeled SB") {
    Fixture f;
    const Scenario sc = make_scenario("crouch", 2);
    PoseSequence script = sc.poses;
    script.frames.resize(1);
    const SimOutput out = simulate_sequence(script, f.camera, f.profile, f.table, {}, {});
    REQUIRE(out.frames.size() == 1);
    REQUIRE(out.states.states.size() == 1);
    CHECK(out.states.states[0] == BalanceState::SB);
}

TEST_CASE("simulate_sequence: scripted fall has GIS after a margin sign change") {
    Fixture f;
    const Scenario sc = make_scenario("forward_fall", 4);
    const SimOutput out = simulate_sequence(sc.poses, f.camera, f.profile, f.table, {}, {});

    int first_gis = -1;
    for (size_t i = 0; i < out.states.states.size(); ++i) {
        if (out.states.states[i] == BalanceState::GIS) {
            first_gis = static_cast<int>(i);
            break;
        }
    }
    REQUIRE(first_gis > 0);
    bool sign_change_before_gis = false;
    for (int i = 1; i <= first_gis; ++i) {
        if (out.trajectory.samples[i - 1].smob && out.trajectory.samples[i].smob &&
            *out.trajectory.samples[i - 1].smob >= 0 && *out.trajectory.samples[i].smob < 0)
            sign_change_before_gis = true;
    }
    CHECK(sign_change_before_gis);
}

TEST_CASE("thermal profile validation") {
    Fixture f;
    BodyThermalProfile bad = f.profile;
    bad.parts[0].temp_c = bad.ambient_c - 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
