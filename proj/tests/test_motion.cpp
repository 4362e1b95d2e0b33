#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tafall/config.hpp"
#include "tafall/motion.hpp"
#include "tafall/recording.hpp"
#include "tafall/scenario.hpp"

using namespace tafall;

namespace {

TemperatureFrame frame_of(int w, int h, double value) {
    return TemperatureFrame::uniform(w, h, value);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar recursion oracle, one pixel at a time.
std::vector<double> mhi_scalar_oracle(const std::vector<std::vector<double>>& masks, double gamma,
                                      size_t pixel) {
    std::vector<double> out;
    double m = 0.0;
    for (const auto& mask : masks) {
        m = std::max(gamma * m, mask[pixel]);
        out.push_back(m);
    }
    return out;
}

}  // namespace

TEST_CASE("soft_motion_mask: identical frames give sigmoid(-k*theta) everywhere") {
    const MhiParams params{50.0, 0.05, 0.9};
    const auto a = frame_of(8, 6, 25.0);
    const MotionGrid mask = soft_motion_mask(a, a, params);
    const double want = sigmoid(-2.5);
    CHECK(want == doctest::Approx(0.0759).epsilon(1e-3));
    for (double v : mask.values) CHECK(v == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("soft_motion_mask: |diff| at theta sits exactly on the sigmoid midpoint") {
    MhiParams params{50.0, 0.05, 0.9};
    auto a = frame_of(4, 4, 20.0);
    auto b = a;
    // normalized difference of exactly theta: theta * range over the sensor span
    b.at(1, 1) = a.at(1, 1) + params.theta * (kSensorMaxC - kSensorMinC);
    const MotionGrid mask = soft_motion_mask(b, a, params);
    CHECK(mask.at(1, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("soft_motion_mask: saturation for large differences and sharp k") {
    MhiParams params{500.0, 0.05, 0.9};
    auto a = frame_of(4, 4, kSensorMinC);
    auto b = frame_of(4, 4, kSensorMaxC);  // normalized |diff| = 1
    const MotionGrid mask = soft_motion_mask(b, a, params);
    for (double v : mask.values) CHECK(v > 1.0 - 1e-9);
}

TEST_CASE("soft_motion_mask: dimension mismatch is an error") {
    CHECK_THROWS_AS(soft_motion_mask(frame_of(4, 4, 20), frame_of(5, 4, 20), {}),
                    std::invalid_argument);
}

TEST_CASE("mhi_update: impulse decays as gamma^n") {
    const double gamma = 0.9;
    MotionHistoryImage mhi = MotionHistoryImage::zeros(3, 2);
    MotionGrid mask;
    mask.width = 3;
    mask.height = 2;
    mask.values.assign(6, 0.0);

    // mask sequence (1, 0, 0): values 1, 0.9, 0.81
    mask.values[0] = 1.0;
    mhi = mhi_update(mhi, mask, gamma);
    CHECK(mhi.grid.values[0] == 1.0);
    mask.values[0] = 0.0;
    mhi = mhi_update(mhi, mask, gamma);
    CHECK(mhi.grid.values[0] == doctest::Approx(0.9));
    mhi = mhi_update(mhi, mask, gamma);
    CHECK(mhi.grid.values[0] == doctest::Approx(0.81));
}

TEST_CASE("mhi_update: all-ones mask is a fixed point") {
    MotionHistoryImage mhi = MotionHistoryImage::zeros(4, 4);
    MotionGrid ones;
    ones.width = ones.height = 4;
    ones.values.assign(16, 1.0);
    for (int i = 0; i < 10; ++i) {
        mhi = mhi_update(mhi, ones, 0.9);
        for (double v : mhi.grid.values) CHECK(v == 1.0);
    }
}

TEST_CASE("mhi_update matches the per-pixel scalar recursion oracle exactly") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int stream = 0; stream < 100; ++stream) {
        const int w = 5, h = 4, steps = 20;
        const double gamma = 0.5 + 0.49 * u(rng);
        std::vector<std::vector<double>> masks(steps, std::vector<double>(w * h));
        for (auto& m : masks)
            for (double& v : m) v = u(rng);

        MotionHistoryImage mhi = MotionHistoryImage::zeros(w, h);
        std::vector<std::vector<double>> history;
        for (int s = 0; s < steps; ++s) {
            MotionGrid mask{w, h, masks[s]};
            mhi = mhi_update(mhi, mask, gamma);
            history.push_back(mhi.grid.values);
        }
        for (size_t pixel = 0; pixel < static_cast<size_t>(w * h); pixel += 7) {
            const std::vector<double> want = mhi_scalar_oracle(masks, gamma, pixel);
            for (int s = 0; s < steps; ++s) {
                CHECK(history[s][pixel] == want[s]);  // exact
            }
        }
    }
}

TEST_CASE("MHI boundedness and exact decay under zero masks") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MotionHistoryImage mhi = MotionHistoryImage::zeros(6, 6);
    MotionGrid mask{6, 6, std::vector<double>(36)};
    for (int s = 0; s < 50; ++s) {
        for (double& v : mask.values) v = u(rng);
        mhi = mhi_update(mhi, mask, 0.9);
        for (double v : mhi.grid.values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    // masks == 0 afterwards: M_{t0+n} = gamma^n * M_t0 exactly (as the same
    // left-to-right multiplication chain)
    std::vector<double> expected = mhi.grid.values;
    for (double& v : mask.values) v = 0.0;
    for (int n = 1; n <= 20; ++n) {
        mhi = mhi_update(mhi, mask, 0.9);
        for (size_t i = 0; i < expected.size(); ++i) {
            expected[i] *= 0.9;
            CHECK(mhi.grid.values[i] == expected[i]);
        }
    }
}

TEST_CASE("biased_attention: 1x1 and closed-form bias cases") {
    CHECK(biased_attention({{3.7}}, {{0.0}})[0][0] == 1.0);

    const auto out = biased_attention({{0.0, 0.0}}, {{0.0, std::log(2.0)}});
    CHECK(out[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(out[0][1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("biased_attention matches a naive two-pass softmax oracle") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 8;
        std::vector<std::vector<double>> scores(n, std::vector<double>(n));
        std::vector<std::vector<double>> bias(n, std::vector<double>(n));
        for (auto& row : scores)
            for (double& v : row) v = u(rng);
        for (auto& row : bias)
            for (double& v : row) v = u(rng);

        const auto got = biased_attention(scores, bias);
        for (int r = 0; r < n; ++r) {
            double denom = 0.0;
            for (int c = 0; c < n; ++c) denom += std::exp(scores[r][c] + bias[r][c]);
            double row_sum = 0.0;
            for (int c = 0; c < n; ++c) {
                const double want = std::exp(scores[r][c] + bias[r][c]) / denom;
                CHECK(std::abs(got[r][c] - want) < 1e-12);
                row_sum += got[r][c];
            }
            CHECK(std::abs(row_sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("biased_attention: row-constant shifts cancel; bias strictly reweights") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<std::vector<double>> scores(4, std::vector<double>(4));
    std::vector<std::vector<double>> bias(4, std::vector<double>(4, 0.0));
    for (auto& row : scores)
        for (double& v : row) v = u(rng);

    const auto base = biased_attention(scores, bias);
    auto shifted = scores;
    for (double& v : shifted[2]) v += 7.25;
    const auto out = biased_attention(shifted, bias);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(out[2][c] - base[2][c]) < 1e-12);

    bias[1][3] += 0.5;
    const auto biased = biased_attention(scores, bias);
    CHECK(biased[1][3] > base[1][3]);

    CHECK_THROWS_AS(
        biased_attention({{std::numeric_limits<double>::infinity()}}, {{0.0}}),
        std::invalid_argument);
}

TEST_CASE("detect_presence: uniform ambient frame reports nothing") {
    const auto frame = frame_of(80, 62, 22.0);
    CHECK_FALSE(detect_presence(frame, 22.0).has_value());
}

TEST_CASE("detect_presence: rendered person found with solid confidence") {
    const SkeletonTopology topo = default_skeleton();
    const auto profile = load_thermal_profile(default_profile_path(), topo);
    const CameraModel camera = CameraModel::look_at({0, -2.0, 1.0}, {0, 0, 0.9});
    const Scenario sc = make_scenario("crouch", 1);
    const RenderResult r = render_frame(sc.poses.frames[0], profile, camera, {});
    REQUIRE(r.silhouette_px > 100);

    const auto det = detect_presence(r.frame, profile.ambient_c);
    REQUIRE(det.has_value());
    CHECK(det->confidence >= 0.5);

    // bbox covers at least 90% of the renderer's silhouette pixels
    int covered = 0;
    for (int y = 0; y < r.frame.height; ++y) {
        for (int x = 0; x < r.frame.width; ++x) {
            if (r.part_labels[static_cast<size_t>(y) * r.frame.width + x] >= 0 &&
                det->bbox.contains(x, y))
                ++covered;
        }
    }
    CHECK(covered >= 0.9 * r.silhouette_px);
}

TEST_CASE("detect_presence: the larger of two disjoint blobs wins") {
    auto frame = frame_of(40, 30, 22.0);
    for (int y = 2; y < 6; ++y)
        for (int x = 2; x < 6; ++x) frame.at(x, y) = 30.0;  // 16 px
    for (int y = 15; y < 25; ++y)
        for (int x = 20; x < 30; ++x) frame.at(x, y) = 28.0;  // 100 px
    const auto det = detect_presence(frame, 22.0);
    REQUIRE(det.has_value());
    CHECK(det->bbox.x0 == 20);
    CHECK(det->bbox.y0 == 15);
    CHECK(det->area_px == 100);
}

TEST_CASE("mask_frame: full-frame bbox is the identity; background is suppressed") {
    auto frame = frame_of(20, 10, 22.0);
    frame.at(3, 3) = 31.0;   // body-ish blob
    frame.at(4, 3) = 31.0;
    frame.at(15, 8) = 40.0;  // hot object far away

    PresenceDetection det;
    det.bbox = {0, 0, 19, 9};
    CHECK(mask_frame(frame, det, 0, 22.0) == frame);

    det.bbox = {3, 3, 4, 3};
    const TemperatureFrame masked = mask_frame(frame, det, 0, 22.0);
    CHECK(masked.at(3, 3) == 31.0);
    CHECK(masked.at(15, 8) == 22.0);

    det.bbox = {15, 5, 25, 9};  // out of bounds
    CHECK_THROWS_AS(mask_frame(frame, det, 0, 22.0), std::invalid_argument);
}

TEST_CASE("mask_frame: re-detection is a fixed point of the detector") {
    const SkeletonTopology topo = default_skeleton();
    const auto profile = load_thermal_profile(default_profile_path(), topo);
    const CameraModel camera = CameraModel::look_at({0, -2.0, 1.0}, {0, 0, 0.9});
    const Scenario sc = make_scenario("crouch", 1);
    RenderResult r = render_frame(sc.poses.frames[0], profile, camera,
                                  std::vector<HotRect>{{70, 2, 78, 9, 33.0}});

    const auto det = detect_presence(r.frame, profile.ambient_c);
    REQUIRE(det.has_value());
    const TemperatureFrame masked = mask_frame(r.frame, *det, 1, profile.ambient_c);
    const auto again = detect_presence(masked, profile.ambient_c);
    REQUIRE(again.has_value());
    CHECK(std::abs(again->center.x - det->center.x) <= 1.0);
    CHECK(std::abs(again->center.y - det->center.y) <= 1.0);
}

TEST_CASE("MHI sequences round-trip through the .taf container") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<MotionHistoryImage> seq;
    for (int i = 0; i < 5; ++i) {
        MotionHistoryImage mhi = MotionHistoryImage::zeros(12, 9);
        mhi.timestamp = i * 0.05;
        for (double& v : mhi.grid.values) v = std::round(u(rng) * 10000.0) / 10000.0;
        seq.push_back(std::move(mhi));
    }

    const std::string path = "/tmp/tafall_test_mhi.taf";
    Recording rec = record_mhi_sequence(seq, 2, 20.0);
    CHECK(rec.header.content == RecordingContent::Mhi);
    rec.save(path);

    const Recording back = Recording::load(path);
    CHECK(back.header.content == RecordingContent::Mhi);
    const auto decoded = decode_mhi_recording(back);
    REQUIRE(decoded.size() == seq.size());
    for (size_t i = 0; i < seq.size(); ++i) {
        CHECK(decoded[i].grid.values == seq[i].grid.values);
        // timestamps ride the wire at microsecond resolution
        CHECK(std::abs(decoded[i].timestamp - seq[i].timestamp) < 1e-6);
    }
    // a temperature recording refuses to decode as MHI
    Recording wrong = back;
    wrong.header.content = RecordingContent::Temperature;
    CHECK_THROWS(decode_mhi_recording(wrong));
    std::remove(path.c_str());
}

TEST_CASE("static simulated scene: MHI peak decays geometrically to the mask floor") {
    const SkeletonTopology topo = default_skeleton();
    const auto table = load_anthropometric_table(default_table_path(), topo);
    const auto profile = load_thermal_profile(default_profile_path(), topo);
    const CameraModel camera = CameraModel::look_at({0, -2.0, 1.0}, {0, 0, 0.9});

    // a short move followed by an exactly-frozen pose, no noise
    const Scenario sc = make_scenario("fast_sit", 3);
    PoseSequence script = sc.poses;
    script.frames.resize(50);
    while (script.frames.size() < 80) {
        PoseFrame frozen = script.frames.back();
        frozen.t += 1.0 / script.frame_rate;
        script.frames.push_back(std::move(frozen));
    }
    SimParams params;
    params.sigma_noise_c = 0.0;
    const SimOutput sim = simulate_sequence(script, camera, profile, table, {}, params);

    MhiParams mp;
    MotionHistoryImage mhi = MotionHistoryImage::zeros(camera.width, camera.height);
    MotionGrid prev_mask{camera.width, camera.height,
                         std::vector<double>(static_cast<size_t>(camera.width) * camera.height, 0.0)};
    std::vector<double> peaks;
    for (size_t i = 0; i < sim.frames.size(); ++i) {
        mhi = mhi_update(mhi, prev_mask, mp.gamma, sim.frames[i].timestamp);
        if (i > 0) prev_mask = soft_motion_mask(sim.frames[i], sim.frames[i - 1], mp);
        peaks.push_back(mhi.grid.max_value());
    }
    const double floor = sigmoid(-mp.k * mp.theta);
    // the sit transition ends by frame 50 of this clip; from there the peak
    // follows gamma^n until it reaches the static-mask floor
    const double peak0 = peaks[55];
    REQUIRE(peak0 > floor);
    double expect = peak0;
    for (size_t i = 56; i < peaks.size(); ++i) {
        expect = std::max(expect * mp.gamma, floor);
        CHECK(std::abs(peaks[i] - expect) < 1e-12);
    }
    CHECK(peaks.back() < 0.08);  // settled at the noise floor, body "silent"
}
