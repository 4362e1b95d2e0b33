#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tafall/config.hpp"
#include "tafall/detector.hpp"
#include "tafall/scenario.hpp"

using namespace tafall;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Fixture {
    SkeletonTopology topo = default_skeleton();
    AnthropometricTable table;
    DetectorConfig config;

    Fixture() { table = load_anthropometric_table(default_table_path(), topo); }
};

// synthetic window with controllable features
std::vector<SmobSample> synthetic_window(int len, double smob, double com_z_step) {
    std::vector<SmobSample> window(len);
    for (int i = 0; i < len; ++i) {
        window[i].t = i * 0.05;
        window[i].com = {0, 0, 1.0 - com_z_step * i};
        window[i].bos = SupportPolygon{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, PolygonKind::Polygon};
        window[i].smob = smob;
    }
    return window;
}

}  // namespace

TEST_CASE("fall_probability: all-stable window gives sigmoid(-b)") {
    Fixture f;
    const auto window = synthetic_window(f.config.window_len, 0.2, 0.0);
    const double p = fall_probability(window, f.config);
    CHECK(p == doctest::Approx(sigmoid(-4.0)).epsilon(1e-9));
    CHECK(p == doctest::Approx(0.0180).epsilon(1e-2));
}

TEST_CASE("fall_probability: saturated features exceed the event threshold") {
    Fixture f;
    // deficit beyond 0.3 m, every frame unstable, descent beyond 2 m/s
    auto window = synthetic_window(f.config.window_len, -0.5, 0.15);
    const double p = fall_probability(window, f.config);
    CHECK(p == doctest::Approx(sigmoid(5.0)).epsilon(1e-9));
    CHECK(p >= 0.95);
    CHECK(sigmoid(5.0) == doctest::Approx(0.9933).epsilon(1e-3));
}

TEST_CASE("fall_probability: monotone non-decreasing in every feature") {
    Fixture f;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double smob = -0.4 * u(rng);
        const double step = 0.12 * u(rng);
        auto window = synthetic_window(f.config.window_len, smob, step);
        const double base = fall_probability(window, f.config);

        // deepen the deficit
        auto deeper = window;
        for (auto& s : deeper) {
            if (s.smob) s.smob = *s.smob - 0.05;
        }
        CHECK(fall_probability(deeper, f.config) >= base - 1e-12);

        // faster descent
        auto faster = window;
        for (size_t i = 0; i < faster.size(); ++i) faster[i].com.z = 1.0 - (step + 0.03) * i;
        CHECK(fall_probability(faster, f.config) >= base - 1e-12);

        // longer unstable run: flip the leading stable frames negative
        auto longer = window;
        for (size_t i = 0; i < longer.size() / 4; ++i) longer[i].smob = -0.01;
        if (smob >= 0.0) CHECK(fall_probability(longer, f.config) >= base - 1e-12);
    }
}

TEST_CASE("fall_probability: rejects short windows") {
    Fixture f;
    const auto window = synthetic_window(1, 0.1, 0.0);
    CHECK_THROWS_AS(fall_probability(window, f.config), std::invalid_argument);
}

TEST_CASE("detector config validation") {
    DetectorConfig bad;
    bad.stride = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = DetectorConfig{};
    bad.stride = bad.window_len + 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = DetectorConfig{};
    bad.p_fall_threshold = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("detect_stream: scripted falls produce exactly one event near the impact") {
    Fixture f;
    for (const std::string& name : fall_scenario_names()) {
        CAPTURE(name);
        const Scenario sc = make_scenario(name, 31);
        const DetectionResult result = detect_stream(sc.poses, {}, f.table, f.config);
        REQUIRE(result.events.size() == 1);
        const FallEvent& e = result.events[0];
        REQUIRE(e.t_impact.has_value());
        CHECK(std::abs(*e.t_impact - sc.scripted_impact_t) <= 10.0 / 20.0);
        CHECK(e.confidence >= f.config.p_fall_threshold);
        CHECK(e.t_onset <= *e.t_impact);
        CHECK(e.peak_deficit_m > 0.05);
    }
}

TEST_CASE("detect_stream: fall-like non-falls stay silent") {
    Fixture f;
    for (const std::string& name : nonfall_scenario_names()) {
        CAPTURE(name);
        const Scenario sc = make_scenario(name, 41);
        const DetectionResult result = detect_stream(sc.poses, {}, f.table, f.config);
        CHECK(result.events.empty());
    }
}

TEST_CASE("detect_stream: empty-room stream (absent presence) emits nothing") {
    Fixture f;
    const Scenario sc = make_scenario("forward_fall", 51);  // poses exist...
    std::vector<double> absent(sc.poses.frames.size(), 0.0);  // ...but nobody is detected
    const DetectionResult result = detect_stream(sc.poses, absent, f.table, f.config);
    CHECK(result.events.empty());
    for (const WindowRecord& w : result.windows) {
        CHECK_FALSE(w.evaluated);
        CHECK_FALSE(w.fired);
    }
}

TEST_CASE("gate soundness: no event comes from majority-absent spans") {
    Fixture f;
    std::mt19937_64 rng(61);
    const Scenario sc = make_scenario("backward_fall", 61);
    std::vector<double> presence(sc.poses.frames.size());
    for (double& p : presence) p = (rng() & 1) ? 0.05 : 0.0;  // never above threshold
    const DetectionResult result = detect_stream(sc.poses, presence, f.table, f.config);
    CHECK(result.events.empty());
}

TEST_CASE("threshold monotonicity: raising p_fall_threshold never adds events") {
    Fixture f;
    for (const std::string& name : fall_scenario_names()) {
        const Scenario sc = make_scenario(name, 71);
        DetectorConfig strict = f.config;
        strict.p_fall_threshold = 0.99;
        const size_t base = detect_stream(sc.poses, {}, f.table, f.config).events.size();
        const size_t stricter = detect_stream(sc.poses, {}, f.table, strict).events.size();
        CHECK(stricter <= base);
    }
}

TEST_CASE("merge idempotence: re-running on an event span reproduces the event") {
    Fixture f;
    const Scenario sc = make_scenario("forward_fall", 81);
    const DetectionResult first = detect_stream(sc.poses, {}, f.table, f.config);
    REQUIRE(first.events.size() == 1);

    // find the merged firing span and re-run the detector on exactly it
    int span_begin = -1, span_end = -1;
    for (const WindowRecord& w : first.windows) {
        if (!w.fired) continue;
        if (span_begin < 0) span_begin = w.start_frame;
        span_end = w.start_frame + f.config.window_len;
    }
    REQUIRE(span_begin >= 0);

    PoseSequence slice = sc.poses;
    slice.frames.assign(sc.poses.frames.begin() + span_begin,
                        sc.poses.frames.begin() + span_end);
    const DetectionResult second = detect_stream(slice, {}, f.table, f.config);
    REQUIRE(second.events.size() == 1);
    CHECK(second.events[0].t_onset == doctest::Approx(first.events[0].t_onset));
    REQUIRE(second.events[0].t_impact.has_value());
    CHECK(*second.events[0].t_impact == doctest::Approx(*first.events[0].t_impact));
}

TEST_CASE("accepted events never show a stable frame right before the impact") {
    Fixture f;
    for (const std::string& name : fall_scenario_names()) {
        const Scenario sc = make_scenario(name, 77);
        const DetectionResult result = detect_stream(sc.poses, {}, f.table, f.config);
        const SmobTrajectory traj = smob_trajectory(sc.poses, f.table, f.config.contact_epsilon);
        BalanceStateParams params;
        params.lob_persistence = f.config.lob_persistence;
        params.gis_height = f.config.gis_height;
        const BalanceStateSequence states = segment_states(traj, sc.poses, params);

        for (const FallEvent& e : result.events) {
            REQUIRE(e.t_impact.has_value());
            // locate the impact frame and check its predecessor's label
            for (size_t i = 1; i < traj.samples.size(); ++i) {
                if (traj.samples[i].t == *e.t_impact) {
                    CHECK(states.states[i] == BalanceState::GIS);
                    CHECK(states.states[i - 1] != BalanceState::SB);
                }
            }
        }
    }
}

TEST_CASE("offline equals frame-at-a-time streaming") {
    Fixture f;
    const Scenario sc = make_scenario("slip_fall", 91);
    const DetectionResult offline = detect_stream(sc.poses, {}, f.table, f.config);

    StreamingDetector online(sc.poses.topology, f.table, f.config);
    for (const WorldPose& pose : sc.poses.frames) online.push(pose, 1.0);
    const DetectionResult streamed = online.finish();

    REQUIRE(offline.events.size() == streamed.events.size());
    for (size_t i = 0; i < offline.events.size(); ++i)
        CHECK(offline.events[i] == streamed.events[i]);
    REQUIRE(offline.windows.size() == streamed.windows.size());
    for (size_t i = 0; i < offline.windows.size(); ++i) {
        CHECK(offline.windows[i].p == streamed.windows[i].p);
        CHECK(offline.windows[i].fired == streamed.windows[i].fired);
    }
}

TEST_CASE("sample history stays bounded over long quiet streams") {
    Fixture f;
    const Scenario sc = make_scenario("crouch", 99);
    StreamingDetector detector(sc.poses.topology, f.table, f.config);
    const WorldPose base = sc.poses.frames[0];
    for (int i = 0; i < 20000; ++i) {
        WorldPose pose = base;
        pose.t = i * 0.05;
        detector.push(pose, 1.0);
        CHECK(detector.history_size() <=
              static_cast<size_t>(f.config.window_len + f.config.stride));
    }
    CHECK(detector.frames_seen() == 20000);
    const DetectionResult result = detector.finish();
    CHECK(result.events.empty());
}

TEST_CASE("evaluate: detection rate and false-alarm arithmetic") {
    DetectorConfig config;
    SUBCASE("9 of 10 matched gives DR 0.9") {
        DetectionResult result;
        TruthScenario truth;
        for (int i = 0; i < 10; ++i) {
            truth.falls.push_back({i * 30.0, i * 30.0 + 2.0});
            if (i == 4) continue;  // miss one
            FallEvent e;
            e.t_onset = i * 30.0 + 0.4;
            e.t_impact = i * 30.0 + 1.0;
            e.confidence = 0.99;
            result.events.push_back(e);
        }
        truth.duration_s = 310.0;
        const DetectionReport report = evaluate(result, truth, config, 1.0);
        REQUIRE(report.dr.has_value());
        CHECK(*report.dr == doctest::Approx(0.9));
        CHECK(report.matched_events == 9);
        CHECK(report.missed_events == 1);
    }

    SUBCASE("2 firing windows out of 1000 non-fall windows gives FAR 0.002") {
        DetectionResult result;
        TruthScenario truth;
        truth.duration_s = 1000.0;
        for (int i = 0; i < 1000; ++i) {
            WindowRecord w;
            w.start_frame = i * 10;
            w.t_start = i * 1.0;
            w.t_end = i * 1.0 + 2.0;
            w.evaluated = true;
            w.fired = (i == 100 || i == 600);
            result.windows.push_back(w);
        }
        const DetectionReport report = evaluate(result, truth, config, 1.0);
        REQUIRE(report.far.has_value());
        CHECK(*report.far == doctest::Approx(0.002));
        CHECK(report.total_nonfall_windows == 1000);
        CHECK(report.false_windows == 2);
    }

    SUBCASE("zero denominators flag metrics undefined") {
        const DetectionReport report = evaluate({}, {}, config, 1.0);
        CHECK_FALSE(report.dr.has_value());
        CHECK_FALSE(report.far.has_value());
    }

    SUBCASE("each event matches at most one truth fall") {
        DetectionResult result;
        FallEvent e;
        e.t_onset = 10.0;
        e.t_impact = 10.5;
        result.events.push_back(e);
        result.events.push_back(e);  // duplicate event near the same fall
        TruthScenario truth;
        truth.duration_s = 60.0;
        truth.falls.push_back({9.5, 11.0});
        const DetectionReport report = evaluate(result, truth, config, 1.0);
        CHECK(report.matched_events == 1);
    }
}

TEST_CASE("event and truth files round-trip") {
    const std::string events_path = "/tmp/tafall_test_events.jsonl";
    const std::string truth_path = "/tmp/tafall_test_truth.json";

    std::vector<FallEvent> events;
    FallEvent a;
    a.t_onset = 3.25;
    a.t_impact = 4.0;
    a.peak_deficit_m = 0.31;
    a.confidence = 0.97;
    events.push_back(a);
    FallEvent b;
    b.t_onset = 9.0;
    b.confidence = 0.96;  // truncated event, no impact
    events.push_back(b);

    write_events_jsonl(events, events_path);
    const auto back = load_events_jsonl(events_path);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == events[0]);
    CHECK(back[1] == events[1]);

    TruthScenario truth;
    truth.duration_s = 42.0;
    truth.falls.push_back({3.0, 4.5});
    write_truth_json(truth, truth_path);
    const TruthScenario truth_back = load_truth_json(truth_path);
    CHECK(truth_back.duration_s == 42.0);
    REQUIRE(truth_back.falls.size() == 1);
    CHECK(truth_back.falls[0].start_s == 3.0);

    std::remove(events_path.c_str());
    std::remove(truth_path.c_str());
}
