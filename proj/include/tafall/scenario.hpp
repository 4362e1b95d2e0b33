#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tafall/detector.hpp"
#include "tafall/pose.hpp"

namespace tafall {

// A scripted single-person episode: 20 Hz world-space poses plus labeled
// ground truth. Fall scripts carry the scripted impact time (first frame the
// pelvis passes below the default ground-impact height).
struct Scenario {
    std::string name;
    bool is_fall = false;
    PoseSequence poses;
    TruthScenario truth;
    double scripted_impact_t = -1.0;  // seconds; falls only
};

// forward_fall, backward_fall, lateral_fall, slip_fall, trip_fall
const std::vector<std::string>& fall_scenario_names();

// fast_sit, pickup, lie_down_bed, crouch, walk_out
const std::vector<std::string>& nonfall_scenario_names();

// Throws on unknown names. The seed jitters start position, heading, and
// phase timing.
Scenario make_scenario(const std::string& name, uint64_t seed);

// Randomized chain of everyday segments (standing, walking, sitting,
// crouching, picking up, lying on a raised bed) covering duration_s.
PoseSequence daily_activity_script(double duration_s, uint64_t seed);

}  // namespace tafall
