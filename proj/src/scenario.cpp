#include "tafall/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tafall/rng.hpp"

namespace tafall {

namespace {

constexpr double kFrameRate = 20.0;
constexpr double kDt = 1.0 / kFrameRate;
constexpr double kGravity = 9.81;

// Stature-derived landmark heights/offsets for a ~1.75 m adult.
struct BodyDims {
    double ankle_z = 0.04;  // near the heel so it counts as ground contact
    double knee_z = 0.48;
    double pelvis_z = 0.92;
    double neck_z = 1.48;
    double head_z = 1.66;
    double shoulder_z = 1.42;
    double shoulder_half = 0.20;
    double hip_half = 0.10;
    double foot_half = 0.10;   // lateral ankle offset
    double foot_len = 0.16;
    double elbow_z = 1.12;
    double wrist_z = 0.84;
    double stance_lead = 0.03;  // CoM rides slightly ahead of the heel line
};

const BodyDims kDims;

struct JointIndex {
    int head, neck, r_shoulder, l_shoulder, r_elbow, l_elbow, r_wrist, l_wrist;
    int pelvis, r_hip, l_hip, r_knee, l_knee, r_ankle, l_ankle, r_foot, l_foot;
};

JointIndex joint_index(const SkeletonTopology& topo) {
    auto at = [&](const char* n) { return topo.index_of(n); };
    return {at("head"),   at("neck"),    at("r_shoulder"), at("l_shoulder"), at("r_elbow"),
            at("l_elbow"), at("r_wrist"), at("l_wrist"),    at("pelvis"),     at("r_hip"),
            at("l_hip"),   at("r_knee"),  at("l_knee"),     at("r_ankle"),    at("l_ankle"),
            at("r_foot"),  at("l_foot")};
}

double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

// Builds poses in a local frame (x lateral, +y facing direction), then
// rotates by heading and translates onto the ground position.
class PoseRig {
  public:
    PoseRig() : topo_(default_skeleton()), ji_(joint_index(topo_)) {}

    const SkeletonTopology& topology() const { return topo_; }

    PoseFrame place(const std::vector<Vec3>& local, const Vec2& pos, double heading,
                    double t) const {
        const Mat3 rot = Mat3::rotation_z(heading);
        PoseFrame f;
        f.t = t;
        f.joints.resize(local.size());
        for (size_t i = 0; i < local.size(); ++i) {
            Vec3 p = rot * local[i];
            f.joints[i] = {p.x + pos.x, p.y + pos.y, std::max(p.z, 0.02)};
        }
        return f;
    }

    // crouch in [0,1] deepens the squat; pitch leans the torso forward;
    // pelvis_shift_y moves the hips along the facing axis.
    std::vector<Vec3> standing(double crouch = 0.0, double pitch = 0.0,
                               double pelvis_shift_y = 0.0) const {
        std::vector<Vec3> j(topo_.joint_count());
        const double pelvis_z = kDims.pelvis_z - 0.62 * crouch;
        const double pelvis_y = kDims.stance_lead + pelvis_shift_y - 0.15 * crouch;
        const Vec3 pelvis{0.0, pelvis_y, pelvis_z};

        j[ji_.pelvis] = pelvis;
        j[ji_.r_hip] = pelvis + Vec3{kDims.hip_half, 0, 0};
        j[ji_.l_hip] = pelvis + Vec3{-kDims.hip_half, 0, 0};

        // torso chain pitched about the pelvis
        const double torso_len = kDims.neck_z - kDims.pelvis_z;
        const Vec3 up{0.0, std::sin(pitch), std::cos(pitch)};
        const Vec3 neck = pelvis + up * torso_len;
        j[ji_.neck] = neck;
        j[ji_.head] = neck + up * (kDims.head_z - kDims.neck_z);

        const Vec3 sh_center = pelvis + up * (kDims.shoulder_z - kDims.pelvis_z);
        j[ji_.r_shoulder] = sh_center + Vec3{kDims.shoulder_half, 0, 0};
        j[ji_.l_shoulder] = sh_center + Vec3{-kDims.shoulder_half, 0, 0};

        // arms hang along the torso direction, drifting forward with pitch
        const Vec3 hang = Vec3{0.0, std::sin(pitch) - 0.05, -std::cos(pitch)};
        const double upper = kDims.shoulder_z - kDims.elbow_z;
        const double fore = kDims.elbow_z - kDims.wrist_z;
        j[ji_.r_elbow] = j[ji_.r_shoulder] + hang * upper;
        j[ji_.l_elbow] = j[ji_.l_shoulder] + hang * upper;
        j[ji_.r_wrist] = j[ji_.r_elbow] + hang * fore;
        j[ji_.l_wrist] = j[ji_.l_elbow] + hang * fore;

        // legs: ankles stay planted, knees travel forward as the squat deepens
        const double knee_y = 0.30 * crouch;
        const double knee_z = kDims.knee_z - 0.12 * crouch;
        j[ji_.r_knee] = {kDims.hip_half, knee_y, knee_z};
        j[ji_.l_knee] = {-kDims.hip_half, knee_y, knee_z};
        j[ji_.r_ankle] = {kDims.foot_half, 0.0, kDims.ankle_z};
        j[ji_.l_ankle] = {-kDims.foot_half, 0.0, kDims.ankle_z};
        j[ji_.r_foot] = {kDims.foot_half, kDims.foot_len, 0.02};
        j[ji_.l_foot] = {-kDims.foot_half, kDims.foot_len, 0.02};
        return j;
    }

    // Seated on a support of height seat_z; feet tucked back under the knees
    // so the margin deficit stays in a realistic band.
    std::vector<Vec3> sitting(double seat_z) const {
        std::vector<Vec3> j(topo_.joint_count());
        const Vec3 pelvis{0.0, -0.15, seat_z};
        j[ji_.pelvis] = pelvis;
        j[ji_.r_hip] = pelvis + Vec3{kDims.hip_half, 0, 0};
        j[ji_.l_hip] = pelvis + Vec3{-kDims.hip_half, 0, 0};

        const double torso_len = kDims.neck_z - kDims.pelvis_z;
        const Vec3 up = Vec3{0.0, 0.08, 1.0}.normalized();
        const Vec3 neck = pelvis + up * torso_len;
        j[ji_.neck] = neck;
        j[ji_.head] = neck + Vec3{0, 0.02, kDims.head_z - kDims.neck_z};
        const Vec3 sh = pelvis + up * (kDims.shoulder_z - kDims.pelvis_z);
        j[ji_.r_shoulder] = sh + Vec3{kDims.shoulder_half, 0, 0};
        j[ji_.l_shoulder] = sh + Vec3{-kDims.shoulder_half, 0, 0};
        j[ji_.r_elbow] = j[ji_.r_shoulder] + Vec3{0, 0.05, -0.28};
        j[ji_.l_elbow] = j[ji_.l_shoulder] + Vec3{0, 0.05, -0.28};
        j[ji_.r_wrist] = j[ji_.r_elbow] + Vec3{0, 0.18, -0.12};
        j[ji_.l_wrist] = j[ji_.l_elbow] + Vec3{0, 0.18, -0.12};

        j[ji_.r_knee] = {kDims.hip_half + 0.02, 0.24, seat_z + 0.02};
        j[ji_.l_knee] = {-kDims.hip_half - 0.02, 0.24, seat_z + 0.02};
        j[ji_.r_ankle] = {kDims.foot_half, 0.14, kDims.ankle_z};
        j[ji_.l_ankle] = {-kDims.foot_half, 0.14, kDims.ankle_z};
        j[ji_.r_foot] = {kDims.foot_half, 0.14 + kDims.foot_len, 0.02};
        j[ji_.l_foot] = {-kDims.foot_half, 0.14 + kDims.foot_len, 0.02};
        return j;
    }

    // Flat on a surface of height base_z, head along +y.
    std::vector<Vec3> lying(double base_z) const {
        std::vector<Vec3> j(topo_.joint_count());
        const double z = base_z + 0.12;
        auto on = [&](double x, double y, double dz = 0.0) { return Vec3{x, y, z + dz}; };
        j[ji_.pelvis] = on(0.0, 0.0);
        j[ji_.r_hip] = on(kDims.hip_half, 0.0);
        j[ji_.l_hip] = on(-kDims.hip_half, 0.0);
        j[ji_.neck] = on(0.0, 0.56, 0.03);
        j[ji_.head] = on(0.0, 0.74, 0.05);
        j[ji_.r_shoulder] = on(kDims.shoulder_half, 0.50, 0.03);
        j[ji_.l_shoulder] = on(-kDims.shoulder_half, 0.50, 0.03);
        j[ji_.r_elbow] = on(kDims.shoulder_half + 0.05, 0.22);
        j[ji_.l_elbow] = on(-kDims.shoulder_half - 0.05, 0.22);
        j[ji_.r_wrist] = on(kDims.shoulder_half + 0.07, -0.02);
        j[ji_.l_wrist] = on(-kDims.shoulder_half - 0.07, -0.02);
        j[ji_.r_knee] = on(kDims.hip_half, -0.42, -0.02);
        j[ji_.l_knee] = on(-kDims.hip_half, -0.42, -0.02);
        j[ji_.r_ankle] = on(kDims.foot_half, -0.82, -0.04);
        j[ji_.l_ankle] = on(-kDims.foot_half, -0.82, -0.04);
        j[ji_.r_foot] = on(kDims.foot_half, -0.90, 0.02);
        j[ji_.l_foot] = on(-kDims.foot_half, -0.90, 0.02);
        return j;
    }

    const JointIndex& ji() const { return ji_; }

  private:
    SkeletonTopology topo_;
    JointIndex ji_;
};

std::vector<Vec3> lerp_joints(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double s) {
    std::vector<Vec3> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + (b[i] - a[i]) * s;
    return out;
}

// Rigid rotation of everything above the feet about a horizontal pivot line.
std::vector<Vec3> rotate_body(const std::vector<Vec3>& local, const JointIndex& ji,
                              const Vec3& pivot, const Vec3& axis, double angle) {
    const Mat3 rot = Mat3::rotation_axis(axis.normalized(), angle);
    std::vector<Vec3> out = local;
    for (size_t i = 0; i < local.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (idx == ji.r_ankle || idx == ji.l_ankle || idx == ji.r_foot || idx == ji.l_foot)
            continue;
        out[i] = pivot + rot * (local[i] - pivot);
    }
    return out;
}

struct ScriptBuilder {
    PoseRig rig;
    PoseSequence seq;
    Vec2 pos{0.0, 0.0};
    double heading = 0.0;
    double t = 0.0;

    explicit ScriptBuilder(uint64_t seed) : rng(seed) {
        seq.topology = rig.topology();
        seq.space = PoseSpace::World;
        seq.frame_rate = kFrameRate;
    }

    Rng rng;

    void emit(const std::vector<Vec3>& local) {
        seq.frames.push_back(rig.place(local, pos, heading, t));
        t += kDt;
    }

    void hold(const std::vector<Vec3>& local, double duration, double sway = 0.004) {
        const int n = std::max(1, static_cast<int>(std::lround(duration * kFrameRate)));
        for (int i = 0; i < n; ++i) {
            std::vector<Vec3> j = local;
            // breathing/sway so held poses are not bit-static
            const double wob = sway * std::sin(2.0 * M_PI * 0.4 * t);
            for (Vec3& p : j) p.y += wob;
            emit(j);
        }
    }

    void transition(const std::vector<Vec3>& from, const std::vector<Vec3>& to, double duration) {
        const int n = std::max(2, static_cast<int>(std::lround(duration * kFrameRate)));
        for (int i = 1; i <= n; ++i) {
            emit(lerp_joints(from, to, smoothstep(static_cast<double>(i) / n)));
        }
    }

    void walk(const Vec2& target, double speed) {
        const Vec2 delta = target - pos;
        const double dist = delta.norm();
        if (dist < 1e-9) return;
        heading = std::atan2(delta.y, delta.x) - M_PI / 2.0;  // local +y faces the target
        const int n = std::max(1, static_cast<int>(std::lround(dist / speed * kFrameRate)));
        const Vec2 step = delta * (1.0 / n);
        for (int i = 0; i < n; ++i) {
            pos = pos + step;
            const double phase = 2.0 * M_PI * 1.6 * t;
            std::vector<Vec3> j = rig.standing(0.02, 0.06);
            const auto& ji = rig.ji();
            const double lift_r = std::max(0.0, std::sin(phase)) * 0.06;
            const double lift_l = std::max(0.0, -std::sin(phase)) * 0.06;
            j[ji.r_ankle].z += lift_r;
            j[ji.r_foot].z += lift_r;
            j[ji.l_ankle].z += lift_l;
            j[ji.l_foot].z += lift_l;
            const double sway = -0.02 * std::sin(phase);  // toward the stance foot
            for (Vec3& p : j) p.x += sway;
            emit(j);
        }
    }

    // Inverted-pendulum rotation about the ankles until the body is down,
    // then lying still. Returns the time the pelvis first drops below 0.35 m.
    double fall(const Vec3& axis_local, const Vec3& pivot_local, double omega0,
                double lie_duration) {
        const std::vector<Vec3> base = rig.standing(0.0, 0.0);
        double theta = 0.04 + rng.uniform() * 0.02;
        double omega = omega0;
        const double theta_end = 1.50;  // ~86 degrees
        double impact_t = -1.0;

        std::vector<Vec3> current = base;
        while (theta < theta_end) {
            for (int sub = 0; sub < 10; ++sub) {
                omega += (kGravity / 0.9) * std::sin(std::min(theta, theta_end)) * (kDt / 10.0);
                theta += omega * (kDt / 10.0);
            }
            theta = std::min(theta, theta_end);
            current = rotate_body(base, rig.ji(), pivot_local, axis_local, theta);
            emit(current);
            const PoseFrame& f = seq.frames.back();
            if (impact_t < 0.0 && f.joints[rig.ji().pelvis].z < 0.35) impact_t = f.t;
        }
        hold(current, lie_duration, 0.002);
        return impact_t;
    }
};

TruthScenario fall_truth(const ScriptBuilder& sb, double fall_start, double impact_t) {
    TruthScenario truth;
    truth.duration_s = sb.t;
    truth.falls.push_back({fall_start, impact_t > 0 ? impact_t + 0.5 : sb.t});
    return truth;
}

Scenario build_fall(const std::string& name, uint64_t seed) {
    ScriptBuilder sb(seed);
    sb.pos = {sb.rng.uniform(-0.3, 0.3), sb.rng.uniform(-0.2, 0.2)};
    sb.heading = sb.rng.uniform(-0.4, 0.4);

    const auto stand = sb.rig.standing();
    sb.hold(stand, 1.5 + sb.rng.uniform() * 0.4);
    const auto& ji = sb.rig.ji();

    // Pivot line through the ankles; the axis choice picks the fall direction.
    const Vec3 ankle_mid{0.0, 0.0, kDims.ankle_z};
    double fall_start = 0.0, impact = -1.0;

    if (name == "forward_fall") {
        sb.walk(sb.pos + Vec2{0.0, 0.8}, 0.7);
        sb.hold(stand, 0.6);
        fall_start = sb.t;
        impact = sb.fall({-1.0, 0.0, 0.0}, ankle_mid, 0.0, 2.5);
    } else if (name == "backward_fall") {
        sb.hold(stand, 0.5);
        fall_start = sb.t;
        impact = sb.fall({1.0, 0.0, 0.0}, ankle_mid, 0.1, 2.5);
    } else if (name == "lateral_fall") {
        sb.hold(stand, 0.5);
        fall_start = sb.t;
        const Vec3 pivot{-kDims.foot_half, 0.0, kDims.ankle_z};
        impact = sb.fall({0.0, -1.0, 0.0}, pivot, 0.05, 2.5);
    } else if (name == "slip_fall") {
        sb.walk(sb.pos + Vec2{0.0, 1.0}, 0.8);
        fall_start = sb.t;
        // feet shoot forward, the body tips backward from an already-open angle
        auto slipped = stand;
        const double slide = 0.30;
        for (int idx : {ji.r_ankle, ji.l_ankle, ji.r_foot, ji.l_foot}) slipped[idx].y += slide;
        sb.transition(stand, slipped, 0.20);
        // rotate about the displaced ankle line
        const Vec3 pivot{0.0, slide, kDims.ankle_z};
        {
            // reuse the pendulum but seeded from the slipped configuration
            double theta = std::atan2(slide, kDims.pelvis_z);
            double omega = 0.6;
            const double theta_end = 1.50;
            std::vector<Vec3> current = slipped;
            while (theta < theta_end) {
                for (int sub = 0; sub < 10; ++sub) {
                    omega += (kGravity / 0.9) * std::sin(theta) * (kDt / 10.0);
                    theta += omega * (kDt / 10.0);
                }
                theta = std::min(theta, theta_end);
                current = rotate_body(slipped, ji, pivot, {1.0, 0.0, 0.0},
                                      theta - std::atan2(slide, kDims.pelvis_z));
                sb.emit(current);
                if (impact < 0.0 && sb.seq.frames.back().joints[ji.pelvis].z < 0.35)
                    impact = sb.seq.frames.back().t;
            }
            sb.hold(current, 2.5, 0.002);
        }
    } else if (name == "trip_fall") {
        sb.walk(sb.pos + Vec2{0.0, 1.2}, 0.9);
        fall_start = sb.t;
        impact = sb.fall({-1.0, 0.0, 0.0}, ankle_mid, 1.2, 2.5);
    } else {
        throw std::invalid_argument("unknown fall scenario: " + name);
    }

    Scenario sc;
    sc.name = name;
    sc.is_fall = true;
    sc.scripted_impact_t = impact;
    sc.truth = fall_truth(sb, fall_start, impact);
    sc.poses = std::move(sb.seq);
    return sc;
}

Scenario build_nonfall(const std::string& name, uint64_t seed) {
    ScriptBuilder sb(seed);
    sb.pos = {sb.rng.uniform(-0.3, 0.3), sb.rng.uniform(-0.2, 0.2)};
    sb.heading = sb.rng.uniform(-0.4, 0.4);

    const auto stand = sb.rig.standing();
    sb.hold(stand, 1.2 + sb.rng.uniform() * 0.4);

    if (name == "fast_sit") {
        const auto seated = sb.rig.sitting(0.45);
        sb.transition(stand, seated, 0.9);
        sb.hold(seated, 3.0);
        sb.transition(seated, stand, 1.2);
        sb.hold(stand, 1.2);
    } else if (name == "pickup") {
        const auto bent = sb.rig.standing(0.25, 1.15, -0.12);
        sb.transition(stand, bent, 1.0);
        sb.hold(bent, 0.8);
        sb.transition(bent, stand, 1.1);
        sb.hold(stand, 1.2);
    } else if (name == "lie_down_bed") {
        const double bed_z = 0.50;
        const auto seated = sb.rig.sitting(bed_z + 0.05);
        const auto flat = sb.rig.lying(bed_z);
        sb.transition(stand, seated, 1.1);
        sb.hold(seated, 0.8);
        sb.transition(seated, flat, 1.6);
        sb.hold(flat, 3.0);
    } else if (name == "crouch") {
        const auto squat = sb.rig.standing(1.0, 0.35);
        sb.transition(stand, squat, 1.1);
        sb.hold(squat, 2.5);
        sb.transition(squat, stand, 1.2);
        sb.hold(stand, 1.0);
    } else if (name == "walk_out") {
        sb.walk(sb.pos + Vec2{3.6, 0.4}, 0.9);
        sb.hold(sb.rig.standing(), 1.0);
    } else {
        throw std::invalid_argument("unknown non-fall scenario: " + name);
    }

    Scenario sc;
    sc.name = name;
    sc.is_fall = false;
    sc.truth.duration_s = sb.t;
    sc.poses = std::move(sb.seq);
    return sc;
}

}  // namespace

const std::vector<std::string>& fall_scenario_names() {
    static const std::vector<std::string> names{"forward_fall", "backward_fall", "lateral_fall",
                                                "slip_fall", "trip_fall"};
    return names;
}

const std::vector<std::string>& nonfall_scenario_names() {
    static const std::vector<std::string> names{"fast_sit", "pickup", "lie_down_bed", "crouch",
                                                "walk_out"};
    return names;
}

Scenario make_scenario(const std::string& name, uint64_t seed) {
    const auto& falls = fall_scenario_names();
    if (std::find(falls.begin(), falls.end(), name) != falls.end())
        return build_fall(name, seed);
    const auto& rest = nonfall_scenario_names();
    if (std::find(rest.begin(), rest.end(), name) != rest.end())
        return build_nonfall(name, seed);
    throw std::invalid_argument("unknown scenario: " + name);
}

PoseSequence daily_activity_script(double duration_s, uint64_t seed) {
    ScriptBuilder sb(seed);
    const auto stand = sb.rig.standing();
    sb.hold(stand, 1.0);

    while (sb.t < duration_s) {
        const double pick = sb.rng.uniform();
        if (pick < 0.30) {
            sb.hold(stand, sb.rng.uniform(2.0, 6.0));
        } else if (pick < 0.60) {
            const Vec2 target{sb.rng.uniform(-1.1, 1.1), sb.rng.uniform(-0.9, 0.9)};
            sb.walk(target, sb.rng.uniform(0.5, 0.9));
        } else if (pick < 0.75) {
            const auto seated = sb.rig.sitting(0.45);
            sb.transition(stand, seated, sb.rng.uniform(0.9, 1.4));
            sb.hold(seated, sb.rng.uniform(4.0, 18.0));
            sb.transition(seated, stand, 1.2);
        } else if (pick < 0.85) {
            const auto squat = sb.rig.standing(1.0, 0.35);
            sb.transition(stand, squat, sb.rng.uniform(1.0, 1.5));
            sb.hold(squat, sb.rng.uniform(2.0, 5.0));
            sb.transition(squat, stand, 1.2);
        } else if (pick < 0.95) {
            const auto bent = sb.rig.standing(0.25, 1.15, -0.12);
            sb.transition(stand, bent, sb.rng.uniform(0.9, 1.3));
            sb.hold(bent, sb.rng.uniform(0.6, 1.5));
            sb.transition(bent, stand, 1.1);
        } else {
            const double bed_z = 0.50;
            const auto seated = sb.rig.sitting(bed_z + 0.05);
            const auto flat = sb.rig.lying(bed_z);
            sb.transition(stand, seated, 1.1);
            sb.transition(seated, flat, 1.6);
            sb.hold(flat, sb.rng.uniform(8.0, 25.0));
            sb.transition(flat, seated, 1.6);
            sb.transition(seated, stand, 1.2);
        }
    }
    return std::move(sb.seq);
}

}  // namespace tafall
