#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tafall/anthropometry.hpp"
#include "tafall/geometry.hpp"
#include "tafall/pose.hpp"

namespace tafall {

enum class PolygonKind { Polygon, Segment, Point };

// Convex hull of the horizontal projections of ground-contact joints.
// Vertices are counter-clockwise and strictly convex for the Polygon kind;
// Segment keeps the two extreme points, Point a single one.
struct SupportPolygon {
    std::vector<Vec2> vertices;
    PolygonKind kind = PolygonKind::Polygon;

    double area() const;
};

struct SmobSample {
    double t = 0.0;
    Vec3 com;
    std::optional<SupportPolygon> bos;
    std::optional<double> smob;  // meters, defined iff bos present
};

struct SmobTrajectory {
    std::vector<SmobSample> samples;
};

enum class BalanceState { SB, LoB, GIS, Undefined };

const char* to_string(BalanceState s);

struct BalanceStateSequence {
    std::vector<BalanceState> states;
};

struct BalanceStateParams {
    int lob_persistence = 2;   // frames; suppresses single-frame sign flicker
    double gis_height = 0.35;  // meters of pelvis height
};

inline constexpr double kDefaultContactEpsilon = 0.05;  // meters

// Mass-weighted aggregation of segment centers:
//   sum_s m_s * sum_k alpha_{s,k} * p_{s,k}
Vec3 compute_com(const WorldPose& pose, const AnthropometricTable& table);

// Hull of foot joints whose height is within contact_epsilon of the ground.
// Absent when there is no contact at all.
std::optional<SupportPolygon> compute_bos(const WorldPose& pose, const SkeletonTopology& topology,
                                          double contact_epsilon = kDefaultContactEpsilon);

// Shortest horizontal distance from the projected point to the support
// boundary: positive inside or on the boundary, negative outside. Degenerate
// supports give -distance (0 when the point lies on them).
double signed_margin(const Vec2& com_projection, const SupportPolygon& bos);

SmobTrajectory smob_trajectory(const PoseSequence& seq, const AnthropometricTable& table,
                               double contact_epsilon = kDefaultContactEpsilon);

// Per-frame labels: GIS where the pelvis is below gis_height; LoB on runs of
// at least lob_persistence frames whose margin is negative or undefined while
// the CoM descends; SB where the margin is non-negative; Undefined otherwise.
BalanceStateSequence segment_states(const SmobTrajectory& traj, const PoseSequence& seq,
                                    const BalanceStateParams& params = {});

// CSV export: t, smob, com_x, com_y, com_z (undefined margins as "nan").
void write_smob_csv(const SmobTrajectory& traj, const std::string& path);

}  // namespace tafall
