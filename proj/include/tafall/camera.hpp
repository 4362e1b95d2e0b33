#pragma once

#include <cstdint>
#include <optional>

#include "tafall/geometry.hpp"
#include "tafall/pose.hpp"

namespace tafall {

// Pinhole camera over the sensor grid. world_to_cam rows are the camera's
// right / down / forward axes expressed in world coordinates, so image u
// grows along "right" and v along "down"; the optical axis is "forward".
struct CameraModel {
    int width = 80;
    int height = 62;
    double hfov_deg = 90.0;
    double vfov_deg = 67.0;
    Vec3 position;
    Mat3 world_to_cam;

    double fx() const;  // pixels
    double fy() const;  // pixels

    void validate() const;

    static CameraModel look_at(const Vec3& position, const Vec3& target, int width = 80,
                               int height = 62, double hfov_deg = 90.0, double vfov_deg = 67.0);
};

struct Projection {
    double u = 0.0;  // normalized [0,1] across width
    double v = 0.0;  // normalized [0,1] across height
    double depth = 0.0;  // meters along the optical axis
};

// Normalized pinhole projection; nullopt when the point is behind the camera
// (depth <= 0).
std::optional<Projection> project(const Vec3& point, const CameraModel& camera);

Vec3 unproject(const Projection& p, const CameraModel& camera);

// Joint-wise projection of a world pose into 2.5D. Joints behind the camera
// get depth 0 markers.
Pose25D project_pose(const WorldPose& pose, const CameraModel& camera);

WorldPose unproject_pose(const Pose25D& pose, const CameraModel& camera);

struct CameraBounds {
    double radius_min = 1.5, radius_max = 4.0;    // meters from the subject
    double height_min = 0.8, height_max = 2.2;    // meters above ground
    double yaw_min = 0.0, yaw_max = 2.0 * M_PI;   // radians around the subject
};

// Deterministic for a given seed; the camera is placed on a cylinder around
// subject_center and oriented to look at it.
CameraModel sample_virtual_camera(uint64_t seed, const CameraBounds& bounds,
                                  const Vec3& subject_center, int width = 80, int height = 62,
                                  double hfov_deg = 90.0, double vfov_deg = 67.0);

}  // namespace tafall
