#include "tafall/camera.hpp"

#include <cmath>
#include <stdexcept>

#include "tafall/rng.hpp"

namespace tafall {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

double CameraModel::fx() const { return (width / 2.0) / std::tan(hfov_deg * kDegToRad / 2.0); }
double CameraModel::fy() const { return (height / 2.0) / std::tan(vfov_deg * kDegToRad / 2.0); }

void CameraModel::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("camera: degenerate grid");
    if (!(hfov_deg > 0.0 && hfov_deg < 180.0) || !(vfov_deg > 0.0 && vfov_deg < 180.0))
        throw std::invalid_argument("camera: field of view must be in (0, 180) degrees");
}

CameraModel CameraModel::look_at(const Vec3& position, const Vec3& target, int width, int height,
                                 double hfov_deg, double vfov_deg) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.hfov_deg = hfov_deg;
    cam.vfov_deg = vfov_deg;
    cam.position = position;

    const Vec3 forward = (target - position).normalized();
    Vec3 right = forward.cross({0.0, 0.0, 1.0});
    if (right.norm() < 1e-12) right = {1.0, 0.0, 0.0};  // looking straight up/down
    right = right.normalized();
    const Vec3 down = forward.cross(right);
    cam.world_to_cam = Mat3::from_rows(right, down, forward);
    cam.validate();
    return cam;
}

std::optional<Projection> project(const Vec3& point, const CameraModel& camera) {
    const Vec3 pc = camera.world_to_cam * (point - camera.position);
    if (pc.z <= 0.0) return std::nullopt;
    Projection out;
    out.depth = pc.z;
    out.u = (camera.width / 2.0 + camera.fx() * pc.x / pc.z) / camera.width;
    out.v = (camera.height / 2.0 + camera.fy() * pc.y / pc.z) / camera.height;
    return out;
}

Vec3 unproject(const Projection& p, const CameraModel& camera) {
    const double xc = (p.u * camera.width - camera.width / 2.0) / camera.fx() * p.depth;
    const double yc = (p.v * camera.height - camera.height / 2.0) / camera.fy() * p.depth;
    return camera.position + camera.world_to_cam.transposed() * Vec3{xc, yc, p.depth};
}

Pose25D project_pose(const WorldPose& pose, const CameraModel& camera) {
    Pose25D out;
    out.t = pose.t;
    out.joints.reserve(pose.joints.size());
    for (const Vec3& joint : pose.joints) {
        if (auto proj = project(joint, camera)) {
            out.joints.push_back({proj->u, proj->v, proj->depth});
        } else {
            out.joints.push_back({0.0, 0.0, 0.0});  // behind-camera marker
        }
    }
    return out;
}

WorldPose unproject_pose(const Pose25D& pose, const CameraModel& camera) {
    WorldPose out;
    out.t = pose.t;
    out.joints.reserve(pose.joints.size());
    for (const Vec3& joint : pose.joints) {
        if (joint.z > 0.0) {
            out.joints.push_back(unproject({joint.x, joint.y, joint.z}, camera));
        } else {
            out.joints.push_back(camera.position);  // no depth: collapse to the camera
        }
    }
    return out;
}

CameraModel sample_virtual_camera(uint64_t seed, const CameraBounds& bounds,
                                  const Vec3& subject_center, int width, int height,
                                  double hfov_deg, double vfov_deg) {
    if (bounds.radius_max < bounds.radius_min || bounds.height_max < bounds.height_min ||
        bounds.yaw_max < bounds.yaw_min)
        throw std::invalid_argument("sample_virtual_camera: empty range");

    Rng rng(seed);
    const double yaw = rng.uniform(bounds.yaw_min, bounds.yaw_max);
    const double radius = rng.uniform(bounds.radius_min, bounds.radius_max);
    const double height_m = rng.uniform(bounds.height_min, bounds.height_max);

    const Vec3 position{subject_center.x + radius * std::cos(yaw),
                        subject_center.y + radius * std::sin(yaw), height_m};
    return CameraModel::look_at(position, subject_center, width, height, hfov_deg, vfov_deg);
}

}  // namespace tafall
