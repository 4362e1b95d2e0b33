#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tafall/geometry.hpp"

namespace tafall {

// Joint names plus parent/child bone pairs. The bone graph must be connected
// and acyclic; foot_joints lists the indices eligible for ground contact.
struct SkeletonTopology {
    std::vector<std::string> joint_names;
    std::vector<std::pair<int, int>> bones;
    std::vector<int> foot_joints;

    int joint_count() const { return static_cast<int>(joint_names.size()); }
    int index_of(const std::string& name) const;

    // Throws std::invalid_argument on duplicate names, out-of-range bone
    // indices, or a disconnected/cyclic bone graph.
    void validate() const;

    bool operator==(const SkeletonTopology& o) const {
        return joint_names == o.joint_names && bones == o.bones && foot_joints == o.foot_joints;
    }
};

// 17-joint reduction common to mocap pipelines. foot_joints covers ankles
// and foot points on both sides.
SkeletonTopology default_skeleton();

// Derives foot joints from names containing ankle/foot/toe/heel.
std::vector<int> infer_foot_joints(const std::vector<std::string>& joint_names);

enum class PoseSpace { World, Image25d };

// One pose sample. In world space, joints are meters (x lateral, y forward,
// z up, ground plane z=0). In 2.5D image space, joints are (u, v, depth) with
// u,v normalized to [0,1] and depth in meters along the optical axis.
struct PoseFrame {
    double t = 0.0;  // seconds from sequence start
    std::vector<Vec3> joints;

    bool operator==(const PoseFrame& o) const = default;
};

using WorldPose = PoseFrame;
using Pose25D = PoseFrame;

struct PoseSequence {
    SkeletonTopology topology;
    PoseSpace space = PoseSpace::World;
    double frame_rate = 20.0;  // advisory metadata, Hz
    std::vector<PoseFrame> frames;

    int joint_count() const { return topology.joint_count(); }
    size_t frame_count() const { return frames.size(); }

    // Throws std::invalid_argument on non-monotone timestamps, joint-count
    // mismatches, or non-finite coordinates.
    void validate() const;

    bool operator==(const PoseSequence& o) const {
        return topology == o.topology && space == o.space && frame_rate == o.frame_rate &&
               frames == o.frames;
    }
};

}  // namespace tafall
