#include "tafall/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace tafall {

int SkeletonTopology::index_of(const std::string& name) const {
    for (size_t i = 0; i < joint_names.size(); ++i) {
        if (joint_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void SkeletonTopology::validate() const {
    const int j = joint_count();
    if (j == 0) throw std::invalid_argument("topology: no joints");

    std::set<std::string> seen;
    for (const auto& n : joint_names) {
        if (!seen.insert(n).second) throw std::invalid_argument("topology: duplicate joint name '" + n + "'");
    }
    for (const auto& [a, b] : bones) {
        if (a < 0 || a >= j || b < 0 || b >= j)
            throw std::invalid_argument("topology: bone index out of range");
        if (a == b) throw std::invalid_argument("topology: self-loop bone");
    }
    for (int f : foot_joints) {
        if (f < 0 || f >= j) throw std::invalid_argument("topology: foot joint index out of range");
    }

    // Connected + acyclic <=> connected with exactly J-1 edges.
    if (j > 1) {
        if (static_cast<int>(bones.size()) != j - 1)
            throw std::invalid_argument("topology: bone graph must have J-1 bones (tree)");
        std::vector<std::vector<int>> adj(j);
        for (const auto& [a, b] : bones) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        std::vector<char> visited(j, 0);
        std::vector<int> stack{0};
        visited[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            for (int nb : adj[cur]) {
                if (!visited[nb]) {
                    visited[nb] = 1;
                    ++count;
                    stack.push_back(nb);
                }
            }
        }
        if (count != j) throw std::invalid_argument("topology: bone graph is disconnected");
    }
}

std::vector<int> infer_foot_joints(const std::vector<std::string>& joint_names) {
    std::vector<int> out;
    for (size_t i = 0; i < joint_names.size(); ++i) {
        const std::string& n = joint_names[i];
        if (n.find("ankle") != std::string::npos || n.find("foot") != std::string::npos ||
            n.find("toe") != std::string::npos || n.find("heel") != std::string::npos) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

SkeletonTopology default_skeleton() {
    SkeletonTopology topo;
    topo.joint_names = {
        "head",    "neck",    "r_shoulder", "l_shoulder", "r_elbow", "l_elbow",
        "r_wrist", "l_wrist", "pelvis",     "r_hip",      "l_hip",   "r_knee",
        "l_knee",  "r_ankle", "l_ankle",    "r_foot",     "l_foot",
    };
    auto b = [&](const char* a, const char* c) {
        topo.bones.emplace_back(topo.index_of(a), topo.index_of(c));
    };
    b("neck", "head");
    b("neck", "r_shoulder");
    b("neck", "l_shoulder");
    b("r_shoulder", "r_elbow");
    b("r_elbow", "r_wrist");
    b("l_shoulder", "l_elbow");
    b("l_elbow", "l_wrist");
    b("neck", "pelvis");
    b("pelvis", "r_hip");
    b("pelvis", "l_hip");
    b("r_hip", "r_knee");
    b("r_knee", "r_ankle");
    b("l_hip", "l_knee");
    b("l_knee", "l_ankle");
    b("r_ankle", "r_foot");
    b("l_ankle", "l_foot");
    topo.foot_joints = infer_foot_joints(topo.joint_names);
    topo.validate();
    return topo;
}

void PoseSequence::validate() const {
    topology.validate();
    const size_t j = static_cast<size_t>(topology.joint_count());
    double prev_t = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < frames.size(); ++i) {
        const PoseFrame& f = frames[i];
        if (f.joints.size() != j)
            throw std::invalid_argument("frame " + std::to_string(i + 1) + ": expected " +
                                        std::to_string(j) + " joints, got " +
                                        std::to_string(f.joints.size()));
        if (!(f.t > prev_t))
            throw std::invalid_argument("frame " + std::to_string(i + 1) +
                                        ": non-monotone timestamp");
        prev_t = f.t;
        for (const Vec3& p : f.joints) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                throw std::invalid_argument("frame " + std::to_string(i + 1) +
                                            ": non-finite joint coordinate");
        }
    }
    if (!(frame_rate > 0.0)) throw std::invalid_argument("frame_rate must be positive");
}

}  // namespace tafall
