#include "tafall/balance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tafall {

const char* to_string(BalanceState s) {
    switch (s) {
        case BalanceState::SB: return "SB";
        case BalanceState::LoB: return "LoB";
        case BalanceState::GIS: return "GIS";
        case BalanceState::Undefined: return "Undefined";
    }
    return "?";
}

double SupportPolygon::area() const {
    if (kind != PolygonKind::Polygon) return 0.0;
    double acc = 0.0;
    const size_t n = vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

Vec3 compute_com(const WorldPose& pose, const AnthropometricTable& table) {
    table.validate(static_cast<int>(pose.joints.size()));
    Vec3 com;
    for (const BodySegment& seg : table.segments) {
        Vec3 center;
        for (size_t k = 0; k < seg.joint_indices.size(); ++k) {
            center = center + pose.joints[seg.joint_indices[k]] * seg.alphas[k];
        }
        com = com + center * seg.mass_fraction;
    }
    return com;
}

std::optional<SupportPolygon> compute_bos(const WorldPose& pose, const SkeletonTopology& topology,
                                          double contact_epsilon) {
    if (!(contact_epsilon > 0.0)) throw std::invalid_argument("contact_epsilon must be positive");

    std::vector<Vec2> contacts;
    for (int idx : topology.foot_joints) {
        const Vec3& p = pose.joints.at(idx);
        if (p.z <= contact_epsilon) contacts.push_back(p.xy());
    }
    if (contacts.empty()) return std::nullopt;

    SupportPolygon poly;
    poly.vertices = convex_hull(std::move(contacts));
    switch (poly.vertices.size()) {
        case 1: poly.kind = PolygonKind::Point; break;
        case 2: poly.kind = PolygonKind::Segment; break;
        default: poly.kind = PolygonKind::Polygon; break;
    }
    return poly;
}

double signed_margin(const Vec2& com_projection, const SupportPolygon& bos) {
    if (bos.vertices.empty()) throw std::invalid_argument("signed_margin: absent support polygon");

    if (bos.kind == PolygonKind::Point) {
        const double d = (com_projection - bos.vertices[0]).norm();
        return d == 0.0 ? 0.0 : -d;
    }
    if (bos.kind == PolygonKind::Segment) {
        const double d = point_segment_distance(com_projection, bos.vertices[0], bos.vertices[1]);
        return d == 0.0 ? 0.0 : -d;
    }
    const double d = polygon_boundary_distance(com_projection, bos.vertices);
    return point_in_convex_polygon(com_projection, bos.vertices) ? d : -d;
}

SmobTrajectory smob_trajectory(const PoseSequence& seq, const AnthropometricTable& table,
                               double contact_epsilon) {
    if (seq.space != PoseSpace::World)
        throw std::invalid_argument("smob_trajectory requires a world-space sequence");
    table.validate(seq.joint_count());

    SmobTrajectory traj;
    traj.samples.reserve(seq.frames.size());
    for (const PoseFrame& frame : seq.frames) {
        SmobSample s;
        s.t = frame.t;
        s.com = compute_com(frame, table);
        s.bos = compute_bos(frame, seq.topology, contact_epsilon);
        if (s.bos) s.smob = signed_margin(s.com.xy(), *s.bos);
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

BalanceStateSequence segment_states(const SmobTrajectory& traj, const PoseSequence& seq,
                                    const BalanceStateParams& params) {
    const size_t n = traj.samples.size();
    if (n != seq.frames.size())
        throw std::invalid_argument("segment_states: trajectory/sequence length mismatch");

    const int pelvis = seq.topology.index_of("pelvis");

    // A frame counts as unstable when the margin is negative, or undefined
    // while the CoM is descending.
    std::vector<char> unstable(n, 0);
    for (size_t i = 0; i < n; ++i) {
        const SmobSample& s = traj.samples[i];
        if (s.smob) {
            unstable[i] = *s.smob < 0.0;
        } else {
            const bool descending = i > 0 && s.com.z < traj.samples[i - 1].com.z;
            unstable[i] = descending;
        }
    }

    BalanceStateSequence out;
    out.states.assign(n, BalanceState::Undefined);
    size_t i = 0;
    while (i < n) {
        if (!unstable[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && unstable[j]) ++j;
        if (j - i >= static_cast<size_t>(params.lob_persistence)) {
            for (size_t k = i; k < j; ++k) out.states[k] = BalanceState::LoB;
        }
        i = j;
    }
    for (size_t k = 0; k < n; ++k) {
        const double height =
            pelvis >= 0 ? seq.frames[k].joints[pelvis].z : traj.samples[k].com.z;
        if (height < params.gis_height) {
            out.states[k] = BalanceState::GIS;
        } else if (out.states[k] != BalanceState::LoB && traj.samples[k].smob &&
                   *traj.samples[k].smob >= 0.0) {
            out.states[k] = BalanceState::SB;
        }
    }
    return out;
}

void write_smob_csv(const SmobTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,smob,com_x,com_y,com_z\n";
    out.precision(17);
    for (const SmobSample& s : traj.samples) {
        out << s.t << ",";
        if (s.smob) {
            out << *s.smob;
        } else {
            out << "nan";
        }
        out << "," << s.com.x << "," << s.com.y << "," << s.com.z << "\n";
    }
}

}  // namespace tafall
