#include "tafall/pose_io.hpp"

#include <fstream>

#include <json.hpp>

namespace tafall {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, size_t line_no) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw PoseIoError("line " + std::to_string(line_no) + ": malformed JSON record");
    return j;
}

}  // namespace

PoseSequence load_pose_sequence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PoseIoError("cannot open pose file: " + path);

    PoseSequence seq;
    std::string line;
    size_t line_no = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, line_no);

        if (!have_header) {
            if (!j.contains("topology") || !j["topology"].is_array())
                throw PoseIoError("line " + std::to_string(line_no) +
                                  ": expected header with 'topology'");
            seq.topology.joint_names = j["topology"].get<std::vector<std::string>>();
            seq.frame_rate = j.value("frame_rate", 20.0);
            const std::string space = j.value("space", "world");
            if (space == "world") {
                seq.space = PoseSpace::World;
            } else if (space == "image25d") {
                seq.space = PoseSpace::Image25d;
            } else {
                throw PoseIoError("line " + std::to_string(line_no) + ": unknown space '" +
                                  space + "'");
            }
            if (j.contains("bones")) {
                for (const auto& bone : j["bones"])
                    seq.topology.bones.emplace_back(bone.at(0).get<int>(), bone.at(1).get<int>());
            }
            if (seq.topology.bones.empty()) {
                // minimal headers carry only joint names; synthesize a chain
                // so the topology invariant (connected tree) holds
                for (size_t b = 1; b < seq.topology.joint_names.size(); ++b)
                    seq.topology.bones.emplace_back(static_cast<int>(b - 1), static_cast<int>(b));
            }
            if (j.contains("foot_joints")) {
                seq.topology.foot_joints = j["foot_joints"].get<std::vector<int>>();
            } else {
                seq.topology.foot_joints = infer_foot_joints(seq.topology.joint_names);
            }
            have_header = true;
            continue;
        }

        if (!j.contains("t") || !j.contains("joints"))
            throw PoseIoError("line " + std::to_string(line_no) +
                              ": frame record needs 't' and 'joints'");
        PoseFrame frame;
        frame.t = j["t"].get<double>();
        const auto& joints = j["joints"];
        if (!joints.is_array())
            throw PoseIoError("line " + std::to_string(line_no) + ": 'joints' must be an array");
        const size_t expected = seq.topology.joint_names.size();
        if (joints.size() != expected)
            throw PoseIoError("line " + std::to_string(line_no) + " (frame " +
                              std::to_string(seq.frames.size() + 1) + "): expected " +
                              std::to_string(expected) + " joints, got " +
                              std::to_string(joints.size()));
        frame.joints.reserve(expected);
        for (const auto& entry : joints) {
            if (!entry.is_array() || entry.size() != 3)
                throw PoseIoError("line " + std::to_string(line_no) +
                                  ": each joint must be [x,y,z]");
            frame.joints.push_back(
                {entry[0].get<double>(), entry[1].get<double>(), entry[2].get<double>()});
        }
        if (!seq.frames.empty() && !(frame.t > seq.frames.back().t))
            throw PoseIoError("line " + std::to_string(line_no) + " (frame " +
                              std::to_string(seq.frames.size() + 1) +
                              "): non-monotone timestamp");
        seq.frames.push_back(std::move(frame));
    }

    if (!have_header) throw PoseIoError("pose file has no header line: " + path);
    if (seq.frames.empty()) throw PoseIoError("pose file has no frames: " + path);
    seq.validate();
    return seq;
}

PoseSequence load_pose_sequence(const std::string& path, const SkeletonTopology& expected) {
    PoseSequence seq = load_pose_sequence(path);
    if (seq.topology.joint_names != expected.joint_names)
        throw PoseIoError("pose file topology does not match expected joint set: " + path);
    // Bone/foot annotations from the caller win over inferred ones.
    seq.topology = expected;
    seq.validate();
    return seq;
}

void write_pose_sequence(const PoseSequence& seq, const std::string& path) {
    if (seq.frames.empty()) throw PoseIoError("empty sequence");
    seq.validate();

    std::ofstream out(path);
    if (!out) throw PoseIoError("cannot open for writing: " + path);

    json header;
    header["topology"] = seq.topology.joint_names;
    header["frame_rate"] = seq.frame_rate;
    header["space"] = seq.space == PoseSpace::World ? "world" : "image25d";
    json bones = json::array();
    for (const auto& [a, b] : seq.topology.bones) bones.push_back({a, b});
    header["bones"] = bones;
    header["foot_joints"] = seq.topology.foot_joints;
    out << header.dump() << "\n";

    for (const PoseFrame& f : seq.frames) {
        json rec;
        rec["t"] = f.t;
        json joints = json::array();
        for (const Vec3& p : f.joints) joints.push_back({p.x, p.y, p.z});
        rec["joints"] = joints;
        out << rec.dump() << "\n";
    }
    if (!out) throw PoseIoError("write failed: " + path);
}

}  // namespace tafall
