#pragma once

#include <stdexcept>
#include <string>

#include "tafall/pose.hpp"

namespace tafall {

// Raised for malformed pose files; the message carries the offending line.
struct PoseIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pose JSONL: a header line
//   {"topology": [..names..], "frame_rate": Hz, "space": "world"|"image25d"}
// followed by one frame per line:
//   {"t": seconds, "joints": [[x,y,z], ... J entries]}
PoseSequence load_pose_sequence(const std::string& path);

// Same, but enforces that the file's topology matches the expected one.
PoseSequence load_pose_sequence(const std::string& path, const SkeletonTopology& expected);

void write_pose_sequence(const PoseSequence& seq, const std::string& path);

}  // namespace tafall
