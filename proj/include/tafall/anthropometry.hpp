#pragma once

#include <string>
#include <vector>

#include "tafall/pose.hpp"

namespace tafall {

// One body segment: joints with geometric weighting coefficients that place
// the segment center, plus the segment's whole-body mass fraction.
struct BodySegment {
    std::string name;
    std::vector<int> joint_indices;
    std::vector<double> alphas;
    double mass_fraction = 0.0;
};

struct AnthropometricTable {
    std::vector<BodySegment> segments;

    // Per-segment alphas must sum to 1 (1e-9), mass fractions must sum to 1
    // (1e-9), all weights non-negative, and indices valid for joint_count.
    void validate(int joint_count, double tol = 1e-9) const;
};

// Plain-text table format, one segment per line:
//   segment <name> <mass_fraction> <joint>:<alpha> [<joint>:<alpha> ...]
// '#' starts a comment. Joint names are resolved against the topology.
AnthropometricTable load_anthropometric_table(const std::string& path,
                                              const SkeletonTopology& topology);

}  // namespace tafall
