#include "tafall/anthropometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tafall {

void AnthropometricTable::validate(int joint_count, double tol) const {
    if (segments.empty()) throw std::invalid_argument("anthropometric table: no segments");
    double mass_sum = 0.0;
    for (const BodySegment& s : segments) {
        if (s.joint_indices.empty() || s.joint_indices.size() != s.alphas.size())
            throw std::invalid_argument("segment '" + s.name + "': joints/alphas mismatch");
        double alpha_sum = 0.0;
        for (size_t k = 0; k < s.joint_indices.size(); ++k) {
            const int idx = s.joint_indices[k];
            if (idx < 0 || idx >= joint_count)
                throw std::invalid_argument("segment '" + s.name + "': joint index out of range");
            if (s.alphas[k] < 0.0)
                throw std::invalid_argument("segment '" + s.name + "': negative alpha");
            alpha_sum += s.alphas[k];
        }
        if (std::abs(alpha_sum - 1.0) > tol)
            throw std::invalid_argument("segment '" + s.name + "': alphas sum to " +
                                        std::to_string(alpha_sum) + ", expected 1");
        if (s.mass_fraction < 0.0)
            throw std::invalid_argument("segment '" + s.name + "': negative mass fraction");
        mass_sum += s.mass_fraction;
    }
    if (std::abs(mass_sum - 1.0) > tol)
        throw std::invalid_argument("anthropometric table: mass fractions sum to " +
                                    std::to_string(mass_sum) + ", expected 1");
}

AnthropometricTable load_anthropometric_table(const std::string& path,
                                              const SkeletonTopology& topology) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open anthropometric table: " + path);

    AnthropometricTable table;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string kind;
        if (!(ss >> kind)) continue;
        if (kind != "segment")
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown directive '" + kind + "'");
        BodySegment seg;
        if (!(ss >> seg.name >> seg.mass_fraction))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected '<name> <mass_fraction>'");
        std::string pair;
        while (ss >> pair) {
            const size_t colon = pair.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected '<joint>:<alpha>', got '" + pair + "'");
            const std::string joint = pair.substr(0, colon);
            const int idx = topology.index_of(joint);
            if (idx < 0)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unknown joint '" + joint + "'");
            seg.joint_indices.push_back(idx);
            seg.alphas.push_back(std::stod(pair.substr(colon + 1)));
        }
        table.segments.push_back(std::move(seg));
    }
    table.validate(topology.joint_count());
    return table;
}

}  // namespace tafall
