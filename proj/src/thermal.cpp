#include "tafall/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tafall/rng.hpp"

namespace tafall {

TemperatureFrame TemperatureFrame::uniform(int width, int height, double value, double timestamp,
                                           uint32_t seq_no) {
    TemperatureFrame f;
    f.width = width;
    f.height = height;
    f.timestamp = timestamp;
    f.seq_no = seq_no;
    f.celsius.assign(static_cast<size_t>(width) * height, value);
    return f;
}

void TemperatureFrame::clamp_to_sensor_range() {
    for (double& c : celsius) c = std::clamp(c, kSensorMinC, kSensorMaxC);
}

void TemperatureFrame::quantize_centi() {
    for (double& c : celsius) c = std::round(c * 100.0) / 100.0;
}

void BodyThermalProfile::resolve(const SkeletonTopology& topology) {
    for (ThermalPart& p : parts) {
        p.index_a = topology.index_of(p.joint_a);
        p.index_b = topology.index_of(p.joint_b);
        if (p.index_a < 0 || p.index_b < 0)
            throw std::invalid_argument("thermal profile part '" + p.name +
                                        "': unknown joint name");
    }
}

void BodyThermalProfile::validate() const {
    if (!std::isfinite(ambient_c)) throw std::invalid_argument("thermal profile: ambient not finite");
    for (const ThermalPart& p : parts) {
        if (!std::isfinite(p.temp_c) || p.temp_c <= ambient_c)
            throw std::invalid_argument("thermal profile part '" + p.name +
                                        "': temperature must exceed ambient");
        if (!(p.radius_m > 0.0))
            throw std::invalid_argument("thermal profile part '" + p.name + "': radius must be positive");
    }
}

BodyThermalProfile load_thermal_profile(const std::string& path,
                                        const SkeletonTopology& topology) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open thermal profile: " + path);

    BodyThermalProfile profile;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string kind;
        if (!(ss >> kind)) continue;
        if (kind == "ambient") {
            if (!(ss >> profile.ambient_c))
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad ambient");
        } else if (kind == "part") {
            ThermalPart p;
            if (!(ss >> p.name >> p.joint_a >> p.joint_b >> p.temp_c >> p.radius_m))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 'part <name> <joint_a> <joint_b> <temp> <radius>'");
            profile.parts.push_back(std::move(p));
        } else {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown directive '" + kind + "'");
        }
    }
    profile.resolve(topology);
    profile.validate();
    return profile;
}

double PsfKernel::mean_px() const {
    double m = 0.0;
    for (size_t i = 0; i < taps.size(); ++i) m += static_cast<double>(i) * taps[i];
    return m;
}

namespace {

// int_l^u e^{-x/a} dx
double exp_int0(double l, double u, double a) {
    return a * (std::exp(-l / a) - std::exp(-u / a));
}

// int_l^u e^{-x/a} (x - c) dx
double exp_int1(double l, double u, double c, double a) {
    return a * (l + a) * std::exp(-l / a) - a * (u + a) * std::exp(-u / a) -
           c * exp_int0(l, u, a);
}

}  // namespace

PsfKernel psf_kernel(double v_mps, double r, double tau_s, double truncation) {
    if (v_mps < 0.0) throw std::invalid_argument("psf_kernel: negative velocity");
    if (!(r > 0.0) || !(tau_s > 0.0)) throw std::invalid_argument("psf_kernel: r and tau must be positive");
    if (!(truncation > 0.0)) throw std::invalid_argument("psf_kernel: truncation must be positive");

    PsfKernel kernel;
    const double a = v_mps * r * tau_s;
    kernel.scale_px = a;
    if (a <= 0.0) {
        kernel.taps = {1.0};
        return kernel;
    }

    const double cutoff = truncation * a;
    const int n = static_cast<int>(std::ceil(cutoff));
    kernel.taps.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        double tap = 0.0;
        // rising edge of the tent over [i-1, i]
        double lo = std::max(0.0, i - 1.0);
        double hi = std::min(static_cast<double>(i), cutoff);
        if (hi > lo) tap += exp_int1(lo, hi, i - 1.0, a);
        // falling edge over [i, i+1]
        lo = static_cast<double>(i);
        hi = std::min(i + 1.0, cutoff);
        if (hi > lo) tap -= exp_int1(lo, hi, i + 1.0, a);
        kernel.taps.push_back(std::max(0.0, tap) / a);
    }
    const double sum = std::accumulate(kernel.taps.begin(), kernel.taps.end(), 0.0);
    for (double& t : kernel.taps) t /= sum;
    return kernel;
}

TemperatureFrame background_frame(const CameraModel& camera, double ambient_c,
                                  std::span<const HotRect> hot_objects, double timestamp,
                                  uint32_t seq_no) {
    TemperatureFrame frame =
        TemperatureFrame::uniform(camera.width, camera.height, ambient_c, timestamp, seq_no);
    for (const HotRect& rect : hot_objects) {
        for (int y = std::max(0, rect.y0); y <= std::min(camera.height - 1, rect.y1); ++y)
            for (int x = std::max(0, rect.x0); x <= std::min(camera.width - 1, rect.x1); ++x)
                frame.at(x, y) = rect.temp_c;
    }
    return frame;
}

namespace {

struct ProjectedCapsule {
    int part_index;
    Vec2 a_px, b_px;
    double radius_px;
    double depth;
};

std::vector<ProjectedCapsule> project_capsules(const WorldPose& pose,
                                               const BodyThermalProfile& profile,
                                               const CameraModel& camera) {
    std::vector<ProjectedCapsule> capsules;
    for (size_t i = 0; i < profile.parts.size(); ++i) {
        const ThermalPart& part = profile.parts[i];
        const auto pa = project(pose.joints.at(part.index_a), camera);
        const auto pb = project(pose.joints.at(part.index_b), camera);
        if (!pa || !pb) continue;  // behind the camera

        ProjectedCapsule cap;
        cap.part_index = static_cast<int>(i);
        cap.a_px = {pa->u * camera.width, pa->v * camera.height};
        cap.b_px = {pb->u * camera.width, pb->v * camera.height};
        cap.depth = 0.5 * (pa->depth + pb->depth);
        cap.radius_px = part.radius_m * camera.fx() / cap.depth;
        capsules.push_back(cap);
    }
    // painter's order, far to near
    std::sort(capsules.begin(), capsules.end(),
              [](const ProjectedCapsule& l, const ProjectedCapsule& r) { return l.depth > r.depth; });
    return capsules;
}

}  // namespace

RenderResult render_frame(const WorldPose& pose, const BodyThermalProfile& profile,
                          const CameraModel& camera, std::span<const HotRect> hot_objects,
                          double timestamp, uint32_t seq_no) {
    RenderResult out;
    out.frame = background_frame(camera, profile.ambient_c, hot_objects, timestamp, seq_no);
    out.part_labels.assign(out.frame.pixel_count(), -1);

    for (const ProjectedCapsule& cap : project_capsules(pose, profile, camera)) {
        const double r = cap.radius_px;
        const int x0 = static_cast<int>(std::floor(std::min(cap.a_px.x, cap.b_px.x) - r));
        const int x1 = static_cast<int>(std::ceil(std::max(cap.a_px.x, cap.b_px.x) + r));
        const int y0 = static_cast<int>(std::floor(std::min(cap.a_px.y, cap.b_px.y) - r));
        const int y1 = static_cast<int>(std::ceil(std::max(cap.a_px.y, cap.b_px.y) + r));
        const double temp = profile.parts[cap.part_index].temp_c;
        for (int y = std::max(0, y0); y <= std::min(camera.height - 1, y1); ++y) {
            for (int x = std::max(0, x0); x <= std::min(camera.width - 1, x1); ++x) {
                const Vec2 center{x + 0.5, y + 0.5};
                if (point_segment_distance(center, cap.a_px, cap.b_px) <= r) {
                    out.frame.at(x, y) = temp;
                    out.part_labels[static_cast<size_t>(y) * camera.width + x] =
                        static_cast<int16_t>(cap.part_index);
                }
            }
        }
    }
    out.silhouette_px = static_cast<int>(
        std::count_if(out.part_labels.begin(), out.part_labels.end(), [](int16_t l) { return l >= 0; }));
    return out;
}

TemperatureFrame blur_and_noise(const RenderResult& sharp, const WorldPose& prev_pose,
                                const WorldPose& cur_pose, const BodyThermalProfile& profile,
                                const CameraModel& camera, std::span<const HotRect> hot_objects,
                                double tau_s, double sigma_noise_c, uint64_t rng_seed,
                                double psf_truncation) {
    if (sharp.frame.width != camera.width || sharp.frame.height != camera.height)
        throw std::invalid_argument("blur_and_noise: frame/camera dimension mismatch");
    if (prev_pose.joints.size() != cur_pose.joints.size())
        throw std::invalid_argument("blur_and_noise: pose joint-count mismatch");

    const double dt = cur_pose.t - prev_pose.t;
    const TemperatureFrame background = background_frame(
        camera, profile.ambient_c, hot_objects, sharp.frame.timestamp, sharp.frame.seq_no);
    TemperatureFrame out = background;

    // Per-part image displacement -> velocity -> kernel; body-added heat is
    // splatted along the trail (opposite the motion direction). Background
    // pixels are never smeared.
    for (size_t part = 0; part < profile.parts.size(); ++part) {
        const ThermalPart& tp = profile.parts[part];
        PsfKernel kernel;
        Vec2 dir{0.0, 0.0};
        kernel.taps = {1.0};

        const auto cur_a = project(cur_pose.joints.at(tp.index_a), camera);
        const auto cur_b = project(cur_pose.joints.at(tp.index_b), camera);
        const auto prev_a = project(prev_pose.joints.at(tp.index_a), camera);
        const auto prev_b = project(prev_pose.joints.at(tp.index_b), camera);
        if (dt > 0.0 && cur_a && cur_b && prev_a && prev_b) {
            const Vec2 cur_c{0.5 * (cur_a->u + cur_b->u) * camera.width,
                             0.5 * (cur_a->v + cur_b->v) * camera.height};
            const Vec2 prev_c{0.5 * (prev_a->u + prev_b->u) * camera.width,
                              0.5 * (prev_a->v + prev_b->v) * camera.height};
            const Vec2 disp = cur_c - prev_c;
            const double disp_px = disp.norm();
            if (disp_px > 1e-12) {
                const double depth = 0.5 * (cur_a->depth + cur_b->depth);
                const double v_mps = disp_px * (depth / camera.fx()) / dt;
                const double r_px_per_m = camera.fx() / depth;
                kernel = psf_kernel(v_mps, r_px_per_m, tau_s, psf_truncation);
                dir = disp * (1.0 / disp_px);
            }
        }

        for (int y = 0; y < camera.height; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                if (sharp.part_labels[static_cast<size_t>(y) * camera.width + x] !=
                    static_cast<int16_t>(part))
                    continue;
                const double delta = sharp.frame.at(x, y) - background.at(x, y);
                for (size_t k = 0; k < kernel.taps.size(); ++k) {
                    const int tx = static_cast<int>(std::lround(x - dir.x * static_cast<double>(k)));
                    const int ty = static_cast<int>(std::lround(y - dir.y * static_cast<double>(k)));
                    if (tx < 0 || tx >= camera.width || ty < 0 || ty >= camera.height) continue;
                    out.at(tx, ty) += kernel.taps[k] * delta;
                }
            }
        }
    }

    if (sigma_noise_c > 0.0) {
        Rng rng(rng_seed);
        for (double& c : out.celsius) c += sigma_noise_c * rng.gaussian();
    }
    out.clamp_to_sensor_range();
    out.quantize_centi();
    return out;
}

SimOutput simulate_sequence(const PoseSequence& script, const CameraModel& camera,
                            const BodyThermalProfile& profile, const AnthropometricTable& table,
                            std::span<const HotRect> hot_objects, const SimParams& params) {
    if (script.space != PoseSpace::World)
        throw std::invalid_argument("simulate_sequence: script must be in world space");
    script.validate();
    camera.validate();
    profile.validate();

    SimOutput out;
    out.pose25d.topology = script.topology;
    out.pose25d.space = PoseSpace::Image25d;
    out.pose25d.frame_rate = script.frame_rate;
    out.trajectory = smob_trajectory(script, table, params.contact_epsilon);
    out.states = segment_states(out.trajectory, script, params.state_params);

    out.frames.reserve(script.frames.size());
    for (size_t i = 0; i < script.frames.size(); ++i) {
        const WorldPose& pose = script.frames[i];
        out.pose25d.frames.push_back(project_pose(pose, camera));

        RenderResult sharp = render_frame(pose, profile, camera, hot_objects, pose.t,
                                          static_cast<uint32_t>(i));
        const WorldPose& prev = i > 0 ? script.frames[i - 1] : pose;
        out.frames.push_back(blur_and_noise(sharp, prev, pose, profile, camera, hot_objects,
                                            params.tau_camera_s, params.sigma_noise_c,
                                            derive_seed(params.seed, i), params.psf_truncation));
        if (params.keep_sharp) out.sharp.push_back(std::move(sharp));
    }
    return out;
}

}  // namespace tafall
