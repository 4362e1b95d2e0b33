#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tafall/anthropometry.hpp"
#include "tafall/balance.hpp"
#include "tafall/camera.hpp"
#include "tafall/pose.hpp"

namespace tafall {

// Reported sensor range; wire payloads are centi-degrees in [-4000, 12000].
inline constexpr double kSensorMinC = -40.0;
inline constexpr double kSensorMaxC = 120.0;

struct TemperatureFrame {
    int width = 80;
    int height = 62;
    double timestamp = 0.0;  // seconds
    uint32_t seq_no = 0;
    std::vector<double> celsius;  // row-major height x width

    static TemperatureFrame uniform(int width, int height, double value, double timestamp = 0.0,
                                    uint32_t seq_no = 0);

    double& at(int x, int y) { return celsius[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return celsius[static_cast<size_t>(y) * width + x]; }
    size_t pixel_count() const { return celsius.size(); }

    void clamp_to_sensor_range();
    void quantize_centi();  // snap every value to a 0.01 degC step

    bool operator==(const TemperatureFrame& o) const = default;
};

// One rendered body part: a capsule between two joints with a surface
// temperature and metric radius.
struct ThermalPart {
    std::string name;
    std::string joint_a;
    std::string joint_b;
    int index_a = -1;
    int index_b = -1;
    double temp_c = 31.0;
    double radius_m = 0.08;
};

struct BodyThermalProfile {
    double ambient_c = 22.0;
    std::vector<ThermalPart> parts;

    void resolve(const SkeletonTopology& topology);  // fills index_a/index_b
    void validate() const;                           // temps above ambient, finite
};

// Plain-text profile:
//   ambient <degC>
//   part <name> <joint_a> <joint_b> <temp_c> <radius_m>
BodyThermalProfile load_thermal_profile(const std::string& path,
                                        const SkeletonTopology& topology);

// Static warm rectangle in pixel coordinates, inclusive bounds.
struct HotRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double temp_c = 30.0;
};

// Velocity-dependent blur kernel: h(x) = (1/a) exp(-x/a) with a = v*r*tau,
// truncated at truncation*a and sampled at integer pixel displacements with
// linear-interpolation weights (preserves the kernel's first moment), then
// renormalized to sum 1. taps[0] is the zero-displacement tap. v = 0 yields
// the identity kernel.
struct PsfKernel {
    std::vector<double> taps;
    double scale_px = 0.0;  // a

    double mean_px() const;
};

PsfKernel psf_kernel(double v_mps, double r, double tau_s, double truncation = 6.0);

struct RenderResult {
    TemperatureFrame frame;
    std::vector<int16_t> part_labels;  // per pixel part index, -1 for background
    int silhouette_px = 0;
};

TemperatureFrame background_frame(const CameraModel& camera, double ambient_c,
                                  std::span<const HotRect> hot_objects, double timestamp = 0.0,
                                  uint32_t seq_no = 0);

// Bones as projected capsules filled with part temperatures, painted far to
// near over ambient + hot objects. Deterministic; a body outside the frustum
// produces pure background.
RenderResult render_frame(const WorldPose& pose, const BodyThermalProfile& profile,
                          const CameraModel& camera, std::span<const HotRect> hot_objects,
                          double timestamp = 0.0, uint32_t seq_no = 0);

// Per-part 1D convolution along each part's projected motion direction (the
// blur trails the movement), then zero-mean gaussian noise and quantization
// to centi-degC. The background never blurs.
TemperatureFrame blur_and_noise(const RenderResult& sharp, const WorldPose& prev_pose,
                                const WorldPose& cur_pose, const BodyThermalProfile& profile,
                                const CameraModel& camera, std::span<const HotRect> hot_objects,
                                double tau_s, double sigma_noise_c, uint64_t rng_seed,
                                double psf_truncation = 6.0);

struct SimParams {
    double tau_camera_s = 0.10;
    double sigma_noise_c = 0.0;
    double psf_truncation = 6.0;
    double contact_epsilon = kDefaultContactEpsilon;
    BalanceStateParams state_params;
    uint64_t seed = 1;
    bool keep_sharp = false;  // also retain pre-blur frames and labels
};

struct SimOutput {
    std::vector<TemperatureFrame> frames;      // blurred + noisy + quantized
    std::vector<RenderResult> sharp;           // only when keep_sharp
    PoseSequence pose25d;                      // exact joint-wise projection
    SmobTrajectory trajectory;
    BalanceStateSequence states;
};

// End-to-end generator: thermal frames at the script's rate plus the aligned
// ground-truth bundle computed on the same script.
SimOutput simulate_sequence(const PoseSequence& script, const CameraModel& camera,
                            const BodyThermalProfile& profile, const AnthropometricTable& table,
                            std::span<const HotRect> hot_objects, const SimParams& params);

}  // namespace tafall
