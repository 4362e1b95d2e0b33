#pragma once

#include <optional>
#include <vector>

#include "tafall/thermal.hpp"

namespace tafall {

struct MhiParams {
    double k = 50.0;     // soft-threshold sharpness
    double theta = 0.05; // activation level on [0,1]-normalized frames
    double gamma = 0.9;  // decay in (0,1)

    void validate() const;
};

struct MotionGrid {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // row-major, all in [0,1]

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double max_value() const;
};

struct MotionHistoryImage {
    MotionGrid grid;
    double timestamp = 0.0;

    static MotionHistoryImage zeros(int width, int height);
};

// Normalize a frame to [0,1] over the fixed sensor range; static scenes stay
// stable under noise because the bounds never move.
MotionGrid normalize_frame(const TemperatureFrame& frame);

// m = sigmoid(k * (|x_t - x_{t-1}| - theta)) over normalized frames.
MotionGrid soft_motion_mask(const TemperatureFrame& cur, const TemperatureFrame& prev,
                            const MhiParams& params);

// M_t = max(gamma * M_{t-1}, m_{t-1}); the mask is the previous frame's.
MotionHistoryImage mhi_update(const MotionHistoryImage& prev_mhi, const MotionGrid& prev_mask,
                              double gamma, double timestamp = 0.0);

// Row-wise softmax of scores + bias; rows sum to 1. Scores are expected to be
// pre-scaled (q.k^T / sqrt(d_h)).
std::vector<std::vector<double>> biased_attention(const std::vector<std::vector<double>>& scores,
                                                  const std::vector<std::vector<double>>& bias);

struct PresenceParams {
    double min_delta_c = 2.0;            // above ambient
    int min_area_px = 6;
    double expected_body_area_px = 120;  // depth-agnostic confidence scale
};

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct PresenceDetection {
    PixelRect bbox;
    Vec2 center;        // pixel centroid
    double confidence = 0.0;
    int area_px = 0;
};

// Largest 8-connected component of pixels at least min_delta above ambient;
// ties between equal-area blobs break toward the hotter one. Absent when the
// best component is smaller than min_area.
std::optional<PresenceDetection> detect_presence(const TemperatureFrame& frame, double ambient_c,
                                                 const PresenceParams& params = {});

// Everything outside bbox grown by margin is reset to ambient.
TemperatureFrame mask_frame(const TemperatureFrame& frame, const PresenceDetection& det,
                            int margin_px, double ambient_c);

}  // namespace tafall
