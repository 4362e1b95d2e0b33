#include "tafall/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tafall {

void MhiParams::validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("mhi: k must be positive");
    if (theta < 0.0) throw std::invalid_argument("mhi: theta must be non-negative");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("mhi: gamma must be in (0,1)");
}

double MotionGrid::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

MotionHistoryImage MotionHistoryImage::zeros(int width, int height) {
    MotionHistoryImage mhi;
    mhi.grid.width = width;
    mhi.grid.height = height;
    mhi.grid.values.assign(static_cast<size_t>(width) * height, 0.0);
    return mhi;
}

MotionGrid normalize_frame(const TemperatureFrame& frame) {
    MotionGrid grid;
    grid.width = frame.width;
    grid.height = frame.height;
    grid.values.resize(frame.pixel_count());
    const double span = kSensorMaxC - kSensorMinC;
    for (size_t i = 0; i < frame.celsius.size(); ++i) {
        grid.values[i] = std::clamp((frame.celsius[i] - kSensorMinC) / span, 0.0, 1.0);
    }
    return grid;
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

MotionGrid soft_motion_mask(const TemperatureFrame& cur, const TemperatureFrame& prev,
                            const MhiParams& params) {
    if (cur.width != prev.width || cur.height != prev.height)
        throw std::invalid_argument("soft_motion_mask: dimension mismatch");
    params.validate();

    const MotionGrid a = normalize_frame(cur);
    const MotionGrid b = normalize_frame(prev);
    MotionGrid out;
    out.width = cur.width;
    out.height = cur.height;
    out.values.resize(a.values.size());
    for (size_t i = 0; i < a.values.size(); ++i) {
        out.values[i] = sigmoid(params.k * (std::abs(a.values[i] - b.values[i]) - params.theta));
    }
    return out;
}

MotionHistoryImage mhi_update(const MotionHistoryImage& prev_mhi, const MotionGrid& prev_mask,
                              double gamma, double timestamp) {
    if (prev_mhi.grid.width != prev_mask.width || prev_mhi.grid.height != prev_mask.height)
        throw std::invalid_argument("mhi_update: dimension mismatch");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("mhi_update: gamma must be in (0,1)");

    MotionHistoryImage out = prev_mhi;
    out.timestamp = timestamp;
    for (size_t i = 0; i < out.grid.values.size(); ++i) {
        out.grid.values[i] = std::max(gamma * prev_mhi.grid.values[i], prev_mask.values[i]);
    }
    return out;
}

std::vector<std::vector<double>> biased_attention(const std::vector<std::vector<double>>& scores,
                                                  const std::vector<std::vector<double>>& bias) {
    if (scores.size() != bias.size())
        throw std::invalid_argument("biased_attention: shape mismatch");

    std::vector<std::vector<double>> out(scores.size());
    for (size_t r = 0; r < scores.size(); ++r) {
        const auto& srow = scores[r];
        const auto& brow = bias[r];
        if (srow.size() != brow.size())
            throw std::invalid_argument("biased_attention: shape mismatch");
        std::vector<double> combined(srow.size());
        double row_max = -std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < srow.size(); ++c) {
            if (!std::isfinite(srow[c]) || !std::isfinite(brow[c]))
                throw std::invalid_argument("biased_attention: non-finite input");
            combined[c] = srow[c] + brow[c];
            row_max = std::max(row_max, combined[c]);
        }
        double denom = 0.0;
        for (double& v : combined) {
            v = std::exp(v - row_max);
            denom += v;
        }
        for (double& v : combined) v /= denom;
        out[r] = std::move(combined);
    }
    return out;
}

std::optional<PresenceDetection> detect_presence(const TemperatureFrame& frame, double ambient_c,
                                                 const PresenceParams& params) {
    if (!(params.min_delta_c > 0.0) || params.min_area_px <= 0 ||
        !(params.expected_body_area_px > 0.0))
        throw std::invalid_argument("detect_presence: params must be positive");

    const double threshold = ambient_c + params.min_delta_c;
    const int w = frame.width, h = frame.height;
    std::vector<int> component(static_cast<size_t>(w) * h, -1);

    struct Blob {
        int area = 0;
        double temp_sum = 0.0;
        long long cx_sum = 0, cy_sum = 0;
        int x0, y0, x1, y1;
    };
    std::vector<Blob> blobs;

    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            if (component[idx] >= 0 || frame.celsius[idx] < threshold) continue;
            const int id = static_cast<int>(blobs.size());
            Blob blob{0, 0.0, 0, 0, x, y, x, y};
            component[idx] = id;
            stack.assign(1, static_cast<int>(idx));
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cx = cur % w, cy = cur / w;
                ++blob.area;
                blob.temp_sum += frame.celsius[cur];
                blob.cx_sum += cx;
                blob.cy_sum += cy;
                blob.x0 = std::min(blob.x0, cx);
                blob.x1 = std::max(blob.x1, cx);
                blob.y0 = std::min(blob.y0, cy);
                blob.y1 = std::max(blob.y1, cy);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        const size_t nidx = static_cast<size_t>(ny) * w + nx;
                        if (component[nidx] >= 0 || frame.celsius[nidx] < threshold) continue;
                        component[nidx] = id;
                        stack.push_back(static_cast<int>(nidx));
                    }
                }
            }
            blobs.push_back(blob);
        }
    }

    const Blob* best = nullptr;
    for (const Blob& b : blobs) {
        if (!best || b.area > best->area ||
            (b.area == best->area && b.temp_sum / b.area > best->temp_sum / best->area)) {
            best = &b;
        }
    }
    if (!best || best->area < params.min_area_px) return std::nullopt;

    PresenceDetection det;
    det.bbox = {best->x0, best->y0, best->x1, best->y1};
    det.center = {static_cast<double>(best->cx_sum) / best->area,
                  static_cast<double>(best->cy_sum) / best->area};
    det.area_px = best->area;
    det.confidence = std::clamp(best->area / params.expected_body_area_px, 0.0, 1.0);
    return det;
}

TemperatureFrame mask_frame(const TemperatureFrame& frame, const PresenceDetection& det,
                            int margin_px, double ambient_c) {
    if (det.bbox.x0 < 0 || det.bbox.y0 < 0 || det.bbox.x1 >= frame.width ||
        det.bbox.y1 >= frame.height || det.bbox.x0 > det.bbox.x1 || det.bbox.y0 > det.bbox.y1)
        throw std::invalid_argument("mask_frame: bbox out of bounds");

    PixelRect keep{det.bbox.x0 - margin_px, det.bbox.y0 - margin_px, det.bbox.x1 + margin_px,
                   det.bbox.y1 + margin_px};
    TemperatureFrame out = frame;
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            if (!keep.contains(x, y)) out.at(x, y) = ambient_c;
    return out;
}

}  // namespace tafall
