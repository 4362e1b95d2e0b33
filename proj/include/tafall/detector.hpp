#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tafall/balance.hpp"
#include "tafall/pose.hpp"

namespace tafall {

struct DetectorConfig {
    int window_len = 40;  // frames (2 s at 20 Hz)
    int stride = 10;      // frames

    double p_fall_threshold = 0.95;   // fall probability gate
    double presence_threshold = 0.5;  // presence-confidence gate

    int lob_persistence = 2;
    double gis_height = 0.35;          // meters
    double contact_epsilon = kDefaultContactEpsilon;

    // Logistic window score p = sigmoid(w1*f_deficit + w2*f_duration +
    // w3*f_descent - b). Feature scales saturate the deficit at 0.3 m and the
    // downward CoM speed at 2 m/s.
    double w_deficit = 4.0;
    double w_duration = 3.0;
    double w_descent = 2.0;
    double score_bias = 4.0;
    double deficit_scale_m = 0.3;
    double descent_scale_mps = 2.0;

    // A candidate truncated by the end of the stream still becomes an event
    // when the CoM is descending at least this fast at truncation.
    double truncation_descent_mps = 0.5;

    double match_tolerance_s = 1.0;
    bool include_absent_windows_in_far = false;

    void validate() const;
};

struct FallEvent {
    double t_onset = 0.0;             // seconds, start of the LoB run
    std::optional<double> t_impact;   // seconds, GIS onset; absent when truncated
    double peak_deficit_m = 0.0;      // largest margin deficit beyond the support
    double confidence = 0.0;

    bool operator==(const FallEvent& o) const = default;
};

struct WindowRecord {
    int start_frame = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    double presence_fraction = 0.0;  // fraction of frames passing the presence gate
    bool evaluated = false;          // majority presence
    double p = 0.0;
    bool fired = false;
};

struct DetectionResult {
    std::vector<FallEvent> events;
    std::vector<WindowRecord> windows;
};

// Window score over a trajectory slice; monotone non-decreasing in each
// feature. Velocities are taken between samples inside the window only.
double fall_probability(std::span<const SmobSample> window, const DetectorConfig& config);

// One detector instance owns one stream; frames must arrive in order.
class StreamingDetector {
  public:
    StreamingDetector(const SkeletonTopology& topology, const AnthropometricTable& table,
                      const DetectorConfig& config);

    void push(const WorldPose& pose, double presence_confidence);
    DetectionResult finish();

    size_t frames_seen() const { return total_frames_; }
    size_t history_size() const { return samples_.size(); }  // retained, post-trim
    const DetectorConfig& config() const { return config_; }

  private:
    struct Candidate {
        int start_frame = 0;
        int end_frame = 0;  // exclusive
        double max_p = 0.0;
    };

    void evaluate_window(int start_frame);
    void close_candidate();
    void trim_history();

    SkeletonTopology topology_;
    AnthropometricTable table_;
    DetectorConfig config_;
    int pelvis_index_ = -1;

    // Sample storage covers absolute frames [trimmed_, total_frames_); history
    // behind the active window/candidate is discarded so long streams run in
    // bounded memory.
    std::vector<SmobSample> samples_;
    std::vector<double> pelvis_z_;
    std::vector<double> presence_;
    size_t trimmed_ = 0;
    size_t total_frames_ = 0;
    std::optional<Candidate> candidate_;
    DetectionResult result_;
    bool finished_ = false;
};

// Offline convenience: run the streaming detector over a whole sequence.
// presence may be empty (treated as confidence 1 everywhere) or per-frame.
DetectionResult detect_stream(const PoseSequence& poses, std::span<const double> presence,
                              const AnthropometricTable& table, const DetectorConfig& config);

struct TruthFall {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct TruthScenario {
    double duration_s = 0.0;
    std::vector<TruthFall> falls;
};

struct DetectionReport {
    std::optional<double> dr;   // matched / total_true_falls
    std::optional<double> far;  // false_windows / total_nonfall_windows
    int matched_events = 0;
    int missed_events = 0;
    int false_windows = 0;
    int total_true_falls = 0;
    int total_nonfall_windows = 0;
};

// A truth fall matches an event whose impact time (onset when impact is
// absent) lies within match_tolerance of the truth interval; each event
// matches at most one truth fall. Fired windows outside every (tolerance-
// inflated) truth interval count toward FAR over the evaluated windows.
DetectionReport evaluate(const DetectionResult& result, const TruthScenario& truth,
                         const DetectorConfig& config, double match_tolerance_s);

// Event and truth file I/O (JSONL events, JSON truth).
void write_events_jsonl(std::span<const FallEvent> events, const std::string& path);
std::vector<FallEvent> load_events_jsonl(const std::string& path);
void write_truth_json(const TruthScenario& truth, const std::string& path);
TruthScenario load_truth_json(const std::string& path);
void write_window_log_jsonl(std::span<const WindowRecord> windows, const std::string& path);

}  // namespace tafall
