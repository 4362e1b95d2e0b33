#include "tafall/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tafall {

using nlohmann::json;

void DetectorConfig::validate() const {
    if (window_len <= 1) throw std::invalid_argument("detector: window_len must exceed 1");
    if (stride <= 0 || stride > window_len)
        throw std::invalid_argument("detector: need 0 < stride <= window_len");
    if (p_fall_threshold < 0.0 || p_fall_threshold > 1.0 || presence_threshold < 0.0 ||
        presence_threshold > 1.0)
        throw std::invalid_argument("detector: thresholds must be in [0,1]");
    if (lob_persistence < 1) throw std::invalid_argument("detector: lob_persistence must be >= 1");
    if (!(gis_height > 0.0) || !(contact_epsilon > 0.0))
        throw std::invalid_argument("detector: heights must be positive");
    if (!(deficit_scale_m > 0.0) || !(descent_scale_mps > 0.0))
        throw std::invalid_argument("detector: feature scales must be positive");
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Frame-local instability: negative margin, or undefined margin while the CoM
// descends relative to the previous sample in the slice.
std::vector<char> unstable_flags(std::span<const SmobSample> slice) {
    std::vector<char> flags(slice.size(), 0);
    for (size_t i = 0; i < slice.size(); ++i) {
        if (slice[i].smob) {
            flags[i] = *slice[i].smob < 0.0;
        } else {
            flags[i] = i > 0 && slice[i].com.z < slice[i - 1].com.z;
        }
    }
    return flags;
}

double max_descent_rate(std::span<const SmobSample> slice) {
    double v_down_max = 0.0;
    for (size_t i = 1; i < slice.size(); ++i) {
        const double dt = slice[i].t - slice[i - 1].t;
        if (dt <= 0.0) continue;
        const double vz = (slice[i].com.z - slice[i - 1].com.z) / dt;
        v_down_max = std::max(v_down_max, -vz);
    }
    return v_down_max;
}

}  // namespace

double fall_probability(std::span<const SmobSample> window, const DetectorConfig& config) {
    if (window.size() < 2) throw std::invalid_argument("fall_probability: window too short");

    double smob_min = std::numeric_limits<double>::infinity();
    for (const SmobSample& s : window) {
        if (s.smob) smob_min = std::min(smob_min, *s.smob);
    }
    const double deficit =
        std::isfinite(smob_min) ? std::max(0.0, -smob_min) : 0.0;
    const double f_deficit = std::min(1.0, deficit / config.deficit_scale_m);

    const std::vector<char> flags = unstable_flags(window);
    const double f_duration =
        static_cast<double>(std::count(flags.begin(), flags.end(), 1)) /
        static_cast<double>(window.size());

    const double f_descent =
        std::min(1.0, std::max(0.0, max_descent_rate(window)) / config.descent_scale_mps);

    return sigmoid(config.w_deficit * f_deficit + config.w_duration * f_duration +
                   config.w_descent * f_descent - config.score_bias);
}

StreamingDetector::StreamingDetector(const SkeletonTopology& topology,
                                     const AnthropometricTable& table,
                                     const DetectorConfig& config)
    : topology_(topology), table_(table), config_(config) {
    topology_.validate();
    table_.validate(topology_.joint_count());
    config_.validate();
    pelvis_index_ = topology_.index_of("pelvis");
}

void StreamingDetector::push(const WorldPose& pose, double presence_confidence) {
    if (finished_) throw std::logic_error("StreamingDetector: push after finish");
    if (static_cast<int>(pose.joints.size()) != topology_.joint_count())
        throw std::invalid_argument("StreamingDetector: joint-count mismatch");
    if (!samples_.empty() && !(pose.t > samples_.back().t))
        throw std::invalid_argument("StreamingDetector: non-monotone timestamp");

    SmobSample s;
    s.t = pose.t;
    s.com = compute_com(pose, table_);
    s.bos = compute_bos(pose, topology_, config_.contact_epsilon);
    if (s.bos) s.smob = signed_margin(s.com.xy(), *s.bos);
    samples_.push_back(std::move(s));
    pelvis_z_.push_back(pelvis_index_ >= 0 ? pose.joints[pelvis_index_].z
                                           : samples_.back().com.z);
    presence_.push_back(presence_confidence);
    ++total_frames_;

    const int n = static_cast<int>(total_frames_);
    if (n >= config_.window_len && (n - config_.window_len) % config_.stride == 0) {
        evaluate_window(n - config_.window_len);
    }
    trim_history();
}

void StreamingDetector::trim_history() {
    const int n = static_cast<int>(total_frames_);
    size_t keep_from = 0;
    if (n >= config_.window_len) {
        const int last_start = (n - config_.window_len) / config_.stride * config_.stride;
        keep_from = static_cast<size_t>(last_start + config_.stride);
    }
    if (candidate_) keep_from = std::min(keep_from, static_cast<size_t>(candidate_->start_frame));
    if (keep_from <= trimmed_) return;
    const size_t drop = keep_from - trimmed_;
    samples_.erase(samples_.begin(), samples_.begin() + drop);
    pelvis_z_.erase(pelvis_z_.begin(), pelvis_z_.begin() + drop);
    presence_.erase(presence_.begin(), presence_.begin() + drop);
    trimmed_ = keep_from;
}

void StreamingDetector::evaluate_window(int start_frame) {
    const int len = config_.window_len;
    const size_t offset = static_cast<size_t>(start_frame) - trimmed_;
    WindowRecord rec;
    rec.start_frame = start_frame;
    rec.t_start = samples_[offset].t;
    rec.t_end = samples_[offset + len - 1].t;

    int present = 0;
    for (size_t i = offset; i < offset + len; ++i) {
        if (presence_[i] >= config_.presence_threshold) ++present;
    }
    rec.presence_fraction = static_cast<double>(present) / len;
    rec.evaluated = 2 * present > len;

    rec.p = fall_probability({samples_.data() + offset, static_cast<size_t>(len)}, config_);
    rec.fired = rec.evaluated && rec.p >= config_.p_fall_threshold;

    // Overlapping firing windows merge into one candidate; once a window
    // starts past the candidate's end no later window can overlap it either.
    if (candidate_ && start_frame >= candidate_->end_frame) close_candidate();
    if (rec.fired) {
        if (candidate_) {
            candidate_->end_frame = start_frame + len;
            candidate_->max_p = std::max(candidate_->max_p, rec.p);
        } else {
            candidate_ = Candidate{start_frame, start_frame + len, rec.p};
        }
    }
    result_.windows.push_back(rec);
}

void StreamingDetector::close_candidate() {
    if (!candidate_) return;
    const Candidate cand = *candidate_;
    candidate_.reset();

    const size_t offset = static_cast<size_t>(cand.start_frame) - trimmed_;
    const std::span<const SmobSample> span{samples_.data() + offset,
                                           static_cast<size_t>(cand.end_frame - cand.start_frame)};
    const std::vector<char> flags = unstable_flags(span);

    // LoB runs within the candidate span.
    int lob_start = -1;
    {
        size_t i = 0;
        while (i < flags.size()) {
            if (!flags[i]) {
                ++i;
                continue;
            }
            size_t j = i;
            while (j < flags.size() && flags[j]) ++j;
            if (j - i >= static_cast<size_t>(config_.lob_persistence)) {
                lob_start = static_cast<int>(i);
                break;
            }
            i = j;
        }
    }
    if (lob_start < 0) return;

    // First GIS run at or after the LoB start. A run whose preceding frame is
    // stable (non-negative margin, pelvis still up) is a controlled descent,
    // not an impact; skip it whole.
    int gis = -1;
    {
        auto below = [&](int i) { return pelvis_z_[offset + i] < config_.gis_height; };
        int i = lob_start;
        const int n = static_cast<int>(span.size());
        while (i < n) {
            if (!below(i)) {
                ++i;
                continue;
            }
            int run_end = i;
            while (run_end < n && below(run_end)) ++run_end;
            const int prev = i - 1;
            const bool prev_stable = prev >= 0 && span[prev].smob && *span[prev].smob >= 0.0 &&
                                     !below(prev);
            if (prev_stable) {
                i = run_end;
                continue;
            }
            gis = i;
            break;
        }
    }

    if (gis < 0) {
        // Only a candidate still open when the trajectory ends may fire
        // without a GIS frame, and only under sustained descent at the end.
        if (!finished_) return;
        const size_t tail = std::min<size_t>(5, samples_.size());
        const double v_down =
            max_descent_rate({samples_.data() + samples_.size() - tail, tail});
        if (v_down < config_.truncation_descent_mps) return;
    }

    FallEvent event;
    event.t_onset = span[lob_start].t;
    if (gis >= 0) event.t_impact = span[gis].t;
    double smob_min = 0.0;
    for (const SmobSample& s : span) {
        if (s.smob) smob_min = std::min(smob_min, *s.smob);
    }
    event.peak_deficit_m = std::max(0.0, -smob_min);
    event.confidence = cand.max_p;
    result_.events.push_back(event);
}

DetectionResult StreamingDetector::finish() {
    if (finished_) throw std::logic_error("StreamingDetector: finish called twice");
    finished_ = true;
    close_candidate();
    return std::move(result_);
}

DetectionResult detect_stream(const PoseSequence& poses, std::span<const double> presence,
                              const AnthropometricTable& table, const DetectorConfig& config) {
    if (poses.space != PoseSpace::World)
        throw std::invalid_argument("detect_stream: poses must be in world space");
    if (!presence.empty() && presence.size() != poses.frames.size())
        throw std::invalid_argument("detect_stream: presence series misaligned with poses");

    StreamingDetector detector(poses.topology, table, config);
    for (size_t i = 0; i < poses.frames.size(); ++i) {
        detector.push(poses.frames[i], presence.empty() ? 1.0 : presence[i]);
    }
    return detector.finish();
}

DetectionReport evaluate(const DetectionResult& result, const TruthScenario& truth,
                         const DetectorConfig& config, double match_tolerance_s) {
    DetectionReport report;
    report.total_true_falls = static_cast<int>(truth.falls.size());

    // Chronological greedy matching, one event per truth fall.
    std::vector<char> truth_matched(truth.falls.size(), 0);
    for (const FallEvent& event : result.events) {
        const double key = event.t_impact ? *event.t_impact : event.t_onset;
        for (size_t i = 0; i < truth.falls.size(); ++i) {
            if (truth_matched[i]) continue;
            if (key >= truth.falls[i].start_s - match_tolerance_s &&
                key <= truth.falls[i].end_s + match_tolerance_s) {
                truth_matched[i] = 1;
                ++report.matched_events;
                break;
            }
        }
    }
    report.missed_events = report.total_true_falls - report.matched_events;
    if (report.total_true_falls > 0)
        report.dr = static_cast<double>(report.matched_events) / report.total_true_falls;

    auto on_fall_span = [&](const WindowRecord& w) {
        for (const TruthFall& f : truth.falls) {
            if (w.t_end >= f.start_s - match_tolerance_s && w.t_start <= f.end_s + match_tolerance_s)
                return true;
        }
        return false;
    };
    for (const WindowRecord& w : result.windows) {
        if (!w.evaluated && !config.include_absent_windows_in_far) continue;
        if (on_fall_span(w)) continue;
        ++report.total_nonfall_windows;
        if (w.fired) ++report.false_windows;
    }
    if (report.total_nonfall_windows > 0)
        report.far = static_cast<double>(report.false_windows) / report.total_nonfall_windows;
    return report;
}

void write_events_jsonl(std::span<const FallEvent> events, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const FallEvent& e : events) {
        json rec;
        rec["t_onset"] = e.t_onset;
        if (e.t_impact) {
            rec["t_impact"] = *e.t_impact;
        } else {
            rec["t_impact"] = nullptr;
        }
        rec["peak_deficit_m"] = e.peak_deficit_m;
        rec["confidence"] = e.confidence;
        out << rec.dump() << "\n";
    }
}

std::vector<FallEvent> load_events_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open events file: " + path);
    std::vector<FallEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        FallEvent e;
        e.t_onset = rec.at("t_onset").get<double>();
        if (rec.contains("t_impact") && !rec["t_impact"].is_null())
            e.t_impact = rec["t_impact"].get<double>();
        e.peak_deficit_m = rec.value("peak_deficit_m", 0.0);
        e.confidence = rec.value("confidence", 0.0);
        events.push_back(e);
    }
    return events;
}

void write_truth_json(const TruthScenario& truth, const std::string& path) {
    json doc;
    doc["duration_s"] = truth.duration_s;
    json falls = json::array();
    for (const TruthFall& f : truth.falls) falls.push_back({{"start", f.start_s}, {"end", f.end_s}});
    doc["falls"] = falls;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
}

TruthScenario load_truth_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truth file: " + path);
    json doc;
    in >> doc;
    TruthScenario truth;
    truth.duration_s = doc.value("duration_s", 0.0);
    for (const auto& f : doc.value("falls", json::array())) {
        truth.falls.push_back({f.at("start").get<double>(), f.at("end").get<double>()});
    }
    return truth;
}

void write_window_log_jsonl(std::span<const WindowRecord> windows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const WindowRecord& w : windows) {
        json rec;
        rec["start_frame"] = w.start_frame;
        rec["t_start"] = w.t_start;
        rec["t_end"] = w.t_end;
        rec["presence_fraction"] = w.presence_fraction;
        rec["evaluated"] = w.evaluated;
        rec["p"] = w.p;
        rec["fired"] = w.fired;
        out << rec.dump() << "\n";
    }
}

}  // namespace tafall
