#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tafall/camera.hpp"
#include "tafall/detector.hpp"
#include "tafall/motion.hpp"
#include "tafall/recording.hpp"
#include "tafall/wire.hpp"

namespace tafall {

struct PipelineStats {
    uint64_t frames_received = 0;
    uint64_t frames_dropped = 0;
    uint64_t out_of_order = 0;
    uint64_t crc_failures = 0;
    double current_rate_hz = 0.0;  // over the trailing 2 s
};

struct ProvidedPose {
    Pose25D image;
    double confidence = 1.0;
};

// Supplies the per-frame 2.5D pose aligned with arriving frames by seq_no.
// Any future learned estimator must satisfy this contract: a pose (plus
// confidence) per frame, delivered within the frame interval (<= 50 ms).
class PoseProvider {
  public:
    virtual ~PoseProvider() = default;
    virtual std::optional<ProvidedPose> pose_for(uint32_t seq_no) = 0;
    virtual const SkeletonTopology& topology() const = 0;
};

// Reference implementation: replays a prerecorded ground-truth 2.5D sequence
// indexed by seq_no.
class RecordedPoseProvider : public PoseProvider {
  public:
    explicit RecordedPoseProvider(PoseSequence pose25d);
    std::optional<ProvidedPose> pose_for(uint32_t seq_no) override;
    const SkeletonTopology& topology() const override { return seq_.topology; }

  private:
    PoseSequence seq_;
};

struct PipelineConfig {
    SkeletonTopology topology;
    AnthropometricTable table;
    CameraModel camera;  // unprojects provided 2.5D poses into world space
    DetectorConfig detector;
    MhiParams mhi;
    PresenceParams presence;
    double ambient_c = 22.0;
    size_t queue_capacity = 64;    // bounded per-sensor queue, drop-oldest
    uint32_t reorder_window = 8;   // packets held back for reordering
    double drain_deadline_s = 2.0;
};

// Sequential per-frame processing: presence gate, MHI fold, pose lookup and
// unprojection, balance detector. One instance per sensor stream; the live
// server and the offline runner share this exact code path.
class FramePipeline {
  public:
    FramePipeline(const PipelineConfig& config, std::shared_ptr<PoseProvider> provider);

    void process(const FramePacket& packet);
    DetectionResult finish();

    const MotionHistoryImage& mhi() const { return mhi_; }
    uint64_t frames_processed() const { return processed_; }

  private:
    PipelineConfig config_;
    std::shared_ptr<PoseProvider> provider_;
    StreamingDetector detector_;
    MotionHistoryImage mhi_;
    MotionGrid prev_mask_;
    std::optional<TemperatureFrame> prev_frame_;
    uint64_t processed_ = 0;
};

// Runs a single-sensor recording through the same pipeline the server uses.
DetectionResult run_pipeline_offline(const Recording& recording, const PipelineConfig& config,
                                     std::shared_ptr<PoseProvider> provider);

// TCP stream server: accepts length-prefixed FramePackets, routes them by
// sensor_id into per-sensor ordered pipelines, and emits fall events to the
// sink. Connection handling is concurrent; each sensor owns one sequential
// pipeline.
class StreamServer {
  public:
    using ProviderFactory = std::function<std::shared_ptr<PoseProvider>(uint16_t sensor_id)>;
    using EventSink = std::function<void(uint16_t sensor_id, const FallEvent&)>;

    StreamServer(PipelineConfig config, ProviderFactory provider_factory, EventSink sink = {});
    ~StreamServer();

    // Throws std::runtime_error when the endpoint cannot be bound. port 0
    // binds an ephemeral port (see port()).
    void start(const std::string& host, int port);
    int port() const { return port_; }

    // Stops accepting, closes connections, drains queues within the deadline,
    // and finishes all detectors.
    void stop();

    PipelineStats stats(uint16_t sensor_id) const;
    PipelineStats total_stats() const;
    std::vector<uint16_t> sensor_ids() const;

    // Valid after stop(): per-sensor detection output.
    std::map<uint16_t, DetectionResult> take_results();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

// Connects to host:port and replays the recording's packets with their
// original inter-frame intervals scaled by 1/rate_multiplier. Bytes are sent
// verbatim. rate_multiplier <= 0 sends without pacing.
void replay_recording(const Recording& recording, const std::string& host, int port,
                      double rate_multiplier = 1.0);

// Accepts one client and dumps its valid packets into a .taf recording until
// the connection closes, duration_s elapses, or max_packets arrive.
// Returns the number of packets written.
size_t run_packet_recorder(const std::string& host, int port, const std::string& path,
                           double duration_s, size_t max_packets, int* bound_port = nullptr);

}  // namespace tafall
