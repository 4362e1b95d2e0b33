#include "tafall/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tafall {

namespace {

using Clock = std::chrono::steady_clock;

double now_seconds() {
    return std::chrono::duration<double>(Clock::now().time_since_epoch()).count();
}

bool read_exact(int fd, uint8_t* buf, size_t len) {
    size_t done = 0;
    while (done < len) {
        const ssize_t n = ::recv(fd, buf + done, len - done, 0);
        if (n <= 0) return false;
        done += static_cast<size_t>(n);
    }
    return true;
}

bool write_all(int fd, const uint8_t* buf, size_t len) {
    size_t done = 0;
    while (done < len) {
        const ssize_t n = ::send(fd, buf + done, len - done, MSG_NOSIGNAL);
        if (n <= 0) return false;
        done += static_cast<size_t>(n);
    }
    return true;
}

constexpr uint32_t kMaxWireMessage = 64u << 20;

}  // namespace

RecordedPoseProvider::RecordedPoseProvider(PoseSequence pose25d) : seq_(std::move(pose25d)) {
    if (seq_.space != PoseSpace::Image25d)
        throw std::invalid_argument("RecordedPoseProvider expects a 2.5D sequence");
}

std::optional<ProvidedPose> RecordedPoseProvider::pose_for(uint32_t seq_no) {
    if (seq_no >= seq_.frames.size()) return std::nullopt;
    return ProvidedPose{seq_.frames[seq_no], 1.0};
}

FramePipeline::FramePipeline(const PipelineConfig& config, std::shared_ptr<PoseProvider> provider)
    : config_(config),
      provider_(std::move(provider)),
      detector_(config.topology, config.table, config.detector),
      mhi_(MotionHistoryImage::zeros(config.camera.width, config.camera.height)) {
    prev_mask_.width = config.camera.width;
    prev_mask_.height = config.camera.height;
    prev_mask_.values.assign(mhi_.grid.values.size(), 0.0);
}

void FramePipeline::process(const FramePacket& packet) {
    const TemperatureFrame frame = frame_from_packet(packet);

    const auto presence = detect_presence(frame, config_.ambient_c, config_.presence);
    const double presence_conf = presence ? presence->confidence : 0.0;

    // MHI fold: decay with the previous frame's mask, then stage the mask of
    // the current pair for the next update.
    mhi_ = mhi_update(mhi_, prev_mask_, config_.mhi.gamma, frame.timestamp);
    if (prev_frame_) prev_mask_ = soft_motion_mask(frame, *prev_frame_, config_.mhi);
    prev_frame_ = frame;

    const auto provided = provider_ ? provider_->pose_for(packet.seq_no) : std::nullopt;
    if (!provided) return;  // no pose for this frame; nothing to score

    WorldPose world = unproject_pose(provided->image, config_.camera);
    world.t = frame.timestamp;
    detector_.push(world, presence_conf);
    ++processed_;
}

DetectionResult FramePipeline::finish() { return detector_.finish(); }

DetectionResult run_pipeline_offline(const Recording& recording, const PipelineConfig& config,
                                     std::shared_ptr<PoseProvider> provider) {
    FramePipeline pipeline(config, std::move(provider));
    for (const FramePacket& packet : recording.decode_all()) pipeline.process(packet);
    return pipeline.finish();
}

// ---------------------------------------------------------------------------
// Server internals
// ---------------------------------------------------------------------------

namespace {

// Per-sensor stage: reorder window ahead of a bounded drop-oldest queue,
// consumed by one worker thread that owns the FramePipeline.
class SensorWorker {
  public:
    SensorWorker(const PipelineConfig& config, std::shared_ptr<PoseProvider> provider)
        : config_(config),
          pipeline_(config, std::move(provider)),
          worker_([this] { run(); }) {}

    ~SensorWorker() {
        if (worker_.joinable()) {
            {
                std::lock_guard lock(mu_);
                stopping_ = true;
            }
            cv_.notify_all();
            worker_.join();
        }
    }

    void submit(FramePacket&& packet) {
        std::lock_guard lock(mu_);
        ++stats_.frames_received;
        arrivals_.push_back(now_seconds());
        trim_arrivals();

        const uint32_t seq = packet.seq_no;
        if (have_max_seen_ && seq < max_seen_) ++stats_.out_of_order;
        max_seen_ = have_max_seen_ ? std::max(max_seen_, seq) : seq;
        have_max_seen_ = true;

        if (have_expected_ && seq < expected_) {
            ++stats_.frames_dropped;  // too old to reorder
            cv_.notify_all();
            return;
        }
        if (!reorder_.emplace(seq, std::move(packet)).second) {
            ++stats_.frames_dropped;  // duplicate seq_no
            return;
        }

        if (!have_expected_) {
            // Warm-up: wait until the stream start is unambiguous (two
            // consecutive packets from the earliest seen) or the reorder
            // window fills up.
            const bool consecutive = reorder_.size() >= 2 &&
                                     std::next(reorder_.begin())->first ==
                                         reorder_.begin()->first + 1;
            if (!consecutive && reorder_.size() <= config_.reorder_window) return;
            have_expected_ = true;
            expected_ = reorder_.begin()->first;
        }

        flush_reorder();
        if (reorder_.size() > config_.reorder_window) {
            // Give up on the gap: advance to the earliest buffered packet.
            auto it = reorder_.begin();
            stats_.frames_dropped += it->first - expected_;
            expected_ = it->first;
            flush_reorder();
        }
        cv_.notify_all();
    }

    void note_crc_failure() {
        std::lock_guard lock(mu_);
        ++stats_.crc_failures;
    }

    PipelineStats stats() const {
        std::lock_guard lock(mu_);
        PipelineStats out = stats_;
        out.current_rate_hz = rate_locked();
        return out;
    }

    DetectionResult drain_and_finish(double deadline_s) {
        {
            std::lock_guard lock(mu_);
            // Release whatever is still parked in the reorder buffer.
            if (!have_expected_ && !reorder_.empty()) {
                have_expected_ = true;
                expected_ = reorder_.begin()->first;
            }
            for (auto& [seq, packet] : reorder_) {
                if (seq > expected_) stats_.frames_dropped += seq - expected_;
                expected_ = seq + 1;
                queue_push(std::move(packet));
            }
            reorder_.clear();
            draining_ = true;
        }
        cv_.notify_all();

        std::unique_lock lock(mu_);
        drained_cv_.wait_for(lock, std::chrono::duration<double>(deadline_s),
                             [this] { return queue_.empty(); });
        stopping_ = true;
        lock.unlock();
        cv_.notify_all();
        worker_.join();
        return pipeline_.finish();
    }

  private:
    void flush_reorder() {
        auto it = reorder_.begin();
        while (it != reorder_.end() && it->first == expected_) {
            expected_ = it->first + 1;
            queue_push(std::move(it->second));
            it = reorder_.erase(it);
        }
    }

    void queue_push(FramePacket&& packet) {
        if (queue_.size() >= config_.queue_capacity) {
            queue_.pop_front();  // drop-oldest: recency beats completeness
            ++stats_.frames_dropped;
        }
        queue_.push_back(std::move(packet));
    }

    void trim_arrivals() {
        const double cutoff = now_seconds() - 2.0;
        while (!arrivals_.empty() && arrivals_.front() < cutoff) arrivals_.pop_front();
    }

    double rate_locked() const {
        if (arrivals_.size() < 2) return 0.0;
        const double span = arrivals_.back() - arrivals_.front();
        return span > 0.0 ? static_cast<double>(arrivals_.size() - 1) / span : 0.0;
    }

    void run() {
        while (true) {
            FramePacket packet;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
                if (queue_.empty()) {
                    if (stopping_) return;
                    continue;
                }
                packet = std::move(queue_.front());
                queue_.pop_front();
                if (queue_.empty() && draining_) drained_cv_.notify_all();
            }
            try {
                pipeline_.process(packet);
            } catch (const std::exception&) {
                std::lock_guard lock(mu_);
                ++stats_.frames_dropped;  // malformed content; keep the stream alive
            }
        }
    }

    const PipelineConfig config_;
    FramePipeline pipeline_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable drained_cv_;
    std::deque<FramePacket> queue_;
    std::map<uint32_t, FramePacket> reorder_;
    std::deque<double> arrivals_;
    PipelineStats stats_;
    bool have_expected_ = false;
    uint32_t expected_ = 0;
    bool have_max_seen_ = false;
    uint32_t max_seen_ = 0;
    bool stopping_ = false;
    bool draining_ = false;

    std::thread worker_;
};

}  // namespace

struct StreamServer::Impl {
    PipelineConfig config;
    ProviderFactory provider_factory;
    EventSink sink;

    int listen_fd = -1;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};

    std::mutex mu;
    std::map<uint16_t, std::unique_ptr<SensorWorker>> workers;
    std::vector<std::thread> readers;
    std::vector<int> connections;
    uint64_t unattributable_errors = 0;
    std::map<uint16_t, DetectionResult> results;
    bool stopped = false;

    SensorWorker& worker_for(uint16_t sensor_id) {
        std::lock_guard lock(mu);
        auto it = workers.find(sensor_id);
        if (it == workers.end()) {
            auto provider = provider_factory ? provider_factory(sensor_id) : nullptr;
            it = workers
                     .emplace(sensor_id,
                              std::make_unique<SensorWorker>(config, std::move(provider)))
                     .first;
        }
        return *it->second;
    }

    void reader_loop(int fd) {
        std::vector<uint8_t> buf;
        while (!stopping.load()) {
            uint8_t len_bytes[4];
            if (!read_exact(fd, len_bytes, 4)) break;
            const uint32_t len = static_cast<uint32_t>(len_bytes[0]) | (len_bytes[1] << 8) |
                                 (len_bytes[2] << 16) |
                                 (static_cast<uint32_t>(len_bytes[3]) << 24);
            if (len == 0 || len > kMaxWireMessage) break;  // protocol violation; drop client
            buf.resize(len);
            if (!read_exact(fd, buf.data(), len)) break;

            FramePacket packet;
            const DecodeError err = decode_frame(buf, packet);
            if (err == DecodeError::Ok) {
                worker_for(packet.sensor_id).submit(std::move(packet));
            } else if (err == DecodeError::BadCrc && len >= 7) {
                const uint16_t sensor = static_cast<uint16_t>(buf[5] | (buf[6] << 8));
                worker_for(sensor).note_crc_failure();
            } else {
                std::lock_guard lock(mu);
                ++unattributable_errors;
            }
        }
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
    }

    void accept_loop() {
        while (!stopping.load()) {
            pollfd pfd{listen_fd, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, 100);
            if (rc <= 0) continue;
            const int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd < 0) continue;
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            std::lock_guard lock(mu);
            connections.push_back(fd);
            readers.emplace_back([this, fd] { reader_loop(fd); });
        }
    }
};

StreamServer::StreamServer(PipelineConfig config, ProviderFactory provider_factory, EventSink sink)
    : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    impl_->provider_factory = std::move(provider_factory);
    impl_->sink = std::move(sink);
}

StreamServer::~StreamServer() {
    if (impl_ && !impl_->stopped) stop();
}

void StreamServer::start(const std::string& host, int port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::runtime_error("bad listen address: " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw std::runtime_error("bind failed on " + host + ":" + std::to_string(port));
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw std::runtime_error("listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    impl_->listen_fd = fd;
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void StreamServer::stop() {
    if (impl_->stopped) return;
    impl_->stopping.store(true);
    if (impl_->listen_fd >= 0) {
        ::shutdown(impl_->listen_fd, SHUT_RDWR);
        ::close(impl_->listen_fd);
        impl_->listen_fd = -1;
    }
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();

    std::vector<int> fds;
    {
        std::lock_guard lock(impl_->mu);
        fds = impl_->connections;
        impl_->connections.clear();
    }
    for (int fd : fds) ::shutdown(fd, SHUT_RDWR);
    for (auto& t : impl_->readers) {
        if (t.joinable()) t.join();
    }

    for (auto& [sensor_id, worker] : impl_->workers) {
        DetectionResult result = worker->drain_and_finish(impl_->config.drain_deadline_s);
        if (impl_->sink) {
            for (const FallEvent& e : result.events) impl_->sink(sensor_id, e);
        }
        impl_->results.emplace(sensor_id, std::move(result));
    }
    impl_->stopped = true;
}

PipelineStats StreamServer::stats(uint16_t sensor_id) const {
    std::lock_guard lock(impl_->mu);
    auto it = impl_->workers.find(sensor_id);
    if (it == impl_->workers.end()) return {};
    return it->second->stats();
}

PipelineStats StreamServer::total_stats() const {
    std::lock_guard lock(impl_->mu);
    PipelineStats total;
    for (const auto& [id, worker] : impl_->workers) {
        const PipelineStats s = worker->stats();
        total.frames_received += s.frames_received;
        total.frames_dropped += s.frames_dropped;
        total.out_of_order += s.out_of_order;
        total.crc_failures += s.crc_failures;
        total.current_rate_hz += s.current_rate_hz;
    }
    return total;
}

std::vector<uint16_t> StreamServer::sensor_ids() const {
    std::lock_guard lock(impl_->mu);
    std::vector<uint16_t> ids;
    ids.reserve(impl_->workers.size());
    for (const auto& [id, _] : impl_->workers) ids.push_back(id);
    return ids;
}

std::map<uint16_t, DetectionResult> StreamServer::take_results() {
    if (!impl_->stopped) throw std::logic_error("take_results before stop()");
    return std::move(impl_->results);
}

void replay_recording(const Recording& recording, const std::string& host, int port,
                      double rate_multiplier) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::runtime_error("bad replay address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw std::runtime_error("connect failed to " + host + ":" + std::to_string(port));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    std::optional<uint64_t> first_ts;
    const auto start = Clock::now();
    for (const auto& bytes : recording.packets) {
        if (rate_multiplier > 0.0) {
            FramePacket packet;
            if (decode_frame(bytes, packet) == DecodeError::Ok) {
                if (!first_ts) first_ts = packet.timestamp_us;
                const double offset_s =
                    static_cast<double>(packet.timestamp_us - *first_ts) * 1e-6 / rate_multiplier;
                std::this_thread::sleep_until(start + std::chrono::duration<double>(offset_s));
            }
        }
        uint8_t len_bytes[4];
        const uint32_t len = static_cast<uint32_t>(bytes.size());
        for (int i = 0; i < 4; ++i) len_bytes[i] = static_cast<uint8_t>((len >> (8 * i)) & 0xff);
        if (!write_all(fd, len_bytes, 4) || !write_all(fd, bytes.data(), bytes.size())) {
            ::close(fd);
            throw std::runtime_error("replay: send failed");
        }
    }
    ::shutdown(fd, SHUT_WR);
    ::close(fd);
}

size_t run_packet_recorder(const std::string& host, int port, const std::string& path,
                           double duration_s, size_t max_packets, int* bound_port) {
    const int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd, 1) != 0) {
        ::close(listen_fd);
        throw std::runtime_error("recorder: cannot listen on " + host + ":" +
                                 std::to_string(port));
    }
    socklen_t alen = sizeof(addr);
    ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &alen);
    if (bound_port) *bound_port = ntohs(addr.sin_port);

    const auto deadline = Clock::now() + std::chrono::duration<double>(duration_s);
    pollfd pfd{listen_fd, POLLIN, 0};
    int fd = -1;
    while (Clock::now() < deadline) {
        if (::poll(&pfd, 1, 100) > 0) {
            fd = ::accept(listen_fd, nullptr, nullptr);
            break;
        }
    }
    ::close(listen_fd);
    if (fd < 0) return 0;

    RecordingWriter writer(path, RecordingHeader{});
    std::vector<uint8_t> buf;
    while (writer.packets_written() < max_packets && Clock::now() < deadline) {
        uint8_t len_bytes[4];
        if (!read_exact(fd, len_bytes, 4)) break;
        const uint32_t len = static_cast<uint32_t>(len_bytes[0]) | (len_bytes[1] << 8) |
                             (len_bytes[2] << 16) | (static_cast<uint32_t>(len_bytes[3]) << 24);
        if (len == 0 || len > kMaxWireMessage) break;
        buf.resize(len);
        if (!read_exact(fd, buf.data(), len)) break;
        FramePacket packet;
        if (decode_frame(buf, packet) == DecodeError::Ok) writer.add(buf);
    }
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    const size_t written = writer.packets_written();
    writer.close();
    return written;
}

}  // namespace tafall
