#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tafall/wire.hpp"

namespace tafall {

// .taf file: a 16-byte header followed by length-prefixed packets, each
// stored exactly as it travels on the wire.
//   magic "TAFR" (4) | version (1) | content_type (1) | sensor_id (2) |
//   frame_rate f64 LE (8)
// then per packet: u32 length | packet bytes.
enum class RecordingContent : uint8_t { Temperature = 0, Mhi = 1 };

struct RecordingHeader {
    uint8_t version = 1;
    RecordingContent content = RecordingContent::Temperature;
    uint16_t sensor_id = 0;
    double frame_rate = 20.0;
};

struct Recording {
    RecordingHeader header;
    std::vector<std::vector<uint8_t>> packets;  // encoded wire bytes

    // Validates per-packet CRC and strictly increasing seq_no per sensor;
    // gaps are allowed.
    static Recording load(const std::string& path);
    void save(const std::string& path) const;

    std::vector<FramePacket> decode_all() const;
};

// MHI grids ride the same packet format with content_type = Mhi; values in
// [0,1] are stored as ten-thousandths in the int16 payload.
struct MotionHistoryImage;  // motion.hpp
Recording record_mhi_sequence(std::span<const MotionHistoryImage> sequence, uint16_t sensor_id,
                              double frame_rate);
std::vector<MotionHistoryImage> decode_mhi_recording(const Recording& recording);

// Incremental writer used while recording a live stream.
class RecordingWriter {
  public:
    RecordingWriter(const std::string& path, const RecordingHeader& header);
    ~RecordingWriter();

    void add(std::span<const uint8_t> packet_bytes);
    size_t packets_written() const { return count_; }
    void close();

  private:
    struct Impl;
    Impl* impl_;
    size_t count_ = 0;
};

}  // namespace tafall
