#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tafall/thermal.hpp"

namespace tafall {

// Frame packet layout, all integers little-endian:
//   magic "TAF1" (4) | version (1) | sensor_id (2) | seq_no (4) |
//   timestamp_us (8) | width (2) | height (2) |
//   payload: width*height int16 centi-degC | crc32 over all preceding bytes (4)
inline constexpr uint8_t kWireVersion = 1;
inline constexpr size_t kPacketHeaderSize = 4 + 1 + 2 + 4 + 8 + 2 + 2;
inline constexpr size_t kPacketTrailerSize = 4;

struct FramePacket {
    uint8_t version = kWireVersion;
    uint16_t sensor_id = 0;
    uint32_t seq_no = 0;
    uint64_t timestamp_us = 0;
    uint16_t width = 0;
    uint16_t height = 0;
    std::vector<int16_t> payload_centi;

    bool operator==(const FramePacket& o) const = default;
};

constexpr size_t packet_size(uint16_t width, uint16_t height) {
    return kPacketHeaderSize + static_cast<size_t>(width) * height * 2 + kPacketTrailerSize;
}

uint32_t crc32_ieee(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_packet(const FramePacket& packet);

// Throws std::invalid_argument when dimensions exceed 16 bits.
std::vector<uint8_t> encode_frame(const TemperatureFrame& frame, uint16_t sensor_id,
                                  uint32_t seq_no);

enum class DecodeError {
    Ok,
    BadMagic,
    BadVersion,
    Truncated,
    BadDims,
    BadCrc,
};

const char* to_string(DecodeError err);

// Parses one packet from the front of the buffer. Never reads past the
// declared payload length and never throws on arbitrary input.
DecodeError decode_frame(std::span<const uint8_t> bytes, FramePacket& out);

FramePacket packet_from_frame(const TemperatureFrame& frame, uint16_t sensor_id, uint32_t seq_no);
TemperatureFrame frame_from_packet(const FramePacket& packet);

}  // namespace tafall
