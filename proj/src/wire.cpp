#include "tafall/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <zlib.h>

namespace tafall {

namespace {

constexpr uint8_t kMagic[4] = {'T', 'A', 'F', '1'};

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

uint32_t crc32_ieee(std::span<const uint8_t> bytes) {
    return static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::vector<uint8_t> encode_packet(const FramePacket& packet) {
    if (packet.payload_centi.size() !=
        static_cast<size_t>(packet.width) * static_cast<size_t>(packet.height))
        throw std::invalid_argument("encode_packet: payload/dimension mismatch");

    std::vector<uint8_t> out;
    out.reserve(packet_size(packet.width, packet.height));
    for (uint8_t m : kMagic) out.push_back(m);
    out.push_back(packet.version);
    put_u16(out, packet.sensor_id);
    put_u32(out, packet.seq_no);
    put_u64(out, packet.timestamp_us);
    put_u16(out, packet.width);
    put_u16(out, packet.height);
    for (int16_t v : packet.payload_centi) put_u16(out, static_cast<uint16_t>(v));
    put_u32(out, crc32_ieee(out));
    return out;
}

FramePacket packet_from_frame(const TemperatureFrame& frame, uint16_t sensor_id,
                              uint32_t seq_no) {
    if (frame.width > 0xffff || frame.height > 0xffff || frame.width <= 0 || frame.height <= 0)
        throw std::invalid_argument("packet_from_frame: dimensions out of 16-bit range");

    FramePacket packet;
    packet.sensor_id = sensor_id;
    packet.seq_no = seq_no;
    packet.timestamp_us = static_cast<uint64_t>(std::llround(frame.timestamp * 1e6));
    packet.width = static_cast<uint16_t>(frame.width);
    packet.height = static_cast<uint16_t>(frame.height);
    packet.payload_centi.reserve(frame.celsius.size());
    for (double c : frame.celsius) {
        const long v = std::lround(std::clamp(c, kSensorMinC, kSensorMaxC) * 100.0);
        packet.payload_centi.push_back(static_cast<int16_t>(v));
    }
    return packet;
}

TemperatureFrame frame_from_packet(const FramePacket& packet) {
    TemperatureFrame frame;
    frame.width = packet.width;
    frame.height = packet.height;
    frame.seq_no = packet.seq_no;
    frame.timestamp = static_cast<double>(packet.timestamp_us) * 1e-6;
    frame.celsius.reserve(packet.payload_centi.size());
    for (int16_t v : packet.payload_centi) frame.celsius.push_back(v / 100.0);
    return frame;
}

std::vector<uint8_t> encode_frame(const TemperatureFrame& frame, uint16_t sensor_id,
                                  uint32_t seq_no) {
    return encode_packet(packet_from_frame(frame, sensor_id, seq_no));
}

const char* to_string(DecodeError err) {
    switch (err) {
        case DecodeError::Ok: return "ok";
        case DecodeError::BadMagic: return "bad magic";
        case DecodeError::BadVersion: return "unsupported version";
        case DecodeError::Truncated: return "truncated";
        case DecodeError::BadDims: return "bad dimensions";
        case DecodeError::BadCrc: return "crc mismatch";
    }
    return "?";
}

DecodeError decode_frame(std::span<const uint8_t> bytes, FramePacket& out) {
    if (bytes.size() < kPacketHeaderSize) return DecodeError::Truncated;
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) return DecodeError::BadMagic;
    const uint8_t version = bytes[4];
    if (version != kWireVersion) return DecodeError::BadVersion;

    const uint16_t width = get_u16(bytes.data() + 19);
    const uint16_t height = get_u16(bytes.data() + 21);
    if (width == 0 || height == 0) return DecodeError::BadDims;

    const size_t need = packet_size(width, height);
    if (bytes.size() < need) return DecodeError::Truncated;

    const uint32_t stored_crc = get_u32(bytes.data() + need - 4);
    if (crc32_ieee(bytes.first(need - 4)) != stored_crc) return DecodeError::BadCrc;

    out.version = version;
    out.sensor_id = get_u16(bytes.data() + 5);
    out.seq_no = get_u32(bytes.data() + 7);
    out.timestamp_us = get_u64(bytes.data() + 11);
    out.width = width;
    out.height = height;
    const size_t count = static_cast<size_t>(width) * height;
    out.payload_centi.resize(count);
    const uint8_t* p = bytes.data() + kPacketHeaderSize;
    for (size_t i = 0; i < count; ++i) {
        out.payload_centi[i] = static_cast<int16_t>(get_u16(p + 2 * i));
    }
    return DecodeError::Ok;
}

}  // namespace tafall
