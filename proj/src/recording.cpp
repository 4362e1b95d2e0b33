#include "tafall/recording.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tafall/motion.hpp"

namespace tafall {

namespace {

constexpr uint8_t kRecMagic[4] = {'T', 'A', 'F', 'R'};

void write_header(std::ofstream& out, const RecordingHeader& header) {
    out.write(reinterpret_cast<const char*>(kRecMagic), 4);
    out.put(static_cast<char>(header.version));
    out.put(static_cast<char>(header.content));
    const uint16_t sensor = header.sensor_id;
    out.put(static_cast<char>(sensor & 0xff));
    out.put(static_cast<char>(sensor >> 8));
    uint64_t rate_bits;
    static_assert(sizeof(rate_bits) == sizeof(header.frame_rate));
    std::memcpy(&rate_bits, &header.frame_rate, sizeof(rate_bits));
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((rate_bits >> (8 * i)) & 0xff));
}

void write_packet(std::ofstream& out, std::span<const uint8_t> bytes) {
    const uint32_t len = static_cast<uint32_t>(bytes.size());
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((len >> (8 * i)) & 0xff));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Recording Recording::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open recording: " + path);

    uint8_t head[16];
    in.read(reinterpret_cast<char*>(head), sizeof(head));
    if (in.gcount() != sizeof(head) || std::memcmp(head, kRecMagic, 4) != 0)
        throw std::runtime_error("not a .taf recording: " + path);

    Recording rec;
    rec.header.version = head[4];
    if (rec.header.version != 1)
        throw std::runtime_error("unsupported recording version in " + path);
    rec.header.content = static_cast<RecordingContent>(head[5]);
    rec.header.sensor_id = static_cast<uint16_t>(head[6] | (head[7] << 8));
    uint64_t rate_bits = 0;
    for (int i = 7; i >= 0; --i) rate_bits = (rate_bits << 8) | head[8 + i];
    std::memcpy(&rec.header.frame_rate, &rate_bits, sizeof(rate_bits));

    std::map<uint16_t, uint32_t> last_seq;
    while (true) {
        uint8_t len_bytes[4];
        in.read(reinterpret_cast<char*>(len_bytes), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw std::runtime_error("truncated packet length in " + path);
        const uint32_t len = static_cast<uint32_t>(len_bytes[0]) | (len_bytes[1] << 8) |
                             (len_bytes[2] << 16) | (static_cast<uint32_t>(len_bytes[3]) << 24);
        if (len < kPacketHeaderSize + kPacketTrailerSize || len > (64u << 20))
            throw std::runtime_error("implausible packet length in " + path);
        std::vector<uint8_t> bytes(len);
        in.read(reinterpret_cast<char*>(bytes.data()), len);
        if (static_cast<uint32_t>(in.gcount()) != len)
            throw std::runtime_error("truncated packet in " + path);

        FramePacket packet;
        const DecodeError err = decode_frame(bytes, packet);
        if (err != DecodeError::Ok)
            throw std::runtime_error(std::string("corrupt packet in ") + path + ": " +
                                     to_string(err));
        auto [it, inserted] = last_seq.try_emplace(packet.sensor_id, packet.seq_no);
        if (!inserted) {
            if (packet.seq_no <= it->second)
                throw std::runtime_error("non-increasing seq_no in " + path);
            it->second = packet.seq_no;
        }
        rec.packets.push_back(std::move(bytes));
    }
    return rec;
}

void Recording::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_header(out, header);
    for (const auto& bytes : packets) write_packet(out, bytes);
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<FramePacket> Recording::decode_all() const {
    std::vector<FramePacket> out;
    out.reserve(packets.size());
    for (const auto& bytes : packets) {
        FramePacket packet;
        if (decode_frame(bytes, packet) != DecodeError::Ok)
            throw std::runtime_error("corrupt packet in recording");
        out.push_back(std::move(packet));
    }
    return out;
}

Recording record_mhi_sequence(std::span<const MotionHistoryImage> sequence, uint16_t sensor_id,
                              double frame_rate) {
    Recording rec;
    rec.header.content = RecordingContent::Mhi;
    rec.header.sensor_id = sensor_id;
    rec.header.frame_rate = frame_rate;
    uint32_t seq_no = 0;
    for (const MotionHistoryImage& mhi : sequence) {
        FramePacket packet;
        packet.sensor_id = sensor_id;
        packet.seq_no = seq_no++;
        packet.timestamp_us = static_cast<uint64_t>(std::llround(mhi.timestamp * 1e6));
        packet.width = static_cast<uint16_t>(mhi.grid.width);
        packet.height = static_cast<uint16_t>(mhi.grid.height);
        packet.payload_centi.reserve(mhi.grid.values.size());
        for (double v : mhi.grid.values)
            packet.payload_centi.push_back(static_cast<int16_t>(std::lround(v * 10000.0)));
        rec.packets.push_back(encode_packet(packet));
    }
    return rec;
}

std::vector<MotionHistoryImage> decode_mhi_recording(const Recording& recording) {
    if (recording.header.content != RecordingContent::Mhi)
        throw std::runtime_error("recording does not hold MHI content");
    std::vector<MotionHistoryImage> out;
    for (const FramePacket& packet : recording.decode_all()) {
        MotionHistoryImage mhi = MotionHistoryImage::zeros(packet.width, packet.height);
        mhi.timestamp = static_cast<double>(packet.timestamp_us) * 1e-6;
        for (size_t i = 0; i < packet.payload_centi.size(); ++i)
            mhi.grid.values[i] = packet.payload_centi[i] / 10000.0;
        out.push_back(std::move(mhi));
    }
    return out;
}

struct RecordingWriter::Impl {
    std::ofstream out;
};

RecordingWriter::RecordingWriter(const std::string& path, const RecordingHeader& header)
    : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);
    if (!impl_->out) {
        delete impl_;
        impl_ = nullptr;
        throw std::runtime_error("cannot open for writing: " + path);
    }
    write_header(impl_->out, header);
}

RecordingWriter::~RecordingWriter() {
    close();
}

void RecordingWriter::add(std::span<const uint8_t> packet_bytes) {
    if (!impl_) throw std::logic_error("RecordingWriter: closed");
    write_packet(impl_->out, packet_bytes);
    ++count_;
}

void RecordingWriter::close() {
    if (impl_) {
        impl_->out.flush();
        delete impl_;
        impl_ = nullptr;
    }
}

}  // namespace tafall
