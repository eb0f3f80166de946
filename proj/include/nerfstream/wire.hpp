#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <variant>
#include <vector>

#include "nerfstream/errors.hpp"

namespace nerfstream {

struct Timestamp {
    uint64_t seconds = 0;
    uint32_t nanoseconds = 0;  // < 1'000'000'000

    int64_t total_ns() const {
        return static_cast<int64_t>(seconds) * 1'000'000'000ll + nanoseconds;
    }
    double to_seconds() const { return static_cast<double>(seconds) + nanoseconds * 1e-9; }

    static Timestamp from_ns(int64_t ns) {
        return Timestamp{static_cast<uint64_t>(ns / 1'000'000'000ll),
                         static_cast<uint32_t>(ns % 1'000'000'000ll)};
    }
    static Timestamp from_seconds(double s) {
        const auto sec = static_cast<uint64_t>(s);
        auto ns = static_cast<int64_t>(std::llround((s - static_cast<double>(sec)) * 1e9));
        if (ns >= 1'000'000'000ll) return Timestamp{sec + 1, 0};
        return Timestamp{sec, static_cast<uint32_t>(ns)};
    }

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
        if (a.seconds != b.seconds) return a.seconds <=> b.seconds;
        return a.nanoseconds <=> b.nanoseconds;
    }
};

// Signed difference a - b in seconds.
inline double stamp_diff_seconds(const Timestamp& a, const Timestamp& b) {
    return static_cast<double>(a.total_ns() - b.total_ns()) * 1e-9;
}

struct PoseMessage {
    Timestamp stamp;
    uint64_t seq = 0;
    double tx = 0, ty = 0, tz = 0;          // camera origin, world frame, meters
    double qw = 1, qx = 0, qy = 0, qz = 0;  // camera-to-world rotation
};

struct ImageMessage {
    Timestamp stamp;
    uint64_t seq = 0;
    uint32_t width = 0, height = 0;
    uint32_t channels = 3;            // fixed RGB
    std::vector<uint8_t> pixel_data;  // row-major, width*height*3 bytes
};

struct CameraInfoMessage {
    Timestamp stamp;
    uint64_t seq = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;  // pixels
    uint32_t width = 0, height = 0;
};

enum class TopicTag : uint8_t {
    Pose = 0x01,
    Image = 0x02,
    CameraInfo = 0x03,
};

using DecodedMessage = std::variant<PoseMessage, ImageMessage, CameraInfoMessage>;

// Frame layout: [tag:1][payload_length:u32 LE][payload]. Payload starts with
// stamp (u64 seconds, u32 nanos) and seq (u64), then the type-specific fields
// in declaration order; floats are 64-bit IEEE-754 little-endian.
std::vector<uint8_t> encode_message(const PoseMessage& msg);
std::vector<uint8_t> encode_message(const ImageMessage& msg);
std::vector<uint8_t> encode_message(const CameraInfoMessage& msg);
std::vector<uint8_t> encode_message(const DecodedMessage& msg);

// Decodes exactly one frame starting at data[0]. Returns the message and the
// number of bytes consumed. Throws TruncatedFrame, UnknownTopicTag or
// MalformedBody.
std::pair<DecodedMessage, size_t> decode_frame(const uint8_t* data, size_t size);

// Incremental decoder for a byte stream delivered in arbitrary chunks.
class FrameDecoder {
 public:
    void push(const uint8_t* data, size_t size);
    // One decoded message if a complete frame is buffered, nullopt otherwise.
    // Malformed input throws and poisons the stream.
    std::optional<DecodedMessage> poll();

    size_t buffered_bytes() const { return buffer_.size() - consumed_; }

 private:
    std::vector<uint8_t> buffer_;
    size_t consumed_ = 0;
};

struct PosedImage {
    ImageMessage image;
    PoseMessage pose;
    double pair_skew = 0.0;  // image stamp minus pose stamp, seconds
};

// Approximate-time synchronizer. Images pair with the nearest pose by stamp
// within `tolerance`; an image waits while a closer future pose is still
// possible and is dropped once the pose stream has provably moved past it.
// Single-threaded: one ingest loop owns an instance.
class Pairer {
 public:
    explicit Pairer(double tolerance_seconds = 0.010) : tolerance_(tolerance_seconds) {}

    void push_pose(const PoseMessage& pose);
    void push_image(ImageMessage image);

    // Resolves every image whose outcome is already determined.
    std::vector<PosedImage> drain();

    uint64_t images_pushed() const { return images_pushed_; }
    uint64_t images_dropped() const { return images_dropped_; }
    uint64_t pairs_emitted() const { return pairs_emitted_; }
    size_t images_queued() const { return images_.size(); }
    size_t poses_queued() const { return poses_.size(); }
    double tolerance() const { return tolerance_; }

 private:
    double tolerance_;
    std::deque<PoseMessage> poses_;
    std::deque<ImageMessage> images_;
    Timestamp last_image_stamp_{};
    bool has_last_image_ = false;
    uint64_t images_pushed_ = 0;
    uint64_t images_dropped_ = 0;
    uint64_t pairs_emitted_ = 0;
};

// Connection-level assembly: bytes -> frames -> paired images, with pairs
// held back until the camera intrinsics have arrived.
class StreamAssembler {
 public:
    explicit StreamAssembler(double pair_tolerance_seconds = 0.010)
        : pairer_(pair_tolerance_seconds) {}

    // Consumes a chunk and returns the PosedImages that became deliverable.
    std::vector<PosedImage> push_bytes(const uint8_t* data, size_t size);

    bool has_camera_info() const { return camera_info_.has_value(); }
    const CameraInfoMessage& camera_info() const { return *camera_info_; }
    uint64_t messages_received() const { return messages_received_; }
    const Pairer& pairer() const { return pairer_; }

 private:
    FrameDecoder decoder_;
    Pairer pairer_;
    std::optional<CameraInfoMessage> camera_info_;
    std::vector<PosedImage> held_back_;
    uint64_t messages_received_ = 0;
};

}  // namespace nerfstream
