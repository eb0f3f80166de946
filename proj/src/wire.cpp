#include "nerfstream/wire.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace nerfstream {

namespace {

constexpr uint32_t kNanosPerSecond = 1'000'000'000u;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

class Reader {
 public:
    Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    void bytes(std::vector<uint8_t>& out, size_t n) {
        need(n);
        out.assign(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
    }
    size_t remaining() const { return size_ - pos_; }

 private:
    void need(size_t n) const {
        if (pos_ + n > size_) throw MalformedBody("message body shorter than declared layout");
    }
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

void put_header(std::vector<uint8_t>& out, const Timestamp& stamp, uint64_t seq) {
    put_u64(out, stamp.seconds);
    put_u32(out, stamp.nanoseconds);
    put_u64(out, seq);
}

std::vector<uint8_t> frame(TopicTag tag, std::vector<uint8_t> payload) {
    std::vector<uint8_t> out;
    out.reserve(5 + payload.size());
    out.push_back(static_cast<uint8_t>(tag));
    put_u32(out, static_cast<uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Timestamp read_stamp(Reader& r) {
    Timestamp t;
    t.seconds = r.u64();
    t.nanoseconds = r.u32();
    if (t.nanoseconds >= kNanosPerSecond) throw MalformedBody("stamp nanoseconds >= 1e9");
    return t;
}

}  // namespace

std::vector<uint8_t> encode_message(const PoseMessage& msg) {
    std::vector<uint8_t> p;
    p.reserve(76);
    put_header(p, msg.stamp, msg.seq);
    put_f64(p, msg.tx);
    put_f64(p, msg.ty);
    put_f64(p, msg.tz);
    put_f64(p, msg.qw);
    put_f64(p, msg.qx);
    put_f64(p, msg.qy);
    put_f64(p, msg.qz);
    return frame(TopicTag::Pose, std::move(p));
}

std::vector<uint8_t> encode_message(const ImageMessage& msg) {
    std::vector<uint8_t> p;
    p.reserve(32 + msg.pixel_data.size());
    put_header(p, msg.stamp, msg.seq);
    put_u32(p, msg.width);
    put_u32(p, msg.height);
    put_u32(p, msg.channels);
    p.insert(p.end(), msg.pixel_data.begin(), msg.pixel_data.end());
    return frame(TopicTag::Image, std::move(p));
}

std::vector<uint8_t> encode_message(const CameraInfoMessage& msg) {
    std::vector<uint8_t> p;
    p.reserve(60);
    put_header(p, msg.stamp, msg.seq);
    put_f64(p, msg.fx);
    put_f64(p, msg.fy);
    put_f64(p, msg.cx);
    put_f64(p, msg.cy);
    put_u32(p, msg.width);
    put_u32(p, msg.height);
    return frame(TopicTag::CameraInfo, std::move(p));
}

std::vector<uint8_t> encode_message(const DecodedMessage& msg) {
    return std::visit([](const auto& m) { return encode_message(m); }, msg);
}

std::pair<DecodedMessage, size_t> decode_frame(const uint8_t* data, size_t size) {
    if (size < 5) throw TruncatedFrame("frame header needs 5 bytes");
    const uint8_t tag = data[0];
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(data[1 + i]) << (8 * i);
    if (5 + static_cast<size_t>(len) > size)
        throw TruncatedFrame("length prefix exceeds available bytes");

    Reader r(data + 5, len);
    const size_t consumed = 5 + static_cast<size_t>(len);

    switch (tag) {
        case static_cast<uint8_t>(TopicTag::Pose): {
            PoseMessage m;
            m.stamp = read_stamp(r);
            m.seq = r.u64();
            m.tx = r.f64();
            m.ty = r.f64();
            m.tz = r.f64();
            m.qw = r.f64();
            m.qx = r.f64();
            m.qy = r.f64();
            m.qz = r.f64();
            if (r.remaining() != 0) throw MalformedBody("pose body has trailing bytes");
            const double n = std::sqrt(m.qw * m.qw + m.qx * m.qx + m.qy * m.qy + m.qz * m.qz);
            if (!(std::fabs(n - 1.0) <= 1e-6)) throw MalformedBody("quaternion is not unit length");
            return {m, consumed};
        }
        case static_cast<uint8_t>(TopicTag::Image): {
            ImageMessage m;
            m.stamp = read_stamp(r);
            m.seq = r.u64();
            m.width = r.u32();
            m.height = r.u32();
            m.channels = r.u32();
            if (m.width < 1 || m.height < 1) throw MalformedBody("image dimensions must be >= 1");
            if (m.channels != 3) throw MalformedBody("image channels must be 3");
            const uint64_t expect = static_cast<uint64_t>(m.width) * m.height * 3u;
            if (r.remaining() != expect) throw MalformedBody("pixel_data length mismatch");
            r.bytes(m.pixel_data, expect);
            return {m, consumed};
        }
        case static_cast<uint8_t>(TopicTag::CameraInfo): {
            CameraInfoMessage m;
            m.stamp = read_stamp(r);
            m.seq = r.u64();
            m.fx = r.f64();
            m.fy = r.f64();
            m.cx = r.f64();
            m.cy = r.f64();
            m.width = r.u32();
            m.height = r.u32();
            if (r.remaining() != 0) throw MalformedBody("camera info body has trailing bytes");
            if (!(m.fx > 0) || !(m.fy > 0)) throw MalformedBody("focal lengths must be positive");
            if (!(m.cx >= 0 && m.cx < m.width) || !(m.cy >= 0 && m.cy < m.height))
                throw MalformedBody("principal point outside image");
            return {m, consumed};
        }
        default:
            throw UnknownTopicTag("unknown topic tag " + std::to_string(tag));
    }
}

void FrameDecoder::push(const uint8_t* data, size_t size) {
    // Compact occasionally so the buffer does not grow without bound.
    if (consumed_ > 0 && consumed_ >= buffer_.size() / 2) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<ptrdiff_t>(consumed_));
        consumed_ = 0;
    }
    buffer_.insert(buffer_.end(), data, data + size);
}

std::optional<DecodedMessage> FrameDecoder::poll() {
    const size_t avail = buffer_.size() - consumed_;
    if (avail < 5) return std::nullopt;
    const uint8_t* p = buffer_.data() + consumed_;
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(p[1 + i]) << (8 * i);
    if (5 + static_cast<size_t>(len) > avail) return std::nullopt;
    auto [msg, used] = decode_frame(p, avail);
    consumed_ += used;
    return msg;
}

void Pairer::push_pose(const PoseMessage& pose) { poses_.push_back(pose); }

void Pairer::push_image(ImageMessage image) {
    ++images_pushed_;
    if (!has_last_image_ || image.stamp > last_image_stamp_) {
        last_image_stamp_ = image.stamp;
        has_last_image_ = true;
    }
    images_.push_back(std::move(image));
}

std::vector<PosedImage> Pairer::drain() {
    std::vector<PosedImage> out;
    while (!images_.empty()) {
        const ImageMessage& img = images_.front();
        if (poses_.empty()) break;

        // Poses are stamp-ordered, so scan for the nearest; ties go to the
        // earlier pose.
        size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < poses_.size(); ++i) {
            const double d = std::fabs(stamp_diff_seconds(img.stamp, poses_[i].stamp));
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
            if (poses_[i].stamp > img.stamp) break;  // only getting farther
        }

        const Timestamp newest = poses_.back().stamp;
        if (best_dist <= tolerance_) {
            PosedImage pi;
            pi.pair_skew = stamp_diff_seconds(img.stamp, poses_[best].stamp);
            pi.pose = poses_[best];
            pi.image = std::move(images_.front());
            poses_.erase(poses_.begin() + static_cast<ptrdiff_t>(best));
            images_.pop_front();
            ++pairs_emitted_;
            out.push_back(std::move(pi));
        } else if (stamp_diff_seconds(newest, img.stamp) > tolerance_) {
            // The pose stream has moved past this image; no future pose can
            // be closer than what we already examined.
            images_.pop_front();
            ++images_dropped_;
        } else {
            break;  // wait for more poses
        }
    }

    // Poses that can no longer be within tolerance of any future image
    // (image stamps are non-decreasing per connection) are discarded.
    Timestamp horizon{};
    bool have_horizon = false;
    if (!images_.empty()) {
        horizon = images_.front().stamp;
        have_horizon = true;
    } else if (has_last_image_) {
        horizon = last_image_stamp_;
        have_horizon = true;
    }
    if (have_horizon) {
        while (poses_.size() > 1 && stamp_diff_seconds(horizon, poses_.front().stamp) > tolerance_) {
            poses_.pop_front();
        }
    }
    return out;
}

std::vector<PosedImage> StreamAssembler::push_bytes(const uint8_t* data, size_t size) {
    decoder_.push(data, size);
    while (auto msg = decoder_.poll()) {
        ++messages_received_;
        if (auto* pose = std::get_if<PoseMessage>(&*msg)) {
            pairer_.push_pose(*pose);
        } else if (auto* image = std::get_if<ImageMessage>(&*msg)) {
            pairer_.push_image(std::move(*image));
        } else {
            camera_info_ = std::get<CameraInfoMessage>(*msg);
        }
        auto pairs = pairer_.drain();
        held_back_.insert(held_back_.end(), std::make_move_iterator(pairs.begin()),
                          std::make_move_iterator(pairs.end()));
    }
    if (!camera_info_) return {};
    std::vector<PosedImage> out = std::move(held_back_);
    held_back_.clear();
    return out;
}

}  // namespace nerfstream
