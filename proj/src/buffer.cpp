#include "nerfstream/buffer.hpp"

#include <cmath>
#include <cstring>

namespace nerfstream {

TrainBuffer::TrainBuffer(uint32_t capacity, double target_rate_hz,
                         const CameraInfoMessage& camera_info)
    : capacity_(capacity),
      period_ns_(0),
      camera_info_(camera_info),
      slot_bytes_(static_cast<size_t>(camera_info.width) * camera_info.height * 3u) {
    if (capacity < 1) throw InvalidConfig("buffer capacity must be >= 1");
    if (!(target_rate_hz > 0)) throw InvalidConfig("buffer target rate must be > 0");
    if (camera_info.width < 1 || camera_info.height < 1)
        throw InvalidConfig("camera info has empty image dimensions");
    period_ns_ = std::llround(1e9 / target_rate_hz);
    images_.resize(slot_bytes_ * capacity_);
    poses_.resize(capacity_);
    poses_se3_.resize(capacity_);
}

InsertOutcome TrainBuffer::maybe_insert(const PosedImage& pi) {
    if (pi.image.width != camera_info_.width || pi.image.height != camera_info_.height ||
        pi.image.channels != 3 || pi.image.pixel_data.size() != slot_bytes_)
        throw DimensionMismatch("image does not match camera_info dimensions");

    const uint32_t n = valid_count_.load(std::memory_order_relaxed);
    if (n == capacity_) {
        rejected_full_.fetch_add(1, std::memory_order_relaxed);
        return {InsertKind::RejectedFull};
    }
    const int64_t stamp_ns = pi.image.stamp.total_ns();
    if (has_last_accept_ && stamp_ns - last_accept_ns_ < period_ns_) {
        skipped_rate_.fetch_add(1, std::memory_order_relaxed);
        return {InsertKind::SkippedRate};
    }
    return write_slot(pi, n, stamp_ns);
}

InsertOutcome TrainBuffer::insert_ignoring_rate(const PosedImage& pi) {
    if (pi.image.width != camera_info_.width || pi.image.height != camera_info_.height ||
        pi.image.channels != 3 || pi.image.pixel_data.size() != slot_bytes_)
        throw DimensionMismatch("image does not match camera_info dimensions");
    const uint32_t n = valid_count_.load(std::memory_order_relaxed);
    if (n == capacity_) {
        rejected_full_.fetch_add(1, std::memory_order_relaxed);
        return {InsertKind::RejectedFull};
    }
    return write_slot(pi, n, pi.image.stamp.total_ns());
}

InsertOutcome TrainBuffer::write_slot(const PosedImage& pi, uint32_t n, int64_t stamp_ns) {
    std::memcpy(images_.data() + n * slot_bytes_, pi.image.pixel_data.data(), slot_bytes_);
    poses_[n] = pi.pose;
    poses_se3_[n] = PoseSE3{quat_to_mat(pi.pose.qw, pi.pose.qx, pi.pose.qy, pi.pose.qz),
                            Vec3{pi.pose.tx, pi.pose.ty, pi.pose.tz}};
    last_accept_ns_ = stamp_ns;
    has_last_accept_ = true;
    valid_count_.store(n + 1, std::memory_order_release);
    return {InsertKind::Inserted, n};
}

std::vector<PixelSample> TrainBuffer::sample_pixel_batch(Rng& rng, uint32_t batch_size) const {
    const uint32_t n = valid_count_.load(std::memory_order_acquire);
    if (n == 0) throw EmptyBuffer("cannot sample from an empty buffer");

    std::vector<PixelSample> batch(batch_size);
    for (auto& s : batch) {
        s.image_index = static_cast<uint32_t>(rng.below(n));
        s.u = static_cast<uint32_t>(rng.below(camera_info_.width));
        s.v = static_cast<uint32_t>(rng.below(camera_info_.height));
        const uint8_t* px =
            pixels(s.image_index) + (static_cast<size_t>(s.v) * camera_info_.width + s.u) * 3u;
        s.rgb = Vec3{px[0] / 255.0, px[1] / 255.0, px[2] / 255.0};
        s.pose = poses_[s.image_index];
    }
    return batch;
}

}  // namespace nerfstream
