#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "nerfstream/errors.hpp"
#include "nerfstream/geometry.hpp"
#include "nerfstream/rng.hpp"
#include "nerfstream/wire.hpp"

namespace nerfstream {

enum class InsertKind { Inserted, SkippedRate, RejectedFull };

struct InsertOutcome {
    InsertKind kind;
    uint32_t slot = 0;  // valid when kind == Inserted
};

struct PixelSample {
    uint32_t image_index = 0;
    uint32_t u = 0, v = 0;
    Vec3 rgb;  // 8-bit values divided by 255
    PoseMessage pose;
};

struct BufferSnapshot {
    uint32_t valid_count = 0;
    bool is_full = false;
};

// Fixed-capacity training store. All pixel and pose storage is allocated at
// construction; insertion never allocates. One designated writer calls
// maybe_insert; any number of readers may call sample_pixel_batch / snapshot
// concurrently. The writer fills a slot completely before advancing
// valid_count (release), readers observe it with acquire and only touch
// slots below the count they read.
class TrainBuffer {
 public:
    TrainBuffer(uint32_t capacity, double target_rate_hz, const CameraInfoMessage& camera_info);

    // Gate: accept iff not full and the image stamp is at least 1/target_rate
    // past the previous accepted stamp. Gating uses message stamps, never
    // arrival wall-clock, so replays reproduce the accepted set.
    InsertOutcome maybe_insert(const PosedImage& pi);

    // Offline fill path: capacity and dimension checks apply, the rate gate
    // does not.
    InsertOutcome insert_ignoring_rate(const PosedImage& pi);

    std::vector<PixelSample> sample_pixel_batch(Rng& rng, uint32_t batch_size) const;

    BufferSnapshot snapshot() const {
        const uint32_t n = valid_count_.load(std::memory_order_acquire);
        return {n, n == capacity_};
    }

    uint32_t capacity() const { return capacity_; }
    uint32_t width() const { return camera_info_.width; }
    uint32_t height() const { return camera_info_.height; }
    const CameraInfoMessage& camera_info() const { return camera_info_; }

    // Slot accessors; callers must pass an index below an observed count.
    const uint8_t* pixels(uint32_t slot) const { return images_.data() + slot * slot_bytes_; }
    const PoseMessage& pose(uint32_t slot) const { return poses_[slot]; }
    const PoseSE3& pose_se3(uint32_t slot) const { return poses_se3_[slot]; }

    uint64_t skipped_rate() const { return skipped_rate_.load(std::memory_order_relaxed); }
    uint64_t rejected_full() const { return rejected_full_.load(std::memory_order_relaxed); }

 private:
    InsertOutcome write_slot(const PosedImage& pi, uint32_t n, int64_t stamp_ns);

    uint32_t capacity_;
    int64_t period_ns_;
    CameraInfoMessage camera_info_;
    size_t slot_bytes_;

    std::vector<uint8_t> images_;
    std::vector<PoseMessage> poses_;
    std::vector<PoseSE3> poses_se3_;

    std::atomic<uint32_t> valid_count_{0};
    int64_t last_accept_ns_ = 0;
    bool has_last_accept_ = false;

    std::atomic<uint64_t> skipped_rate_{0};
    std::atomic<uint64_t> rejected_full_{0};
};

}  // namespace nerfstream
