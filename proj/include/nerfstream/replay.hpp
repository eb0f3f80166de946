#pragma once

#include <cstdint>
#include <string>

#include "nerfstream/dataset.hpp"

namespace nerfstream {

struct ReplayOptions {
    double rate_hz = 20.0;     // wall-clock pacing of frame slots
    double jitter_ms = 0.0;    // stagger between a frame's pose and image send
    uint32_t holdout_every = 0;  // skip every k-th frame (0 = stream all)
};

struct ReplaySummary {
    uint64_t messages_sent = 0;
    uint64_t frames_sent = 0;
    uint64_t frames_withheld = 0;
    double wall_seconds = 0.0;
};

// Streams a dataset to a listening trainer: CameraInfo first, then per
// frame a PoseMessage followed by that frame's ImageMessage, paced so one
// frame slot passes per 1/rate_hz of wall time. Message stamps always come
// from the dataset, so subsampling downstream is replay-rate independent.
// Throws ConnectionLost if the destination goes away mid-stream.
ReplaySummary replay(const Dataset& dataset, const ReplayOptions& options,
                     const std::string& destination);

}  // namespace nerfstream
