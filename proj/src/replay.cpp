#include "nerfstream/replay.hpp"

#include <chrono>
#include <thread>

#include "nerfstream/errors.hpp"
#include "nerfstream/net.hpp"
#include "nerfstream/wire.hpp"

namespace nerfstream {

namespace {
using Clock = std::chrono::steady_clock;
}

ReplaySummary replay(const Dataset& dataset, const ReplayOptions& options,
                     const std::string& destination) {
    if (!(options.rate_hz > 0)) throw InvalidConfig("replay rate must be > 0");
    const auto [host, port] = parse_endpoint(destination);
    TcpStream stream = TcpStream::connect_to(host, port);

    ReplaySummary summary;
    const auto start = Clock::now();
    const auto slot = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / options.rate_hz));
    const auto jitter = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(options.jitter_ms / 1000.0));

    try {
        CameraInfoMessage info = dataset.camera();
        if (!dataset.manifest.frames.empty()) info.stamp = dataset.manifest.frames.front().stamp;
        stream.write_all(encode_message(info));
        ++summary.messages_sent;

        uint64_t seq = 0;
        uint64_t slot_index = 0;
        for (size_t i = 0; i < dataset.manifest.frames.size(); ++i) {
            if (options.holdout_every > 0 && i % options.holdout_every == 0) {
                ++summary.frames_withheld;
                continue;
            }
            std::this_thread::sleep_until(start + slot * slot_index);
            ++slot_index;

            const auto& frame = dataset.manifest.frames[i];
            PoseMessage pose;
            pose.stamp = frame.stamp;
            pose.seq = seq;
            pose.tx = frame.translation.x;
            pose.ty = frame.translation.y;
            pose.tz = frame.translation.z;
            pose.qw = frame.qw;
            pose.qx = frame.qx;
            pose.qy = frame.qy;
            pose.qz = frame.qz;
            stream.write_all(encode_message(pose));
            ++summary.messages_sent;

            if (options.jitter_ms > 0) std::this_thread::sleep_for(jitter);

            ImageMessage img = message_from_image(dataset.images[i], frame.stamp, seq);
            stream.write_all(encode_message(img));
            ++summary.messages_sent;
            ++summary.frames_sent;
            ++seq;
        }
    } catch (const ConnectionLost&) {
        summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        throw ConnectionLost("destination dropped after " +
                             std::to_string(summary.frames_sent) + " frames");
    }

    summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return summary;
}

}  // namespace nerfstream
