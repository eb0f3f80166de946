#pragma once

#include <cstdint>
#include <vector>

#include "nerfstream/wire.hpp"

namespace nerfstream {

// Plain row-major RGB image, 8 bits per channel.
struct Rgb8Image {
    uint32_t width = 0, height = 0;
    std::vector<uint8_t> pixels;  // width*height*3

    static Rgb8Image blank(uint32_t w, uint32_t h) {
        return Rgb8Image{w, h, std::vector<uint8_t>(static_cast<size_t>(w) * h * 3, 0)};
    }
    uint8_t* at(uint32_t u, uint32_t v) {
        return pixels.data() + (static_cast<size_t>(v) * width + u) * 3;
    }
    const uint8_t* at(uint32_t u, uint32_t v) const {
        return pixels.data() + (static_cast<size_t>(v) * width + u) * 3;
    }
};

inline Rgb8Image image_from_message(const ImageMessage& msg) {
    return Rgb8Image{msg.width, msg.height, msg.pixel_data};
}

inline ImageMessage message_from_image(const Rgb8Image& img, Timestamp stamp = {},
                                       uint64_t seq = 0) {
    ImageMessage msg;
    msg.stamp = stamp;
    msg.seq = seq;
    msg.width = img.width;
    msg.height = img.height;
    msg.channels = 3;
    msg.pixel_data = img.pixels;
    return msg;
}

}  // namespace nerfstream
