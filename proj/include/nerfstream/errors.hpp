#pragma once

#include <stdexcept>
#include <string>

namespace nerfstream {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wire decoding
struct TruncatedFrame : Error {
    using Error::Error;
};
struct UnknownTopicTag : Error {
    using Error::Error;
};
struct MalformedBody : Error {
    using Error::Error;
};

// Buffer / config
struct InvalidConfig : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct EmptyBuffer : Error {
    using Error::Error;
};

// Training
struct NonFiniteGradient : Error {
    using Error::Error;
};

// Datasets / scenes
struct MissingFile : Error {
    using Error::Error;
};
struct SchemaViolation : Error {
    using Error::Error;
};
struct DegenerateLookAt : Error {
    using Error::Error;
};

// Streaming
struct ConnectionLost : Error {
    using Error::Error;
};
struct NoCameraInfo : Error {
    using Error::Error;
};

}  // namespace nerfstream
