#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>

#include "nerfstream/rng.hpp"
#include "nerfstream/wire.hpp"

using namespace nerfstream;

namespace {

// Independent little-endian writer used to hand-build expected frames.
struct ByteWriter {
    std::vector<uint8_t> bytes;
    void u8(uint8_t v) { bytes.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

PoseMessage random_pose(Rng& rng, uint64_t seq, Timestamp stamp) {
    PoseMessage p;
    p.stamp = stamp;
    p.seq = seq;
    p.tx = rng.uniform(-5, 5);
    p.ty = rng.uniform(-5, 5);
    p.tz = rng.uniform(-5, 5);
    // Random unit quaternion via normalized gaussian-ish draws.
    double q[4];
    double n = 0;
    for (double& c : q) {
        c = rng.uniform(-1, 1) + 1e-3;
        n += c * c;
    }
    n = std::sqrt(n);
    p.qw = q[0] / n;
    p.qx = q[1] / n;
    p.qy = q[2] / n;
    p.qz = q[3] / n;
    return p;
}

ImageMessage random_image(Rng& rng, uint64_t seq, Timestamp stamp, uint32_t w = 8, uint32_t h = 6) {
    ImageMessage m;
    m.stamp = stamp;
    m.seq = seq;
    m.width = w;
    m.height = h;
    m.channels = 3;
    m.pixel_data.resize(static_cast<size_t>(w) * h * 3);
    for (auto& b : m.pixel_data) b = static_cast<uint8_t>(rng.below(256));
    return m;
}

bool pose_equal(const PoseMessage& a, const PoseMessage& b) {
    return a.stamp == b.stamp && a.seq == b.seq && a.tx == b.tx && a.ty == b.ty && a.tz == b.tz &&
           a.qw == b.qw && a.qx == b.qx && a.qy == b.qy && a.qz == b.qz;
}

}  // namespace

TEST_CASE("timestamp ordering and ns round trip") {
    const Timestamp a{1, 999999999};
    const Timestamp b{2, 0};
    CHECK(a < b);
    CHECK(Timestamp::from_ns(a.total_ns()) == a);
    CHECK(Timestamp::from_seconds(14.95).seconds == 14);
    CHECK(Timestamp::from_seconds(14.95).nanoseconds == 950000000);
}

TEST_CASE("camera info frame matches the hand-encoded layout") {
    CameraInfoMessage ci;
    ci.stamp = Timestamp{7, 125};
    ci.seq = 42;
    ci.fx = 100;
    ci.fy = 100;
    ci.cx = 32;
    ci.cy = 32;
    ci.width = 64;
    ci.height = 64;

    ByteWriter expect;
    expect.u8(0x03);
    expect.u32(60);  // payload byte count
    expect.u64(7);
    expect.u32(125);
    expect.u64(42);
    expect.f64(100);
    expect.f64(100);
    expect.f64(32);
    expect.f64(32);
    expect.u32(64);
    expect.u32(64);

    const auto frame = encode_message(ci);
    REQUIRE(frame.size() == 65);
    CHECK(frame.size() - 5 == 60);
    CHECK(frame[0] == 0x03);
    CHECK(frame == expect.bytes);
}

TEST_CASE("image payload length is header plus pixels") {
    Rng rng(9);
    const auto img = random_image(rng, 1, Timestamp{0, 0}, 64, 64);
    const auto frame = encode_message(img);
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(frame[1 + i]) << (8 * i);
    CHECK(len == 32 + 12288);  // 64*64*3 = 12288
    CHECK(frame[0] == 0x02);
}

TEST_CASE("round trip identity for all message types") {
    Rng rng(1234);
    for (int i = 0; i < 200; ++i) {
        const auto pose = random_pose(rng, i, Timestamp{static_cast<uint64_t>(i), 17u * i});
        const auto bytes = encode_message(pose);
        const auto [decoded, used] = decode_frame(bytes.data(), bytes.size());
        CHECK(used == bytes.size());
        CHECK(pose_equal(std::get<PoseMessage>(decoded), pose));
        CHECK(encode_message(decoded) == bytes);
    }
    for (int i = 0; i < 50; ++i) {
        const auto img = random_image(rng, i, Timestamp{static_cast<uint64_t>(i), 0});
        const auto bytes = encode_message(img);
        const auto [decoded, used] = decode_frame(bytes.data(), bytes.size());
        const auto& m = std::get<ImageMessage>(decoded);
        CHECK(m.pixel_data == img.pixel_data);
        CHECK(encode_message(decoded) == bytes);
    }
}

TEST_CASE("decode rejects unknown tags, truncation and malformed bodies") {
    CameraInfoMessage ci;
    ci.fx = 10;
    ci.fy = 10;
    ci.cx = 1;
    ci.cy = 1;
    ci.width = 4;
    ci.height = 4;
    auto frame = encode_message(ci);

    auto bad_tag = frame;
    bad_tag[0] = 0x7F;
    CHECK_THROWS_AS(decode_frame(bad_tag.data(), bad_tag.size()), UnknownTopicTag);

    CHECK_THROWS_AS(decode_frame(frame.data(), frame.size() - 3), TruncatedFrame);
    CHECK_THROWS_AS(decode_frame(frame.data(), 3), TruncatedFrame);

    Rng rng(5);
    auto img_frame = encode_message(random_image(rng, 0, Timestamp{}));
    // Corrupt the declared width so pixel_data no longer matches.
    img_frame[5 + 20] = 99;
    CHECK_THROWS_AS(decode_frame(img_frame.data(), img_frame.size()), MalformedBody);

    auto pose_frame = encode_message(random_pose(rng, 0, Timestamp{}));
    // Scale the quaternion w component so the norm breaks.
    double qw = 2.5;
    std::memcpy(pose_frame.data() + 5 + 44, &qw, 8);
    CHECK_THROWS_AS(decode_frame(pose_frame.data(), pose_frame.size()), MalformedBody);
}

TEST_CASE("frame decoder recovers messages across arbitrary chunk boundaries") {
    Rng rng(77);
    std::vector<uint8_t> stream;
    size_t count = 0;
    for (int i = 0; i < 40; ++i) {
        std::vector<uint8_t> f;
        switch (rng.below(3)) {
            case 0: f = encode_message(random_pose(rng, i, Timestamp{static_cast<uint64_t>(i), 0})); break;
            case 1: f = encode_message(random_image(rng, i, Timestamp{static_cast<uint64_t>(i), 0})); break;
            default: {
                CameraInfoMessage ci;
                ci.fx = 5;
                ci.fy = 5;
                ci.cx = 2;
                ci.cy = 2;
                ci.width = 8;
                ci.height = 8;
                f = encode_message(ci);
            }
        }
        stream.insert(stream.end(), f.begin(), f.end());
        ++count;
    }

    FrameDecoder dec;
    size_t pos = 0, recovered = 0;
    while (pos < stream.size()) {
        const size_t chunk = std::min<size_t>(1 + rng.below(97), stream.size() - pos);
        dec.push(stream.data() + pos, chunk);
        pos += chunk;
        while (dec.poll()) ++recovered;
    }
    CHECK(recovered == count);
    CHECK(dec.buffered_bytes() == 0);
}

TEST_CASE("pairer matches the nearest pose within tolerance") {
    Pairer pairer(0.010);

    SUBCASE("pose then image within tolerance pairs immediately") {
        PoseMessage p;
        p.stamp = Timestamp::from_seconds(1.000);
        pairer.push_pose(p);
        ImageMessage img;
        img.stamp = Timestamp::from_seconds(1.004);
        img.width = img.height = 1;
        img.pixel_data = {0, 0, 0};
        pairer.push_image(img);
        const auto pairs = pairer.drain();
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].pair_skew == doctest::Approx(0.004).epsilon(1e-9));
    }

    SUBCASE("image waits for a later, closer pose") {
        PoseMessage p1;
        p1.stamp = Timestamp::from_seconds(1.000);
        pairer.push_pose(p1);
        ImageMessage img;
        img.stamp = Timestamp::from_seconds(1.020);
        img.width = img.height = 1;
        img.pixel_data = {0, 0, 0};
        pairer.push_image(img);
        CHECK(pairer.drain().empty());  // 20 ms away: wait

        PoseMessage p2;
        p2.stamp = Timestamp::from_seconds(1.025);
        pairer.push_pose(p2);
        const auto pairs = pairer.drain();
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].pair_skew == doctest::Approx(-0.005).epsilon(1e-9));
        CHECK(pairs[0].pose.stamp == p2.stamp);
    }

    SUBCASE("image with no pose within tolerance is dropped once overtaken") {
        ImageMessage img;
        img.stamp = Timestamp::from_seconds(1.000);
        img.width = img.height = 1;
        img.pixel_data = {0, 0, 0};
        pairer.push_image(img);
        PoseMessage p;
        p.stamp = Timestamp::from_seconds(2.000);
        pairer.push_pose(p);
        CHECK(pairer.drain().empty());
        CHECK(pairer.images_dropped() == 1);
    }
}

TEST_CASE("pairing conservation and determinism under random jitter") {
    for (uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(1000 + trial);
        const double tolerance = 0.010;

        // 20 Hz poses, images at pose stamps + up to +-8 ms jitter, random
        // interleaving of pushes.
        std::vector<PoseMessage> poses;
        std::vector<ImageMessage> images;
        for (int k = 0; k < 120; ++k) {
            PoseMessage p;
            p.stamp = Timestamp::from_ns(50'000'000ll * k);
            p.seq = k;
            poses.push_back(p);
            ImageMessage im;
            const int64_t jitter = static_cast<int64_t>(rng.below(16'000'001)) - 8'000'000;
            im.stamp = Timestamp::from_ns(std::max<int64_t>(0, 50'000'000ll * k + jitter));
            im.seq = k;
            im.width = im.height = 1;
            im.pixel_data = {1, 2, 3};
            images.push_back(im);
        }
        std::sort(images.begin(), images.end(),
                  [](const auto& a, const auto& b) { return a.stamp < b.stamp; });

        auto run = [&](Pairer& pairer) {
            size_t pi = 0, ii = 0;
            std::vector<PosedImage> all;
            Rng order(rng);  // copy: both runs interleave identically
            while (pi < poses.size() || ii < images.size()) {
                const bool take_pose =
                    ii == images.size() || (pi < poses.size() && order.below(2) == 0);
                if (take_pose) {
                    pairer.push_pose(poses[pi++]);
                } else {
                    pairer.push_image(images[ii++]);
                }
                auto got = pairer.drain();
                all.insert(all.end(), got.begin(), got.end());
            }
            return all;
        };

        Pairer a(tolerance), b(tolerance);
        const auto out_a = run(a);
        const auto out_b = run(b);

        // Conservation: pairs + dropped + still queued = pushed.
        CHECK(a.pairs_emitted() + a.images_dropped() + a.images_queued() == a.images_pushed());
        // Determinism: identical push sequence gives identical output.
        REQUIRE(out_a.size() == out_b.size());
        for (size_t i = 0; i < out_a.size(); ++i) {
            CHECK(out_a[i].image.seq == out_b[i].image.seq);
            CHECK(out_a[i].pose.seq == out_b[i].pose.seq);
            CHECK(out_a[i].pair_skew == out_b[i].pair_skew);
            CHECK(std::fabs(out_a[i].pair_skew) <= tolerance);
        }
    }
}

TEST_CASE("assembler withholds pairs until camera info arrives") {
    StreamAssembler assembler(0.010);

    PoseMessage p;
    p.stamp = Timestamp::from_seconds(1.0);
    auto bytes = encode_message(p);
    auto out = assembler.push_bytes(bytes.data(), bytes.size());
    CHECK(out.empty());

    ImageMessage img;
    img.stamp = Timestamp::from_seconds(1.002);
    img.width = img.height = 2;
    img.pixel_data.assign(12, 7);
    bytes = encode_message(img);
    out = assembler.push_bytes(bytes.data(), bytes.size());
    CHECK(out.empty());  // paired, but held back
    CHECK_FALSE(assembler.has_camera_info());

    CameraInfoMessage ci;
    ci.fx = ci.fy = 2;
    ci.cx = ci.cy = 1;
    ci.width = ci.height = 2;
    bytes = encode_message(ci);
    out = assembler.push_bytes(bytes.data(), bytes.size());
    REQUIRE(out.size() == 1);
    CHECK(out[0].image.stamp == img.stamp);
    CHECK(assembler.has_camera_info());
}
