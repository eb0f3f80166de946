#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nerfstream/dataset.hpp"
#include "nerfstream/render.hpp"
#include "nerfstream/scene.hpp"

using namespace nerfstream;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("look-at from (1,0,0) toward the origin") {
    const PoseSE3 pose = look_at(Vec3{1, 0, 0}, Vec3{0, 0, 0});
    const Vec3 z = pose.rotation.col(2);
    CHECK(z.x == doctest::Approx(-1.0));
    CHECK(z.y == doctest::Approx(0.0));
    CHECK(z.z == doctest::Approx(0.0));

    // Orthonormal, right-handed.
    const Mat3& r = pose.rotation;
    const Mat3 rtr_src = r.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0;
            for (int k = 0; k < 3; ++k) acc += rtr_src(i, k) * r(k, j);
            CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
        }
    CHECK(r.det() == doctest::Approx(1.0).epsilon(1e-9));
    // y-down convention: the camera y axis points along world -z here.
    CHECK(pose.rotation.col(1).z == doctest::Approx(-1.0));
}

TEST_CASE("look-at degenerate cases") {
    CHECK_THROWS_AS(look_at(Vec3{0, 0, 0}, Vec3{0, 0, 0}), DegenerateLookAt);
    // Straight down: vertical fallback still orthonormal.
    const PoseSE3 pose = look_at(Vec3{0, 0, 2}, Vec3{0, 0, 0});
    CHECK(pose.rotation.det() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pose.rotation.col(2).z == doctest::Approx(-1.0));
}

TEST_CASE("helical trajectory hits the stated angles and stays orthonormal") {
    TrajectorySpec spec;
    spec.kind = TrajectoryKind::Helical;
    spec.count = 5;
    spec.turns = 1.0;
    spec.radius = 2.0;
    spec.z_start = 0.0;
    spec.z_end = 1.0;
    spec.target = Vec3{0, 0, 10};  // off-axis target avoids the degenerate top view

    const auto poses = trajectory_poses(spec);
    REQUIRE(poses.size() == 5);
    const double angles[5] = {0, M_PI / 2, M_PI, 3 * M_PI / 2, 2 * M_PI};
    for (int k = 0; k < 5; ++k) {
        CHECK(poses[k].pose.translation.x == doctest::Approx(2.0 * std::cos(angles[k])));
        CHECK(poses[k].pose.translation.y == doctest::Approx(2.0 * std::sin(angles[k])));
        CHECK(poses[k].pose.rotation.det() == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(poses[0].pose.translation.z == doctest::Approx(0.0));
    CHECK(poses[4].pose.translation.z == doctest::Approx(1.0));
    // Stamps evenly spaced at the message period.
    CHECK(poses[1].stamp.total_ns() - poses[0].stamp.total_ns() == 50'000'000);
}

TEST_CASE("raster trajectory is serpentine and respects standoff") {
    TrajectorySpec spec;
    spec.kind = TrajectoryKind::Raster;
    spec.rows = 3;
    spec.cols = 4;
    spec.plane_origin = Vec3{0, 0, 0};
    spec.row_axis = Vec3{3, 0, 0};
    spec.col_axis = Vec3{0, 2, 0};
    spec.standoff = 1.5;
    spec.target = Vec3{1.5, 1.0, 10.0};

    const auto poses = trajectory_poses(spec);
    REQUIRE(poses.size() == 12);
    for (const auto& sp : poses) CHECK(sp.pose.translation.z == doctest::Approx(1.5));
    // Row 0 runs forward, row 1 backwards (serpentine).
    CHECK(poses[0].pose.translation.y == doctest::Approx(0.0));
    CHECK(poses[3].pose.translation.y == doctest::Approx(2.0));
    CHECK(poses[4].pose.translation.y == doctest::Approx(2.0));
    CHECK(poses[7].pose.translation.y == doctest::Approx(0.0));
}

TEST_CASE("empty scene renders pure background") {
    AnalyticScene scene;
    scene.background = Vec3{0.25, 0.5, 0.75};
    CameraIntrinsics intr{8, 8, 4, 4, 8, 8};
    const auto img = render_ground_truth(scene, intr, PoseSE3{});
    for (size_t i = 0; i < img.pixel_data.size(); i += 3) {
        CHECK(img.pixel_data[i] == std::lround(255 * 0.25));
        CHECK(img.pixel_data[i + 1] == std::lround(255 * 0.5));
        CHECK(img.pixel_data[i + 2] == std::lround(255 * 0.75));
    }
}

TEST_CASE("sphere on the optical axis: hit mask matches the analytic tangency angle") {
    AnalyticScene scene;
    scene.background = Vec3{0, 0, 0};
    scene.spheres.push_back(Sphere{Vec3{0, 0, 4}, 1.0, Vec3{1, 1, 1}});

    CameraIntrinsics intr{64, 64, 32, 32, 64, 64};
    PoseSE3 pose;  // camera at origin looking +z
    const auto img = render_ground_truth(scene, intr, pose);

    const double cutoff = std::asin(1.0 / 4.0);  // ~14.48 degrees
    // Center pixel takes the sphere color.
    const uint32_t ctr = (32u * 64u + 32u) * 3u;
    CHECK(img.pixel_data[ctr] == 255);

    uint32_t disagreements = 0;
    for (uint32_t v = 0; v < 64; ++v) {
        for (uint32_t u = 0; u < 64; ++u) {
            const Ray r = pixel_to_ray(intr, pose, u, v);
            const double angle = std::acos(r.direction.z);
            const bool analytic_hit = angle <= cutoff;
            const bool rendered_hit = img.pixel_data[(v * 64u + u) * 3u] > 0;
            if (analytic_hit != rendered_hit) ++disagreements;
        }
    }
    // Pixels whose center sits within float error of tangency may go either
    // way; none are expected at this resolution.
    CHECK(disagreements == 0);
}

TEST_CASE("ray-box intersection from inside returns the exit face") {
    const Box room{Vec3{-2, -2, -2}, Vec3{2, 2, 2}, Vec3{1, 1, 1}};
    const auto t = intersect_box(Ray{Vec3{0, 0, 0}, Vec3{0, 0, 1}}, room);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(2.0));

    // From outside, the entry face.
    const auto t2 = intersect_box(Ray{Vec3{0, 0, -5}, Vec3{0, 0, 1}}, room);
    REQUIRE(t2.has_value());
    CHECK(*t2 == doctest::Approx(3.0));

    CHECK_FALSE(intersect_box(Ray{Vec3{0, 0, -5}, Vec3{0, 0, -1}}, room).has_value());
}

TEST_CASE("ground truth and volume renderer agree on conventions") {
    // A NeRF whose density is hand-set high inside the primitive must
    // produce the same hit mask as the analytic tracer.
    AnalyticScene scene;
    scene.background = Vec3{0, 0, 0};
    const Sphere sphere{Vec3{0.1, -0.2, 2.0}, 0.8, Vec3{1, 1, 1}};
    scene.spheres.push_back(sphere);

    CameraIntrinsics intr{64, 64, 32, 32, 64, 64};
    PoseSE3 pose;
    const auto gt = render_ground_truth(scene, intr, pose);

    auto field = [&](const Vec3& x, const Vec3&) {
        const Vec3 d = x - sphere.center;
        const bool inside = dot(d, d) <= sphere.radius * sphere.radius;
        return FieldOutput{inside ? 500.0 : 0.0, Vec3{1, 1, 1}};
    };
    RenderConfig cfg;
    cfg.near = 0.05;
    cfg.far = 4.0;
    cfg.samples_per_ray = 256;
    cfg.background = Vec3{0, 0, 0};
    cfg.stratified = false;

    uint32_t agree = 0;
    Rng rng(0);
    for (uint32_t v = 0; v < 64; ++v) {
        for (uint32_t u = 0; u < 64; ++u) {
            const auto out = render_ray_field(field, pixel_to_ray(intr, pose, u, v), cfg, rng);
            const bool nerf_hit = out.opacity > 0.5;
            const bool gt_hit = gt.pixel_data[(v * 64u + u) * 3u] > 0;
            if (nerf_hit == gt_hit) ++agree;
        }
    }
    CHECK(agree >= 64 * 64 * 99 / 100);  // >= 99% pixel agreement
}

TEST_CASE("ppm round trip is lossless") {
    TempDir dir("nerfstream_ppm_test");
    Rgb8Image img = Rgb8Image::blank(7, 5);
    for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<uint8_t>(i * 13);
    const std::string path = (dir.path / "img.ppm").string();
    write_ppm(path, img);
    const Rgb8Image back = read_ppm(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("dataset write/load round trip") {
    TempDir dir("nerfstream_ds_test");
    DatasetManifest manifest;
    manifest.camera.fx = manifest.camera.fy = 8;
    manifest.camera.cx = manifest.camera.cy = 4;
    manifest.camera.width = manifest.camera.height = 8;

    std::vector<Rgb8Image> images;
    for (int i = 0; i < 3; ++i) {
        DatasetFrame fr;
        fr.stamp = Timestamp::from_seconds(i * 0.05);
        fr.translation = Vec3{1.0 * i, 2.0 * i, 3.0 * i};
        fr.qw = 1;
        manifest.frames.push_back(fr);
        Rgb8Image img = Rgb8Image::blank(8, 8);
        for (auto& px : img.pixels) px = static_cast<uint8_t>(40 * i + 7);
        images.push_back(img);
    }
    write_dataset(dir.path.string(), manifest, images);

    const Dataset ds = load_dataset(dir.path.string());
    REQUIRE(ds.manifest.frames.size() == 3);
    CHECK(ds.manifest.camera.fx == 8);
    for (int i = 0; i < 3; ++i) {
        CHECK(ds.images[i].pixels == images[i].pixels);
        CHECK(ds.manifest.frames[i].stamp == manifest.frames[i].stamp);
        CHECK(ds.manifest.frames[i].translation.x == manifest.frames[i].translation.x);
    }
}

TEST_CASE("dataset loader rejects missing files and bad stamps") {
    TempDir dir("nerfstream_ds_bad");

    SUBCASE("missing image file") {
        DatasetManifest manifest;
        manifest.camera.fx = manifest.camera.fy = 4;
        manifest.camera.cx = manifest.camera.cy = 2;
        manifest.camera.width = manifest.camera.height = 4;
        DatasetFrame fr;
        fr.stamp = Timestamp::from_seconds(0.0);
        fr.qw = 1;
        manifest.frames.push_back(fr);
        write_dataset(dir.path.string(), manifest, {Rgb8Image::blank(4, 4)});
        fs::remove(dir.path / "frames" / "frame_000000.ppm");
        CHECK_THROWS_AS(load_dataset(dir.path.string()), MissingFile);
    }

    SUBCASE("non-increasing stamps") {
        DatasetManifest manifest;
        manifest.camera.fx = manifest.camera.fy = 4;
        manifest.camera.cx = manifest.camera.cy = 2;
        manifest.camera.width = manifest.camera.height = 4;
        for (int i = 0; i < 2; ++i) {
            DatasetFrame fr;
            fr.stamp = Timestamp::from_seconds(1.0);  // equal stamps
            fr.qw = 1;
            manifest.frames.push_back(fr);
        }
        write_dataset(dir.path.string(), manifest,
                      {Rgb8Image::blank(4, 4), Rgb8Image::blank(4, 4)});
        CHECK_THROWS_AS(load_dataset(dir.path.string()), SchemaViolation);
    }

    SUBCASE("no manifest at all") {
        CHECK_THROWS_AS(load_dataset((dir.path / "absent").string()), MissingFile);
    }
}

TEST_CASE("scene JSON round trip and validation") {
    TempDir dir("nerfstream_scene_test");
    const AnalyticScene scene = default_scene();
    const std::string path = (dir.path / "scene.json").string();
    save_scene(path, scene);
    const AnalyticScene back = load_scene(path);
    REQUIRE(back.spheres.size() == scene.spheres.size());
    REQUIRE(back.boxes.size() == scene.boxes.size());
    CHECK(back.spheres[0].radius == scene.spheres[0].radius);
    CHECK(back.boxes[0].rgb.x == scene.boxes[0].rgb.x);

    CHECK_THROWS_AS(load_scene((dir.path / "absent.json").string()), MissingFile);
}

TEST_CASE("default scene encloses the default helix") {
    const AnalyticScene scene = default_scene();
    TrajectorySpec spec;  // defaults: helical, radius 1.2
    const auto poses = trajectory_poses(spec);
    const Box& room = scene.boxes.front();
    for (const auto& sp : poses) {
        const Vec3& p = sp.pose.translation;
        CHECK(p.x > room.min.x);
        CHECK(p.x < room.max.x);
        CHECK(p.y > room.min.y);
        CHECK(p.y < room.max.y);
        CHECK(p.z > room.min.z);
        CHECK(p.z < room.max.z);
    }
}
