#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nerfstream/dataset.hpp"
#include "nerfstream/geometry.hpp"
#include "nerfstream/image.hpp"
#include "nerfstream/wire.hpp"

namespace nerfstream {

// Flat-shaded analytic primitives; no lighting, so ground truth is
// view-independent by construction.
struct Sphere {
    Vec3 center;
    double radius = 1.0;
    Vec3 rgb{1, 1, 1};
};

struct Box {
    Vec3 min, max;
    Vec3 rgb{1, 1, 1};
};

struct AnalyticScene {
    std::vector<Sphere> spheres;
    std::vector<Box> boxes;
    Vec3 background{0, 0, 0};
};

// Nearest positive hit distance, or nullopt on a miss. A ray starting
// inside a primitive hits its exit surface, which is what makes a box
// usable as a room enclosure.
std::optional<double> intersect_sphere(const Ray& ray, const Sphere& s);
std::optional<double> intersect_box(const Ray& ray, const Box& b);

// Nearest primitive color along the ray, else background.
Vec3 trace_scene(const AnalyticScene& scene, const Ray& ray);

// Whether the ray hits any primitive at all.
bool scene_hit(const AnalyticScene& scene, const Ray& ray);

// Per-pixel analytic render with the same pinhole convention as the model
// renderer (pixel centers at +0.5, x-right / y-down / z-forward).
ImageMessage render_ground_truth(const AnalyticScene& scene, const CameraIntrinsics& intr,
                                 const PoseSE3& pose);

// The desk-scale default: a room enclosure, a red sphere "pillar", and two
// thin green "pipes".
AnalyticScene default_scene();

// Scene JSON: {"background":[r,g,b], "primitives":[{"type":"sphere",...} |
// {"type":"box",...}]}
AnalyticScene load_scene(const std::string& path);
void save_scene(const std::string& path, const AnalyticScene& scene);

enum class TrajectoryKind { Helical, Raster };

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Helical;
    Vec3 target{0, 0, 0};         // all poses look here
    double message_period_s = 0.05;  // stamp spacing

    // Helical
    Vec3 center{0, 0, 0};
    double radius = 1.2;
    double z_start = -0.4, z_end = 0.6;  // offsets from center.z
    double turns = 2.0;
    uint32_t count = 300;

    // Raster (count = rows * cols, serpentine row-major)
    Vec3 plane_origin{0, 0, 0};
    Vec3 row_axis{1, 0, 0};  // full row span
    Vec3 col_axis{0, 0, 1};  // full column span
    uint32_t rows = 10, cols = 30;
    double standoff = 1.0;
};

struct StampedPose {
    Timestamp stamp;
    PoseSE3 pose;
};

// Camera-to-world look-at: z = normalize(target - position); with the
// y-down image convention x = normalize(z x up), y = z x x. Falls back to
// up = (0,1,0) near the vertical. Throws DegenerateLookAt if position
// equals target.
PoseSE3 look_at(const Vec3& position, const Vec3& target);

std::vector<StampedPose> trajectory_poses(const TrajectorySpec& spec);

// Ground-truth dataset of the scene along a trajectory.
std::pair<DatasetManifest, std::vector<Rgb8Image>> synthesize_dataset(
    const AnalyticScene& scene, const CameraInfoMessage& camera, const TrajectorySpec& spec);

}  // namespace nerfstream
