#include "nerfstream/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "nerfstream/errors.hpp"

namespace nerfstream {

namespace {
constexpr double kHitEps = 1e-9;
using nlohmann::json;

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw SchemaViolation("expected a 3-element array");
    return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
}  // namespace

std::optional<double> intersect_sphere(const Ray& ray, const Sphere& s) {
    const Vec3 oc = ray.origin - s.center;
    const double b = dot(oc, ray.direction);
    const double c = dot(oc, oc) - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double t0 = -b - sq;
    if (t0 > kHitEps) return t0;
    const double t1 = -b + sq;
    if (t1 > kHitEps) return t1;
    return std::nullopt;
}

std::optional<double> intersect_box(const Ray& ray, const Box& b) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
    const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
    const double lo[3] = {b.min.x, b.min.y, b.min.z};
    const double hi[3] = {b.max.x, b.max.y, b.max.z};
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
            continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::nullopt;
    }
    if (tmin > kHitEps) return tmin;
    if (tmax > kHitEps) return tmax;  // origin inside: exit face
    return std::nullopt;
}

Vec3 trace_scene(const AnalyticScene& scene, const Ray& ray) {
    double best = std::numeric_limits<double>::infinity();
    Vec3 color = scene.background;
    for (const auto& s : scene.spheres) {
        if (auto t = intersect_sphere(ray, s); t && *t < best) {
            best = *t;
            color = s.rgb;
        }
    }
    for (const auto& b : scene.boxes) {
        if (auto t = intersect_box(ray, b); t && *t < best) {
            best = *t;
            color = b.rgb;
        }
    }
    return color;
}

bool scene_hit(const AnalyticScene& scene, const Ray& ray) {
    for (const auto& s : scene.spheres)
        if (intersect_sphere(ray, s)) return true;
    for (const auto& b : scene.boxes)
        if (intersect_box(ray, b)) return true;
    return false;
}

ImageMessage render_ground_truth(const AnalyticScene& scene, const CameraIntrinsics& intr,
                                 const PoseSE3& pose) {
    ImageMessage img;
    img.width = intr.width;
    img.height = intr.height;
    img.channels = 3;
    img.pixel_data.resize(static_cast<size_t>(intr.width) * intr.height * 3);
    size_t idx = 0;
    for (uint32_t v = 0; v < intr.height; ++v) {
        for (uint32_t u = 0; u < intr.width; ++u) {
            const Vec3 c = trace_scene(scene, pixel_to_ray(intr, pose, u, v));
            img.pixel_data[idx++] =
                static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.x, 0.0, 1.0)));
            img.pixel_data[idx++] =
                static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.y, 0.0, 1.0)));
            img.pixel_data[idx++] =
                static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.z, 0.0, 1.0)));
        }
    }
    return img;
}

AnalyticScene default_scene() {
    AnalyticScene scene;
    scene.background = Vec3{0.02, 0.02, 0.03};
    // Room enclosure sized to contain the 1.2 m camera helix.
    scene.boxes.push_back(Box{Vec3{-2, -2, -2}, Vec3{2, 2, 2}, Vec3{0.75, 0.73, 0.70}});
    // Pillar stand-in.
    scene.spheres.push_back(Sphere{Vec3{0, 0, 0}, 0.3, Vec3{0.82, 0.16, 0.12}});
    // Pipes.
    scene.boxes.push_back(
        Box{Vec3{-0.75, -0.06, -1.0}, Vec3{-0.63, 0.06, 1.0}, Vec3{0.16, 0.62, 0.24}});
    scene.boxes.push_back(
        Box{Vec3{0.63, -0.06, -1.0}, Vec3{0.75, 0.06, 1.0}, Vec3{0.20, 0.68, 0.30}});
    return scene;
}

AnalyticScene load_scene(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MissingFile("cannot open scene file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("scene JSON parse error: ") + e.what());
    }
    AnalyticScene scene;
    try {
        if (j.contains("background")) scene.background = vec_from_json(j.at("background"));
        for (const auto& p : j.at("primitives")) {
            const std::string type = p.at("type").get<std::string>();
            if (type == "sphere") {
                Sphere s;
                s.center = vec_from_json(p.at("center"));
                s.radius = p.at("radius").get<double>();
                s.rgb = vec_from_json(p.at("rgb"));
                if (!(s.radius > 0)) throw SchemaViolation("sphere radius must be > 0");
                scene.spheres.push_back(s);
            } else if (type == "box") {
                Box b;
                b.min = vec_from_json(p.at("min"));
                b.max = vec_from_json(p.at("max"));
                b.rgb = vec_from_json(p.at("rgb"));
                if (!(b.min.x < b.max.x && b.min.y < b.max.y && b.min.z < b.max.z))
                    throw SchemaViolation("box min must be < max componentwise");
                scene.boxes.push_back(b);
            } else {
                throw SchemaViolation("unknown primitive type: " + type);
            }
        }
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("scene schema error: ") + e.what());
    }
    return scene;
}

void save_scene(const std::string& path, const AnalyticScene& scene) {
    json j;
    j["background"] = vec_to_json(scene.background);
    j["primitives"] = json::array();
    for (const auto& s : scene.spheres)
        j["primitives"].push_back({{"type", "sphere"},
                                   {"center", vec_to_json(s.center)},
                                   {"radius", s.radius},
                                   {"rgb", vec_to_json(s.rgb)}});
    for (const auto& b : scene.boxes)
        j["primitives"].push_back({{"type", "box"},
                                   {"min", vec_to_json(b.min)},
                                   {"max", vec_to_json(b.max)},
                                   {"rgb", vec_to_json(b.rgb)}});
    std::ofstream f(path);
    if (!f) throw MissingFile("cannot write scene file: " + path);
    f << j.dump(2) << "\n";
}

PoseSE3 look_at(const Vec3& position, const Vec3& target) {
    const Vec3 to_target = target - position;
    const double dist = norm(to_target);
    if (dist < 1e-12) throw DegenerateLookAt("camera position coincides with look-at target");
    const Vec3 z = to_target / dist;

    Vec3 up{0, 0, 1};
    if (std::fabs(z.z) > 0.999) up = Vec3{0, 1, 0};  // vertical view fallback
    const Vec3 x = normalized(cross(z, up));
    const Vec3 y = cross(z, x);
    return PoseSE3{Mat3::from_columns(x, y, z), position};
}

std::vector<StampedPose> trajectory_poses(const TrajectorySpec& spec) {
    if (spec.message_period_s <= 0) throw InvalidConfig("message period must be > 0");
    const int64_t period_ns = std::llround(spec.message_period_s * 1e9);

    std::vector<Vec3> positions;
    if (spec.kind == TrajectoryKind::Helical) {
        if (spec.count < 2) throw InvalidConfig("helical trajectory needs count >= 2");
        if (!(spec.radius > 0)) throw InvalidConfig("helical radius must be > 0");
        positions.reserve(spec.count);
        for (uint32_t k = 0; k < spec.count; ++k) {
            const double frac = static_cast<double>(k) / (spec.count - 1);
            const double theta = 2.0 * M_PI * spec.turns * frac;
            const double z = spec.z_start + (spec.z_end - spec.z_start) * frac;
            positions.push_back(spec.center + Vec3{spec.radius * std::cos(theta),
                                                   spec.radius * std::sin(theta), z});
        }
    } else {
        if (spec.rows < 1 || spec.cols < 1 || spec.rows * spec.cols < 2)
            throw InvalidConfig("raster trajectory needs at least two poses");
        const Vec3 n = normalized(cross(spec.row_axis, spec.col_axis));
        positions.reserve(static_cast<size_t>(spec.rows) * spec.cols);
        for (uint32_t r = 0; r < spec.rows; ++r) {
            const double fr = spec.rows > 1 ? static_cast<double>(r) / (spec.rows - 1) : 0.0;
            for (uint32_t ci = 0; ci < spec.cols; ++ci) {
                // Serpentine: odd rows run backwards.
                const uint32_t c = (r % 2 == 0) ? ci : (spec.cols - 1 - ci);
                const double fc = spec.cols > 1 ? static_cast<double>(c) / (spec.cols - 1) : 0.0;
                positions.push_back(spec.plane_origin + spec.row_axis * fr + spec.col_axis * fc +
                                    n * spec.standoff);
            }
        }
    }

    std::vector<StampedPose> out;
    out.reserve(positions.size());
    for (size_t k = 0; k < positions.size(); ++k) {
        StampedPose sp;
        sp.stamp = Timestamp::from_ns(static_cast<int64_t>(k) * period_ns);
        sp.pose = look_at(positions[k], spec.target);
        out.push_back(sp);
    }
    return out;
}

}  // namespace nerfstream
