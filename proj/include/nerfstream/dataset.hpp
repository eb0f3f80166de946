#pragma once

#include <string>
#include <vector>

#include "nerfstream/geometry.hpp"
#include "nerfstream/image.hpp"
#include "nerfstream/wire.hpp"

namespace nerfstream {

struct DatasetFrame {
    std::string file;  // image path relative to the dataset root
    Timestamp stamp;
    Vec3 translation;
    double qw = 1, qx = 0, qy = 0, qz = 0;
};

struct DatasetManifest {
    CameraInfoMessage camera;
    std::vector<DatasetFrame> frames;  // stamps strictly increasing
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<Rgb8Image> images;  // parallel to manifest.frames

    PoseSE3 pose(size_t i) const {
        const auto& f = manifest.frames[i];
        return PoseSE3{quat_to_mat(f.qw, f.qx, f.qy, f.qz), f.translation};
    }
    CameraIntrinsics intrinsics() const {
        return CameraIntrinsics{camera().fx, camera().fy,     camera().cx,
                                camera().cy, camera().width, camera().height};
    }
    const CameraInfoMessage& camera() const { return manifest.camera; }
};

// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const Rgb8Image& img);
Rgb8Image read_ppm(const std::string& path);

// Writes manifest.json plus one PPM per frame under `dir`. `images` must be
// parallel to `manifest.frames`; each frame's `file` field is assigned here.
void write_dataset(const std::string& dir, DatasetManifest manifest,
                   const std::vector<Rgb8Image>& images);

// Inverse of write_dataset. Throws MissingFile or SchemaViolation.
Dataset load_dataset(const std::string& dir);

}  // namespace nerfstream
