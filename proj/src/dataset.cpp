#include "nerfstream/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nerfstream/errors.hpp"

namespace nerfstream {

namespace fs = std::filesystem;
using nlohmann::json;

void write_ppm(const std::string& path, const Rgb8Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MissingFile("cannot open for writing: " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw Error("ppm write failed: " + path);
}

namespace {
// Next whitespace-delimited token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}
}  // namespace

Rgb8Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingFile("cannot open: " + path);
    if (ppm_token(f) != "P6") throw SchemaViolation("not a binary PPM (P6): " + path);
    Rgb8Image img;
    try {
        img.width = static_cast<uint32_t>(std::stoul(ppm_token(f)));
        img.height = static_cast<uint32_t>(std::stoul(ppm_token(f)));
        const unsigned maxval = static_cast<unsigned>(std::stoul(ppm_token(f)));
        if (maxval != 255) throw SchemaViolation("ppm maxval must be 255: " + path);
    } catch (const std::logic_error&) {
        throw SchemaViolation("malformed ppm header: " + path);
    }
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw SchemaViolation("ppm pixel data truncated: " + path);
    return img;
}

void write_dataset(const std::string& dir, DatasetManifest manifest,
                   const std::vector<Rgb8Image>& images) {
    if (manifest.frames.size() != images.size())
        throw DimensionMismatch("frames and images must be parallel");
    fs::create_directories(fs::path(dir) / "frames");

    for (size_t i = 0; i < images.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "frames/frame_%06zu.ppm", i);
        manifest.frames[i].file = name;
        write_ppm((fs::path(dir) / name).string(), images[i]);
    }

    json j;
    j["camera"] = {{"fx", manifest.camera.fx},       {"fy", manifest.camera.fy},
                   {"cx", manifest.camera.cx},       {"cy", manifest.camera.cy},
                   {"width", manifest.camera.width}, {"height", manifest.camera.height}};
    j["frames"] = json::array();
    for (const auto& fr : manifest.frames) {
        j["frames"].push_back({{"file", fr.file},
                               {"stamp", fr.stamp.to_seconds()},
                               {"t", {fr.translation.x, fr.translation.y, fr.translation.z}},
                               {"q", {fr.qw, fr.qx, fr.qy, fr.qz}}});
    }
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw MissingFile("cannot write manifest under: " + dir);
    f << j.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream f(root / "manifest.json");
    if (!f) throw MissingFile("no manifest.json under: " + dir);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("manifest parse error: ") + e.what());
    }

    Dataset ds;
    try {
        const auto& cam = j.at("camera");
        ds.manifest.camera.fx = cam.at("fx").get<double>();
        ds.manifest.camera.fy = cam.at("fy").get<double>();
        ds.manifest.camera.cx = cam.at("cx").get<double>();
        ds.manifest.camera.cy = cam.at("cy").get<double>();
        ds.manifest.camera.width = cam.at("width").get<uint32_t>();
        ds.manifest.camera.height = cam.at("height").get<uint32_t>();

        for (const auto& fr : j.at("frames")) {
            DatasetFrame frame;
            frame.file = fr.at("file").get<std::string>();
            frame.stamp = Timestamp::from_seconds(fr.at("stamp").get<double>());
            const auto& t = fr.at("t");
            const auto& q = fr.at("q");
            if (t.size() != 3 || q.size() != 4)
                throw SchemaViolation("frame t must have 3 and q 4 elements");
            frame.translation = Vec3{t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
            frame.qw = q[0].get<double>();
            frame.qx = q[1].get<double>();
            frame.qy = q[2].get<double>();
            frame.qz = q[3].get<double>();
            ds.manifest.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("manifest schema error: ") + e.what());
    }

    for (size_t i = 1; i < ds.manifest.frames.size(); ++i) {
        if (!(ds.manifest.frames[i - 1].stamp < ds.manifest.frames[i].stamp))
            throw SchemaViolation("frame stamps must be strictly increasing");
    }

    ds.images.reserve(ds.manifest.frames.size());
    for (const auto& fr : ds.manifest.frames) {
        const fs::path p = root / fr.file;
        if (!fs::exists(p)) throw MissingFile("referenced image missing: " + p.string());
        ds.images.push_back(read_ppm(p.string()));
        const auto& img = ds.images.back();
        if (img.width != ds.manifest.camera.width || img.height != ds.manifest.camera.height)
            throw SchemaViolation("image dimensions disagree with camera: " + p.string());
    }
    return ds;
}

}  // namespace nerfstream
