#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "nerfstream/dataset.hpp"
#include "nerfstream/errors.hpp"
#include "nerfstream/replay.hpp"
#include "nerfstream/scene.hpp"
#include "nerfstream/trainer.hpp"

namespace ns = nerfstream;

namespace {

int cmd_synth(const std::string& scene_path, const std::string& trajectory, uint32_t frames,
              double rate, uint32_t width, uint32_t height, double fx, double fy,
              const std::string& out_dir, double helix_radius, double turns, double z0, double z1) {
    ns::AnalyticScene scene =
        scene_path.empty() ? ns::default_scene() : ns::load_scene(scene_path);

    ns::TrajectorySpec spec;
    spec.message_period_s = 1.0 / rate;
    if (trajectory == "helical") {
        spec.kind = ns::TrajectoryKind::Helical;
        spec.count = frames;
        spec.radius = helix_radius;
        spec.turns = turns;
        spec.z_start = z0;
        spec.z_end = z1;
    } else if (trajectory == "raster") {
        spec.kind = ns::TrajectoryKind::Raster;
        spec.rows = std::max<uint32_t>(1, frames / 30);
        spec.cols = frames / std::max<uint32_t>(1, frames / 30);
        spec.plane_origin = ns::Vec3{-1.0, -1.5, -0.5};
        spec.row_axis = ns::Vec3{2.0, 0, 0};
        spec.col_axis = ns::Vec3{0, 0, 1.0};
        spec.standoff = 1.5;
    } else {
        std::fprintf(stderr, "unknown trajectory kind: %s\n", trajectory.c_str());
        return 2;
    }

    ns::CameraInfoMessage cam;
    cam.fx = fx;
    cam.fy = fy > 0 ? fy : fx;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    const ns::CameraIntrinsics intr{cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height};

    const auto poses = ns::trajectory_poses(spec);
    ns::DatasetManifest manifest;
    manifest.camera = cam;
    std::vector<ns::Rgb8Image> images;
    images.reserve(poses.size());
    for (const auto& sp : poses) {
        ns::DatasetFrame frame;
        frame.stamp = sp.stamp;
        frame.translation = sp.pose.translation;
        const auto q = ns::mat_to_quat(sp.pose.rotation);
        frame.qw = q[0];
        frame.qx = q[1];
        frame.qy = q[2];
        frame.qz = q[3];
        manifest.frames.push_back(frame);
        images.push_back(
            ns::image_from_message(ns::render_ground_truth(scene, intr, sp.pose)));
    }
    ns::write_dataset(out_dir, manifest, images);
    std::printf("wrote %zu frames (%ux%u) to %s\n", images.size(), width, height,
                out_dir.c_str());
    return 0;
}

int cmd_publish(const std::string& dataset_dir, double rate, const std::string& dest,
                double jitter_ms, uint32_t holdout_every) {
    const ns::Dataset ds = ns::load_dataset(dataset_dir);
    ns::ReplayOptions opt;
    opt.rate_hz = rate;
    opt.jitter_ms = jitter_ms;
    opt.holdout_every = holdout_every;
    const auto summary = ns::replay(ds, opt, dest);
    std::printf("sent %llu messages (%llu frames, %llu withheld) in %.2f s\n",
                static_cast<unsigned long long>(summary.messages_sent),
                static_cast<unsigned long long>(summary.frames_sent),
                static_cast<unsigned long long>(summary.frames_withheld),
                summary.wall_seconds);
    return 0;
}

void print_result(const ns::TrainResult& result) {
    const char* reason = "max-steps";
    switch (result.stop_reason) {
        case ns::StopReason::Converged: reason = "converged"; break;
        case ns::StopReason::MaxSteps: reason = "max-steps"; break;
        case ns::StopReason::NoData: reason = "no-data"; break;
        case ns::StopReason::Stopped: reason = "stopped"; break;
    }
    std::printf("stopped after %u steps (%s), final loss %.6g\n", result.steps, reason,
                result.final_loss);
    if (!result.records.empty()) {
        const auto& last = result.records.back();
        std::printf("held-out psnr %.2f dB (constant-color baseline %.2f dB)\n", last.psnr_mean,
                    result.baseline_psnr_mean);
    }
    std::printf("buffer: %llu accepted, %llu rate-skipped, %llu rejected-full; pairer: %llu "
                "pairs, %llu dropped\n",
                static_cast<unsigned long long>(result.ingest.accepted),
                static_cast<unsigned long long>(result.ingest.skipped_rate),
                static_cast<unsigned long long>(result.ingest.rejected_full),
                static_cast<unsigned long long>(result.ingest.pairs),
                static_cast<unsigned long long>(result.ingest.images_dropped));
    for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!result.metrics_path.empty()) std::printf("metrics: %s\n", result.metrics_path.c_str());
    if (!result.checkpoint_path.empty())
        std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online NeRF training from a posed-image stream"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Render a synthetic dataset of an analytic scene");
    std::string scene_file, trajectory = "helical", synth_out;
    uint32_t frames = 300, width = 64, height = 64;
    double synth_rate = 20.0, fx = 64.0, fy = 0.0;
    double helix_radius = 1.2, turns = 2.0, z0 = -0.4, z1 = 0.6;
    synth->add_option("--scene", scene_file, "Scene JSON (omit for the built-in default scene)");
    synth->add_option("--trajectory", trajectory, "helical or raster")
        ->check(CLI::IsMember({"helical", "raster"}));
    synth->add_option("--frames", frames, "Number of frames");
    synth->add_option("--rate", synth_rate, "Stamp rate in Hz");
    synth->add_option("--width", width, "Image width");
    synth->add_option("--height", height, "Image height");
    synth->add_option("--fx", fx, "Focal length in pixels");
    synth->add_option("--fy", fy, "Focal length y (defaults to fx)");
    synth->add_option("--radius", helix_radius, "Helix radius, meters");
    synth->add_option("--turns", turns, "Helix turns");
    synth->add_option("--z0", z0, "Helix start height offset");
    synth->add_option("--z1", z1, "Helix end height offset");
    synth->add_option("--out", synth_out, "Output dataset directory")->required();

    // publish
    auto* publish = app.add_subcommand("publish", "Stream a dataset over the wire protocol");
    std::string pub_dataset, pub_dest;
    double pub_rate = 20.0, jitter_ms = 0.0;
    uint32_t holdout_every = 10;
    publish->add_option("--dataset", pub_dataset, "Dataset directory")->required();
    publish->add_option("--rate", pub_rate, "Frames per second of wall clock");
    publish->add_option("--dest", pub_dest, "HOST:PORT of the listening trainer")->required();
    publish->add_option("--jitter-ms", jitter_ms, "Stagger between pose and image sends");
    publish->add_option("--holdout-every", holdout_every,
                        "Withhold every k-th frame for evaluation (0 streams all)");

    // train-online
    auto* online = app.add_subcommand("train-online", "Listen for a stream and train live");
    std::string online_listen, online_config, online_out = "out";
    online->add_option("--listen", online_listen, "Listen endpoint, e.g. 0.0.0.0:7011");
    online->add_option("--config", online_config, "Trainer config JSON");
    online->add_option("--out", online_out, "Output directory");

    // train-offline
    auto* offline = app.add_subcommand("train-offline", "Train on a dataset from disk");
    std::string off_dataset, off_config, off_out = "out";
    offline->add_option("--dataset", off_dataset, "Dataset directory")->required();
    offline->add_option("--config", off_config, "Trainer config JSON");
    offline->add_option("--out", off_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(scene_file, trajectory, frames, synth_rate, width, height, fx, fy,
                             synth_out, helix_radius, turns, z0, z1);
        }
        if (publish->parsed()) {
            return cmd_publish(pub_dataset, pub_rate, pub_dest, jitter_ms, holdout_every);
        }
        if (online->parsed()) {
            ns::TrainerConfig cfg;
            if (!online_config.empty()) cfg = ns::load_trainer_config(online_config);
            if (!online_listen.empty()) {
                const auto [host, port] = ns::parse_endpoint(online_listen);
                cfg.listen_address = host;
                cfg.listen_port = port;
            }
            cfg.out_dir = online_out;
            ns::OnlineTrainer trainer(cfg);
            std::printf("listening on %s:%u\n", cfg.listen_address.c_str(),
                        trainer.listen_port());
            trainer.start();
            print_result(trainer.wait());
            return 0;
        }
        if (offline->parsed()) {
            ns::TrainerConfig cfg;
            if (!off_config.empty()) cfg = ns::load_trainer_config(off_config);
            cfg.out_dir = off_out;
            if (cfg.holdout_dataset.empty()) cfg.holdout_dataset = off_dataset;
            print_result(ns::run_offline_training(off_dataset, cfg));
            return 0;
        }
    } catch (const ns::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
