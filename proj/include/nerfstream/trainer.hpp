#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "nerfstream/buffer.hpp"
#include "nerfstream/dataset.hpp"
#include "nerfstream/model.hpp"
#include "nerfstream/net.hpp"
#include "nerfstream/render.hpp"

namespace nerfstream {

struct TrainerConfig {
    // Stream / buffer
    std::string listen_address = "0.0.0.0";
    uint16_t listen_port = 7011;
    uint32_t buffer_capacity = 300;
    double buffer_rate_hz = 2.0;
    double pair_tolerance_s = 0.010;

    ModelConfig model;
    RenderConfig render;

    // Optimization
    uint32_t rays_per_step = 1024;
    double lr_initial = 1e-2;
    double lr_final = 1e-3;  // exponential decay target over max_steps
    uint32_t max_steps = 5000;
    uint32_t convergence_window = 200;  // W
    double convergence_tol = 0.01;      // tau
    uint32_t eval_interval = 250;
    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    // Held-out evaluation: every holdout_every-th frame of the dataset is
    // withheld from training and scored instead.
    std::string holdout_dataset;  // dataset dir; offline mode trains on it too
    uint32_t holdout_every = 10;
    uint32_t holdout_max_views = 4;

    std::string out_dir = "out";

    int resolved_threads() const;
    void validate() const;
};

TrainerConfig load_trainer_config(const std::string& path);
void save_run_config(const std::string& path, const TrainerConfig& cfg, int resolved_threads,
                     double baseline_psnr_mean, const std::vector<size_t>& holdout_frames);

struct MetricsRecord {
    double wall_s = 0.0;
    uint32_t step = 0;
    uint32_t n_images = 0;
    double loss = 0.0;  // mean over steps since the previous record
    double psnr_mean = 0.0;
    std::vector<double> psnr_per_view;
};

void write_metrics_csv(const std::string& path, std::span<const MetricsRecord> records,
                       size_t holdout_views);

enum class StopReason { Converged, MaxSteps, NoData, Stopped };

struct IngestStats {
    uint64_t messages = 0;
    uint64_t pairs = 0;
    uint64_t images_dropped = 0;
    uint64_t accepted = 0;
    uint64_t skipped_rate = 0;
    uint64_t rejected_full = 0;
    bool stream_closed_early = false;        // closed before the buffer froze
    std::vector<double> handling_ms;         // per-message ingest handling time
};

struct TrainResult {
    std::vector<MetricsRecord> records;
    StopReason stop_reason = StopReason::NoData;
    uint32_t steps = 0;
    double final_loss = 0.0;
    double baseline_psnr_mean = 0.0;  // best-constant-image PSNR over holdout
    std::vector<double> baseline_psnr_per_view;
    IngestStats ingest;
    std::vector<std::string> warnings;
    std::string checkpoint_path;
    std::string metrics_path;
};

// Windowed relative-improvement test over the loss history: converged when
// (mean_prev - mean_last) / mean_prev < tau for consecutive windows of W
// steps. History must hold at least 2W entries.
bool check_convergence(std::span<const double> loss_history, uint32_t window, double tau);

struct HoldoutView {
    size_t frame_index = 0;  // index in the source dataset
    PoseSE3 pose;
    Rgb8Image gt;
};

// Deterministic renders (stratified off) of each view, scored with psnr.
std::vector<double> evaluate_holdout(const NerfModel& model, const CameraIntrinsics& intr,
                                     std::span<const HoldoutView> views, const RenderConfig& cfg,
                                     int threads);

// PSNR of the best constant-color image against each view's ground truth.
std::vector<double> constant_baseline_psnr(std::span<const HoldoutView> views);

// Live online training: one ingest thread owning the connection, pairer and
// buffer writes; one training thread owning the model and reading the
// buffer. They share only the TrainBuffer (single-writer/concurrent-reader)
// and a stop flag.
class OnlineTrainer {
 public:
    explicit OnlineTrainer(const TrainerConfig& cfg);
    ~OnlineTrainer();

    void start();
    uint16_t listen_port() const { return listener_->port(); }

    uint64_t steps_done() const { return steps_done_.load(std::memory_order_relaxed); }
    uint32_t buffered_images() const;
    bool camera_info_seen() const { return camera_seen_.load(std::memory_order_relaxed); }

    void request_stop();
    // Joins both threads and finalizes outputs. Throws NoCameraInfo if the
    // stream carried messages but never intrinsics.
    TrainResult wait();

 private:
    void ingest_main();
    void train_main();

    TrainerConfig cfg_;
    std::unique_ptr<TcpListener> listener_;
    std::thread ingest_thread_, train_thread_;

    mutable std::mutex buffer_mutex_;
    std::shared_ptr<TrainBuffer> buffer_;
    std::shared_ptr<TrainBuffer> shared_buffer() const;

    std::atomic<bool> stop_{false};
    std::atomic<bool> ingest_done_{false};
    std::atomic<bool> no_camera_info_{false};
    std::atomic<bool> camera_seen_{false};
    std::atomic<uint64_t> steps_done_{0};

    IngestStats ingest_stats_;  // written by ingest thread, read after join
    TrainResult result_;
    bool started_ = false;
    bool waited_ = false;
};

TrainResult run_online_training(const TrainerConfig& cfg);

// Loads the dataset, fills the buffer ignoring the rate gate, and runs the
// same training loop to convergence. Bit-reproducible for a fixed seed and
// thread count; metrics wall_s is fixed at zero so reruns compare equal.
TrainResult run_offline_training(const std::string& dataset_dir, const TrainerConfig& cfg);

}  // namespace nerfstream
