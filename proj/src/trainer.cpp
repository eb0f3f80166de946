#include "nerfstream/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "nerfstream/adam.hpp"
#include "nerfstream/errors.hpp"
#include "nerfstream/wire.hpp"

namespace nerfstream {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

int TrainerConfig::resolved_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void TrainerConfig::validate() const {
    if (max_steps < 1) throw InvalidConfig("max_steps must be >= 1");
    if (convergence_window < 2) throw InvalidConfig("convergence window must be >= 2");
    if (rays_per_step < 1) throw InvalidConfig("rays_per_step must be >= 1");
    if (!(lr_initial > 0) || !(lr_final > 0)) throw InvalidConfig("learning rates must be > 0");
    if (eval_interval < 1) throw InvalidConfig("eval_interval must be >= 1");
    if (buffer_capacity < 1) throw InvalidConfig("buffer capacity must be >= 1");
    if (!(buffer_rate_hz > 0)) throw InvalidConfig("buffer rate must be > 0");
    render.validate();
    model.grid.validate();
}

namespace {

double json_num(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}
uint32_t json_u32(const json& j, const char* key, uint32_t fallback) {
    return j.contains(key) ? j.at(key).get<uint32_t>() : fallback;
}
Vec3 json_vec(const json& j, const char* key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw SchemaViolation("expected 3-element array");
    return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

void format_value(std::string& out, double v) {
    char buf[40];
    if (std::isinf(v)) {
        std::snprintf(buf, sizeof(buf), v > 0 ? "inf" : "-inf");
    } else if (std::isnan(v)) {
        std::snprintf(buf, sizeof(buf), "nan");
    } else {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
    }
    out += buf;
}

}  // namespace

TrainerConfig load_trainer_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MissingFile("cannot open config: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("config parse error: ") + e.what());
    }

    TrainerConfig cfg;
    try {
        if (j.contains("listen")) {
            const auto [host, port] = parse_endpoint(j.at("listen").get<std::string>());
            cfg.listen_address = host;
            cfg.listen_port = port;
        }
        if (j.contains("buffer")) {
            const auto& b = j.at("buffer");
            cfg.buffer_capacity = json_u32(b, "capacity", cfg.buffer_capacity);
            cfg.buffer_rate_hz = json_num(b, "target_rate_hz", cfg.buffer_rate_hz);
        }
        if (j.contains("pairing"))
            cfg.pair_tolerance_s = json_num(j.at("pairing"), "tolerance_s", cfg.pair_tolerance_s);
        if (j.contains("model")) {
            const auto& m = j.at("model");
            cfg.model.grid.levels = json_u32(m, "levels", cfg.model.grid.levels);
            cfg.model.grid.table_size = json_u32(m, "table_size", cfg.model.grid.table_size);
            cfg.model.grid.features_per_level =
                json_u32(m, "features_per_level", cfg.model.grid.features_per_level);
            cfg.model.grid.base_resolution =
                json_u32(m, "base_resolution", cfg.model.grid.base_resolution);
            cfg.model.grid.growth_factor =
                json_num(m, "growth_factor", cfg.model.grid.growth_factor);
            cfg.model.hidden_width = json_u32(m, "hidden_width", cfg.model.hidden_width);
            cfg.model.aabb.min = json_vec(m, "aabb_min", cfg.model.aabb.min);
            cfg.model.aabb.max = json_vec(m, "aabb_max", cfg.model.aabb.max);
        }
        if (j.contains("render")) {
            const auto& r = j.at("render");
            cfg.render.near = json_num(r, "near", cfg.render.near);
            cfg.render.far = json_num(r, "far", cfg.render.far);
            cfg.render.samples_per_ray = json_u32(r, "samples_per_ray", cfg.render.samples_per_ray);
            cfg.render.background = json_vec(r, "background", cfg.render.background);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            cfg.rays_per_step = json_u32(t, "rays_per_step", cfg.rays_per_step);
            cfg.lr_initial = json_num(t, "lr_initial", cfg.lr_initial);
            cfg.lr_final = json_num(t, "lr_final", cfg.lr_final);
            cfg.max_steps = json_u32(t, "max_steps", cfg.max_steps);
            cfg.convergence_window = json_u32(t, "convergence_window", cfg.convergence_window);
            cfg.convergence_tol = json_num(t, "convergence_tol", cfg.convergence_tol);
            cfg.eval_interval = json_u32(t, "eval_interval", cfg.eval_interval);
            if (t.contains("seed")) cfg.seed = t.at("seed").get<uint64_t>();
            if (t.contains("threads")) cfg.threads = t.at("threads").get<int>();
        }
        if (j.contains("holdout")) {
            const auto& h = j.at("holdout");
            if (h.contains("dataset")) cfg.holdout_dataset = h.at("dataset").get<std::string>();
            cfg.holdout_every = json_u32(h, "every", cfg.holdout_every);
            cfg.holdout_max_views = json_u32(h, "max_views", cfg.holdout_max_views);
        }
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("config schema error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_run_config(const std::string& path, const TrainerConfig& cfg, int resolved_threads,
                     double baseline_psnr_mean, const std::vector<size_t>& holdout_frames) {
    json j;
    j["listen"] = cfg.listen_address + ":" + std::to_string(cfg.listen_port);
    j["buffer"] = {{"capacity", cfg.buffer_capacity}, {"target_rate_hz", cfg.buffer_rate_hz}};
    j["pairing"] = {{"tolerance_s", cfg.pair_tolerance_s}};
    j["model"] = {{"levels", cfg.model.grid.levels},
                  {"table_size", cfg.model.grid.table_size},
                  {"features_per_level", cfg.model.grid.features_per_level},
                  {"base_resolution", cfg.model.grid.base_resolution},
                  {"growth_factor", cfg.model.grid.growth_factor},
                  {"hidden_width", cfg.model.hidden_width},
                  {"aabb_min", {cfg.model.aabb.min.x, cfg.model.aabb.min.y, cfg.model.aabb.min.z}},
                  {"aabb_max", {cfg.model.aabb.max.x, cfg.model.aabb.max.y, cfg.model.aabb.max.z}}};
    j["render"] = {{"near", cfg.render.near},
                   {"far", cfg.render.far},
                   {"samples_per_ray", cfg.render.samples_per_ray},
                   {"background",
                    {cfg.render.background.x, cfg.render.background.y, cfg.render.background.z}}};
    j["train"] = {{"rays_per_step", cfg.rays_per_step},
                  {"lr_initial", cfg.lr_initial},
                  {"lr_final", cfg.lr_final},
                  {"max_steps", cfg.max_steps},
                  {"convergence_window", cfg.convergence_window},
                  {"convergence_tol", cfg.convergence_tol},
                  {"eval_interval", cfg.eval_interval},
                  {"seed", cfg.seed},
                  {"threads", cfg.threads}};
    j["holdout"] = {{"dataset", cfg.holdout_dataset},
                    {"every", cfg.holdout_every},
                    {"max_views", cfg.holdout_max_views}};
    j["out_dir"] = cfg.out_dir;
    j["run"] = {{"resolved_threads", resolved_threads},
                {"holdout_baseline_psnr", baseline_psnr_mean},
                {"holdout_frames", holdout_frames}};
    std::ofstream f(path);
    if (!f) throw MissingFile("cannot write run config: " + path);
    f << j.dump(2) << "\n";
}

void write_metrics_csv(const std::string& path, std::span<const MetricsRecord> records,
                       size_t holdout_views) {
    std::string out = "wall_s,step,n_images,loss,psnr_mean";
    for (size_t i = 0; i < holdout_views; ++i) out += ",psnr_" + std::to_string(i);
    out += "\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.3f,%u,%u,", r.wall_s, r.step, r.n_images);
        out += buf;
        format_value(out, r.loss);
        out += ",";
        format_value(out, r.psnr_mean);
        for (size_t i = 0; i < holdout_views; ++i) {
            out += ",";
            format_value(out, i < r.psnr_per_view.size() ? r.psnr_per_view[i] : std::nan(""));
        }
        out += "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MissingFile("cannot write metrics: " + path);
    f << out;
}

bool check_convergence(std::span<const double> loss_history, uint32_t window, double tau) {
    if (window < 2) throw InvalidConfig("convergence window must be >= 2");
    if (loss_history.size() < 2 * static_cast<size_t>(window))
        throw InvalidConfig("loss history shorter than two windows");
    const size_t n = loss_history.size();
    const double mean_prev = mean_of(loss_history.subspan(n - 2 * window, window));
    const double mean_last = mean_of(loss_history.subspan(n - window, window));
    if (mean_prev <= 0.0) return true;  // cannot improve on zero loss
    return (mean_prev - mean_last) / mean_prev < tau;
}

std::vector<double> evaluate_holdout(const NerfModel& model, const CameraIntrinsics& intr,
                                     std::span<const HoldoutView> views, const RenderConfig& cfg,
                                     int threads) {
    std::vector<double> out;
    out.reserve(views.size());
    for (const auto& view : views) {
        const Rgb8Image render = render_image(model, intr, view.pose, cfg, threads);
        out.push_back(psnr(render, view.gt));
    }
    return out;
}

std::vector<double> constant_baseline_psnr(std::span<const HoldoutView> views) {
    std::vector<double> out;
    out.reserve(views.size());
    for (const auto& view : views) {
        const auto& px = view.gt.pixels;
        const size_t n_px = px.size() / 3;
        double mean[3] = {0, 0, 0};
        for (size_t i = 0; i < px.size(); i += 3) {
            mean[0] += px[i] / 255.0;
            mean[1] += px[i + 1] / 255.0;
            mean[2] += px[i + 2] / 255.0;
        }
        for (double& m : mean) m /= static_cast<double>(n_px);
        double mse = 0.0;
        for (size_t i = 0; i < px.size(); i += 3) {
            for (int c = 0; c < 3; ++c) {
                const double d = px[i + c] / 255.0 - mean[c];
                mse += d * d;
            }
        }
        mse /= static_cast<double>(px.size());
        out.push_back(mse == 0.0 ? std::numeric_limits<double>::infinity()
                                 : -10.0 * std::log10(mse));
    }
    return out;
}

namespace {

// Holdout views from a dataset on disk: every `every`-th frame, thinned
// evenly to at most `max_views`.
struct HoldoutSet {
    std::vector<HoldoutView> views;
    std::vector<size_t> frame_indices;
};

HoldoutSet load_holdout(const Dataset& ds, uint32_t every, uint32_t max_views) {
    HoldoutSet set;
    if (every == 0) return set;
    std::vector<size_t> candidates;
    for (size_t i = 0; i < ds.manifest.frames.size(); i += every) candidates.push_back(i);
    if (candidates.empty()) return set;

    std::vector<size_t> chosen;
    if (max_views == 0 || candidates.size() <= max_views) {
        chosen = candidates;
    } else {
        const size_t denom = max_views > 1 ? max_views - 1 : 1;
        for (uint32_t k = 0; k < max_views; ++k) {
            chosen.push_back(candidates[(k * (candidates.size() - 1)) / denom]);
        }
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    }
    for (size_t i : chosen) {
        set.views.push_back(HoldoutView{i, ds.pose(i), ds.images[i]});
        set.frame_indices.push_back(i);
    }
    return set;
}

struct TrainLoopResult {
    std::vector<MetricsRecord> records;
    StopReason reason = StopReason::MaxSteps;
    uint32_t steps = 0;
    double final_loss = 0.0;
    std::vector<std::string> warnings;
};

// The shared training loop. Ownership: this thread owns the model and the
// Adam state; the buffer is only read. Evaluation renders from a parameter
// copy so a crashing render can never corrupt training state.
TrainLoopResult train_loop(const TrainerConfig& cfg, const TrainBuffer& buffer,
                           std::vector<HoldoutView> holdout, bool real_clock,
                           const std::function<bool()>& frozen_fn,
                           const std::function<bool()>& stop_fn, NerfModel& model,
                           std::atomic<uint64_t>* steps_counter) {
    TrainLoopResult res;
    const int threads = cfg.resolved_threads();
    const CameraIntrinsics intr{buffer.camera_info().fx,    buffer.camera_info().fy,
                                buffer.camera_info().cx,    buffer.camera_info().cy,
                                buffer.camera_info().width, buffer.camera_info().height};

    Rng init_rng(cfg.seed);
    model.init_params(init_rng);
    AdamState adam(model.param_count(), cfg.lr_initial);

    RenderConfig train_render = cfg.render;
    train_render.stratified = true;

    std::vector<double> history;
    std::vector<double> since_record;
    history.reserve(cfg.max_steps);

    const auto t0 = Clock::now();
    const auto wall = [&]() {
        return real_clock ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
    };

    bool holdout_usable = !holdout.empty();
    auto do_eval = [&](uint32_t step) {
        MetricsRecord rec;
        rec.wall_s = wall();
        rec.step = step;
        rec.n_images = buffer.snapshot().valid_count;
        rec.loss = mean_of(since_record);
        if (holdout_usable) {
            try {
                const NerfModel snapshot = model;  // read-only parameter copy
                rec.psnr_per_view =
                    evaluate_holdout(snapshot, intr, holdout, cfg.render, threads);
                rec.psnr_mean = mean_of(rec.psnr_per_view);
                const Rgb8Image snap =
                    render_image(snapshot, intr, holdout.front().pose, cfg.render, threads);
                write_ppm((fs::path(cfg.out_dir) / ("snap_" + std::to_string(step) + ".ppm"))
                              .string(),
                          snap);
            } catch (const DimensionMismatch& e) {
                res.warnings.push_back(std::string("holdout disabled: ") + e.what());
                holdout_usable = false;
                rec.psnr_per_view.clear();
                rec.psnr_mean = std::nan("");
            }
        } else {
            rec.psnr_mean = std::nan("");
        }
        res.records.push_back(std::move(rec));
        since_record.clear();
    };

    uint32_t step = 0;
    std::vector<RayBatchItem> batch(cfg.rays_per_step);
    for (;;) {
        if (stop_fn()) {
            res.reason = StopReason::Stopped;
            break;
        }
        if (step >= cfg.max_steps) {
            res.reason = StopReason::MaxSteps;
            break;
        }
        if (frozen_fn() && history.size() >= 2 * static_cast<size_t>(cfg.convergence_window) &&
            check_convergence(history, cfg.convergence_window, cfg.convergence_tol)) {
            res.reason = StopReason::Converged;
            break;
        }
        if (step % cfg.eval_interval == 0) do_eval(step);

        // Exponential decay lr_initial -> lr_final across max_steps.
        const double frac =
            cfg.max_steps > 1 ? static_cast<double>(step) / (cfg.max_steps - 1) : 1.0;
        adam.lr = cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);

        Rng batch_rng = Rng::derive(cfg.seed, step);
        const auto samples = buffer.sample_pixel_batch(batch_rng, cfg.rays_per_step);
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            batch[i].ray = pixel_to_ray(intr, buffer.pose_se3(s.image_index), s.u, s.v);
            batch[i].gt_rgb = s.rgb;
        }

        GradientResult g =
            loss_gradients(model, batch, train_render, Rng::mix(cfg.seed, step), threads);
        adam_step(model.params(), g.grad, adam);

        history.push_back(g.loss);
        since_record.push_back(g.loss);
        res.final_loss = g.loss;
        ++step;
        if (steps_counter) steps_counter->fetch_add(1, std::memory_order_relaxed);
    }

    if (res.records.empty() || res.records.back().step != step) do_eval(step);
    res.steps = step;
    return res;
}

}  // namespace

OnlineTrainer::OnlineTrainer(const TrainerConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    listener_ = std::make_unique<TcpListener>(cfg_.listen_address, cfg_.listen_port);
    listener_->set_accept_timeout_ms(100);
}

OnlineTrainer::~OnlineTrainer() {
    request_stop();
    if (ingest_thread_.joinable()) ingest_thread_.join();
    if (train_thread_.joinable()) train_thread_.join();
}

void OnlineTrainer::start() {
    if (started_) return;
    started_ = true;
    fs::create_directories(cfg_.out_dir);
    ingest_thread_ = std::thread(&OnlineTrainer::ingest_main, this);
    train_thread_ = std::thread(&OnlineTrainer::train_main, this);
}

void OnlineTrainer::request_stop() { stop_.store(true, std::memory_order_relaxed); }

std::shared_ptr<TrainBuffer> OnlineTrainer::shared_buffer() const {
    std::lock_guard<std::mutex> lock(buffer_mutex_);
    return buffer_;
}

uint32_t OnlineTrainer::buffered_images() const {
    auto buf = shared_buffer();
    return buf ? buf->snapshot().valid_count : 0;
}

void OnlineTrainer::ingest_main() {
    TcpStream conn;
    while (!stop_.load(std::memory_order_relaxed)) {
        conn = listener_->accept_one();
        if (conn.valid()) break;
    }
    if (!conn.valid()) {
        ingest_done_.store(true, std::memory_order_release);
        return;
    }
    conn.set_receive_timeout_ms(50);

    StreamAssembler assembler(cfg_.pair_tolerance_s);
    std::vector<uint8_t> chunk(256 * 1024);
    std::shared_ptr<TrainBuffer> buffer;

    while (!stop_.load(std::memory_order_relaxed)) {
        ssize_t n = 0;
        try {
            n = conn.read_some(chunk.data(), chunk.size());
        } catch (const ConnectionLost& e) {
            ingest_stats_.stream_closed_early = true;
            break;
        }
        if (n < 0) continue;  // poll timeout
        if (n == 0) break;    // orderly close

        const auto h0 = Clock::now();
        const uint64_t before = assembler.messages_received();
        std::vector<PosedImage> pairs;
        try {
            pairs = assembler.push_bytes(chunk.data(), static_cast<size_t>(n));
        } catch (const Error& e) {
            ingest_stats_.stream_closed_early = true;
            result_.warnings.push_back(std::string("stream poisoned: ") + e.what());
            break;
        }
        if (!assembler.has_camera_info() && assembler.messages_received() > 0) {
            no_camera_info_.store(true, std::memory_order_release);
            break;
        }
        if (assembler.has_camera_info() && !buffer) {
            buffer = std::make_shared<TrainBuffer>(cfg_.buffer_capacity, cfg_.buffer_rate_hz,
                                                   assembler.camera_info());
            {
                std::lock_guard<std::mutex> lock(buffer_mutex_);
                buffer_ = buffer;
            }
            camera_seen_.store(true, std::memory_order_release);
        }
        for (const auto& pair : pairs) {
            try {
                buffer->maybe_insert(pair);
            } catch (const DimensionMismatch& e) {
                result_.warnings.push_back(std::string("stream image dropped: ") + e.what());
            }
        }
        const uint64_t msgs = assembler.messages_received() - before;
        if (msgs > 0) {
            const double ms =
                std::chrono::duration<double, std::milli>(Clock::now() - h0).count() /
                static_cast<double>(msgs);
            for (uint64_t i = 0; i < msgs; ++i) ingest_stats_.handling_ms.push_back(ms);
        }
    }

    ingest_stats_.messages = assembler.messages_received();
    ingest_stats_.pairs = assembler.pairer().pairs_emitted();
    ingest_stats_.images_dropped = assembler.pairer().images_dropped();
    if (buffer) {
        const auto snap = buffer->snapshot();
        ingest_stats_.accepted = snap.valid_count;
        ingest_stats_.skipped_rate = buffer->skipped_rate();
        ingest_stats_.rejected_full = buffer->rejected_full();
        if (!snap.is_full && !stop_.load(std::memory_order_relaxed))
            ingest_stats_.stream_closed_early = true;
    } else if (!stop_.load(std::memory_order_relaxed)) {
        ingest_stats_.stream_closed_early = true;
    }
    ingest_done_.store(true, std::memory_order_release);
}

void OnlineTrainer::train_main() {
    // Wait until there is something to train on (or the stream ends bare).
    std::shared_ptr<TrainBuffer> buffer;
    for (;;) {
        if (stop_.load(std::memory_order_relaxed)) break;
        buffer = shared_buffer();
        if (buffer && buffer->snapshot().valid_count >= 1) break;
        if (ingest_done_.load(std::memory_order_acquire)) {
            buffer = shared_buffer();  // may have filled right before done
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    if (no_camera_info_.load(std::memory_order_acquire)) return;

    if (!buffer || buffer->snapshot().valid_count == 0) {
        result_.stop_reason = StopReason::NoData;
        result_.warnings.push_back("stream closed before any posed image was buffered");
        return;
    }

    HoldoutSet holdout;
    double baseline = std::nan("");
    if (!cfg_.holdout_dataset.empty()) {
        try {
            const Dataset ds = load_dataset(cfg_.holdout_dataset);
            holdout = load_holdout(ds, cfg_.holdout_every, cfg_.holdout_max_views);
            const auto baselines = constant_baseline_psnr(holdout.views);
            result_.baseline_psnr_per_view = baselines;
            baseline = mean_of(baselines);
        } catch (const Error& e) {
            result_.warnings.push_back(std::string("holdout unavailable: ") + e.what());
        }
    }
    result_.baseline_psnr_mean = baseline;

    NerfModel model(cfg_.model);
    auto loop = train_loop(
        cfg_, *buffer, std::move(holdout.views), /*real_clock=*/true,
        [&] {
            return buffer->snapshot().is_full || ingest_done_.load(std::memory_order_acquire);
        },
        [&] { return stop_.load(std::memory_order_relaxed); }, model, &steps_done_);

    result_.records = std::move(loop.records);
    result_.stop_reason = loop.reason;
    result_.steps = loop.steps;
    result_.final_loss = loop.final_loss;
    for (auto& w : loop.warnings) result_.warnings.push_back(std::move(w));

    result_.checkpoint_path = (fs::path(cfg_.out_dir) / "model.ckpt").string();
    save_checkpoint(result_.checkpoint_path, model.params());

    // Session is over; let the ingest loop wind down.
    stop_.store(true, std::memory_order_relaxed);

    save_run_config((fs::path(cfg_.out_dir) / "run_config.json").string(), cfg_,
                    cfg_.resolved_threads(), result_.baseline_psnr_mean, holdout.frame_indices);
}

TrainResult OnlineTrainer::wait() {
    if (!started_) throw Error("OnlineTrainer::wait before start");
    if (waited_) return result_;
    if (train_thread_.joinable()) train_thread_.join();
    stop_.store(true, std::memory_order_relaxed);
    if (ingest_thread_.joinable()) ingest_thread_.join();
    waited_ = true;

    if (no_camera_info_.load(std::memory_order_acquire))
        throw NoCameraInfo("stream began without a CameraInfo message");

    result_.ingest = std::move(ingest_stats_);
    if (result_.ingest.stream_closed_early)
        result_.warnings.push_back("stream closed before the buffer froze");

    const size_t holdout_views =
        result_.records.empty() ? result_.baseline_psnr_per_view.size()
                                : result_.records.front().psnr_per_view.size();
    result_.metrics_path = (fs::path(cfg_.out_dir) / "metrics.csv").string();
    write_metrics_csv(result_.metrics_path, result_.records, holdout_views);
    if (result_.stop_reason == StopReason::NoData) {
        save_run_config((fs::path(cfg_.out_dir) / "run_config.json").string(), cfg_,
                        cfg_.resolved_threads(), result_.baseline_psnr_mean, {});
    }
    return result_;
}

TrainResult run_online_training(const TrainerConfig& cfg) {
    OnlineTrainer trainer(cfg);
    trainer.start();
    return trainer.wait();
}

TrainResult run_offline_training(const std::string& dataset_dir, const TrainerConfig& cfg) {
    TrainerConfig config = cfg;
    config.validate();
    fs::create_directories(config.out_dir);
    const Dataset ds = load_dataset(dataset_dir);
    if (ds.manifest.frames.empty()) throw SchemaViolation("dataset has no frames");

    TrainResult result;
    HoldoutSet holdout = load_holdout(ds, config.holdout_every, config.holdout_max_views);
    result.baseline_psnr_per_view = constant_baseline_psnr(holdout.views);
    result.baseline_psnr_mean = mean_of(result.baseline_psnr_per_view);

    TrainBuffer buffer(config.buffer_capacity, config.buffer_rate_hz, ds.camera());
    std::vector<bool> is_holdout(ds.manifest.frames.size(), false);
    for (size_t i : holdout.frame_indices) is_holdout[i] = true;

    uint64_t seq = 0;
    for (size_t i = 0; i < ds.manifest.frames.size(); ++i) {
        if (is_holdout[i]) continue;
        const auto& fr = ds.manifest.frames[i];
        PosedImage pi;
        pi.image = message_from_image(ds.images[i], fr.stamp, seq);
        pi.pose.stamp = fr.stamp;
        pi.pose.seq = seq;
        pi.pose.tx = fr.translation.x;
        pi.pose.ty = fr.translation.y;
        pi.pose.tz = fr.translation.z;
        pi.pose.qw = fr.qw;
        pi.pose.qx = fr.qx;
        pi.pose.qy = fr.qy;
        pi.pose.qz = fr.qz;
        ++seq;
        if (buffer.insert_ignoring_rate(pi).kind == InsertKind::RejectedFull) {
            result.warnings.push_back("buffer capacity reached; remaining frames unused");
            break;
        }
    }
    result.ingest.accepted = buffer.snapshot().valid_count;
    result.ingest.rejected_full = buffer.rejected_full();

    NerfModel model(config.model);
    auto loop = train_loop(
        config, buffer, std::move(holdout.views), /*real_clock=*/false, [] { return true; },
        [] { return false; }, model, nullptr);

    result.records = std::move(loop.records);
    result.stop_reason = loop.reason;
    result.steps = loop.steps;
    result.final_loss = loop.final_loss;
    for (auto& w : loop.warnings) result.warnings.push_back(std::move(w));

    result.checkpoint_path = (fs::path(config.out_dir) / "model.ckpt").string();
    save_checkpoint(result.checkpoint_path, model.params());
    const size_t holdout_views =
        result.records.empty() ? 0 : result.records.front().psnr_per_view.size();
    result.metrics_path = (fs::path(config.out_dir) / "metrics.csv").string();
    write_metrics_csv(result.metrics_path, result.records, holdout_views);
    save_run_config((fs::path(config.out_dir) / "run_config.json").string(), config,
                    config.resolved_threads(), result.baseline_psnr_mean, holdout.frame_indices);
    return result;
}

}  // namespace nerfstream
