#include "nerfstream/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace nerfstream {

namespace {

inline double dot3(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Forward pass of one ray with per-sample caches kept for backward.
struct RayEval {
    RayTrace tr;
    std::vector<FieldCache> caches;

    void prepare(const NerfModel& model, uint32_t samples) {
        if (caches.size() != samples) {
            caches.resize(samples);
            for (auto& c : caches) c.resize(model.config());
        }
    }
};

void eval_ray(const NerfModel& model, const Ray& ray, const RenderConfig& cfg, Rng& rng,
              RayEval& ev) {
    ev.prepare(model, cfg.samples_per_ray);
    RayTrace& tr = ev.tr;
    sample_depths(cfg, rng, tr.t, tr.delta);
    const uint32_t n = cfg.samples_per_ray;
    tr.sigma.resize(n);
    tr.color.resize(n);
    tr.alpha.resize(n);
    tr.weight.resize(n);
    tr.trans.resize(n + 1);

    double trans = 1.0;
    Vec3 acc{0, 0, 0};
    double opacity = 0.0;
    FieldOutput out;
    for (uint32_t i = 0; i < n; ++i) {
        model.sample_or_empty(ray.origin + ray.direction * tr.t[i], ray.direction, ev.caches[i],
                              out);
        tr.sigma[i] = out.sigma;
        tr.color[i] = out.color;
        const double a = 1.0 - std::exp(-out.sigma * tr.delta[i]);
        tr.alpha[i] = a;
        tr.trans[i] = trans;
        const double w = trans * a;
        tr.weight[i] = w;
        acc += out.color * w;
        opacity += w;
        trans *= 1.0 - a;
    }
    tr.trans[n] = trans;
    tr.rgb = acc + cfg.background * (1.0 - opacity);
    tr.opacity = opacity;
}

// d(loss)/d(params) for one ray given d(loss)/d(rgb). Works backwards
// through the compositing weights: with suffix radiance R_i (everything
// strictly after sample i, background included),
//   d rgb / d sigma_i = delta_i * (T_{i+1} c_i - R_i).
void backward_ray(const NerfModel& model, const RayEval& ev, const Vec3& dLrgb,
                  const RenderConfig& cfg, double* grad) {
    const RayTrace& tr = ev.tr;
    const uint32_t n = static_cast<uint32_t>(tr.t.size());
    Vec3 suffix = cfg.background * tr.trans[n];
    for (uint32_t ii = n; ii-- > 0;) {
        if (ev.caches[ii].inside) {
            const double dsigma =
                tr.delta[ii] * (dot3(dLrgb, tr.color[ii]) * tr.trans[ii + 1] - dot3(dLrgb, suffix));
            const Vec3 dcolor = dLrgb * tr.weight[ii];
            model.backward(dsigma, dcolor, ev.caches[ii], grad);
        }
        suffix += tr.color[ii] * tr.weight[ii];
    }
}

}  // namespace

RayTrace trace_ray(const NerfModel& model, const Ray& ray, const RenderConfig& cfg, Rng& rng) {
    return trace_ray_field(
        [&](const Vec3& x, const Vec3& d) {
            FieldCache cache;
            cache.resize(model.config());
            FieldOutput out;
            model.sample_or_empty(x, d, cache, out);
            return out;
        },
        ray, cfg, rng);
}

RayRender render_ray(const NerfModel& model, const Ray& ray, const RenderConfig& cfg, Rng& rng) {
    const RayTrace tr = trace_ray(model, ray, cfg, rng);
    return {tr.rgb, tr.opacity};
}

Rgb8Image render_image(const NerfModel& model, const CameraIntrinsics& intr, const PoseSE3& pose,
                       const RenderConfig& cfg, int threads) {
    RenderConfig det = cfg;
    det.stratified = false;
    det.validate();
    Rgb8Image img = Rgb8Image::blank(intr.width, intr.height);

    const int nthreads = std::max(1, threads);
    auto render_rows = [&](uint32_t row_begin, uint32_t row_end) {
        RayEval ev;
        Rng rng(0);  // unused with stratified off
        for (uint32_t v = row_begin; v < row_end; ++v) {
            for (uint32_t u = 0; u < intr.width; ++u) {
                const Ray ray = pixel_to_ray(intr, pose, u, v);
                eval_ray(model, ray, det, rng, ev);
                uint8_t* px = img.at(u, v);
                const Vec3 c = ev.tr.rgb;
                px[0] = static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.x, 0.0, 1.0)));
                px[1] = static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.y, 0.0, 1.0)));
                px[2] = static_cast<uint8_t>(std::lround(255.0 * std::clamp(c.z, 0.0, 1.0)));
            }
        }
    };

    if (nthreads == 1 || intr.height < 4) {
        render_rows(0, intr.height);
    } else {
        std::vector<std::thread> pool;
        const uint32_t rows_per = (intr.height + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const uint32_t lo = std::min<uint32_t>(t * rows_per, intr.height);
            const uint32_t hi = std::min<uint32_t>(lo + rows_per, intr.height);
            if (lo < hi) pool.emplace_back(render_rows, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return img;
}

double photometric_loss(std::span<const Vec3> pred, std::span<const Vec3> gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw DimensionMismatch("photometric loss needs equal nonempty batches");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const Vec3 r = pred[i] - gt[i];
        acc += dot3(r, r);
    }
    return acc / (3.0 * static_cast<double>(pred.size()));
}

double psnr(const Rgb8Image& a, const Rgb8Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("psnr requires equal image dimensions");
    double acc = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = (a.pixels[i] - b.pixels[i]) / 255.0;
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double batch_loss(const NerfModel& model, std::span<const RayBatchItem> batch,
                  const RenderConfig& cfg, uint64_t depth_seed) {
    if (batch.empty()) throw DimensionMismatch("batch must be nonempty");
    cfg.validate();
    RayEval ev;
    double acc = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        Rng rng = Rng::derive(depth_seed, i);
        eval_ray(model, batch[i].ray, cfg, rng, ev);
        const Vec3 r = ev.tr.rgb - batch[i].gt_rgb;
        acc += dot3(r, r);
    }
    return acc / (3.0 * static_cast<double>(batch.size()));
}

GradientResult loss_gradients(const NerfModel& model, std::span<const RayBatchItem> batch,
                              const RenderConfig& cfg, uint64_t depth_seed, int threads) {
    if (batch.empty()) throw DimensionMismatch("batch must be nonempty");
    cfg.validate();

    const size_t nparams = model.param_count();
    const double scale = 2.0 / (3.0 * static_cast<double>(batch.size()));
    const int nthreads =
        std::max(1, std::min<int>(threads, static_cast<int>(batch.size())));

    std::vector<std::vector<double>> grads(nthreads);
    std::vector<double> losses(nthreads, 0.0);

    auto work = [&](int tid, size_t lo, size_t hi) {
        grads[tid].assign(nparams, 0.0);
        RayEval ev;
        double loss_acc = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            Rng rng = Rng::derive(depth_seed, i);
            eval_ray(model, batch[i].ray, cfg, rng, ev);
            const Vec3 r = ev.tr.rgb - batch[i].gt_rgb;
            loss_acc += dot3(r, r);
            backward_ray(model, ev, r * scale, cfg, grads[tid].data());
        }
        losses[tid] = loss_acc;
    };

    if (nthreads == 1) {
        work(0, 0, batch.size());
    } else {
        std::vector<std::thread> pool;
        const size_t per = (batch.size() + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const size_t lo = std::min(per * t, batch.size());
            const size_t hi = std::min(lo + per, batch.size());
            pool.emplace_back(work, t, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    GradientResult result;
    result.grad = std::move(grads[0]);
    for (int t = 1; t < nthreads; ++t) {
        const auto& g = grads[t];
        for (size_t i = 0; i < nparams; ++i) result.grad[i] += g[i];
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    result.loss = loss / (3.0 * static_cast<double>(batch.size()));

    for (double v : result.grad)
        if (!std::isfinite(v)) throw NonFiniteGradient("gradient has NaN or Inf components");
    if (!std::isfinite(result.loss)) throw NonFiniteGradient("loss is not finite");
    return result;
}

}  // namespace nerfstream
