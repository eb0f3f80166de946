#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nerfstream/errors.hpp"
#include "nerfstream/geometry.hpp"
#include "nerfstream/image.hpp"
#include "nerfstream/model.hpp"
#include "nerfstream/rng.hpp"

namespace nerfstream {

struct RenderConfig {
    double near = 0.05, far = 5.0;  // meters along the ray
    uint32_t samples_per_ray = 64;
    Vec3 background{1.0, 1.0, 1.0};
    bool stratified = true;

    void validate() const {
        if (!(near > 0.0 && near < far)) throw InvalidConfig("require 0 < near < far");
        if (samples_per_ray < 1) throw InvalidConfig("samples_per_ray must be >= 1");
    }
};

struct RayRender {
    Vec3 rgb;
    double opacity = 0.0;
};

// Full per-sample record of one rendered ray, for property checks and for
// the backward pass.
struct RayTrace {
    std::vector<double> t;       // sample depths
    std::vector<double> delta;   // intervals
    std::vector<double> sigma;
    std::vector<Vec3> color;
    std::vector<double> alpha;
    std::vector<double> trans;   // trans[i] = T_i before sample i; size N+1, trans[N] leftover
    std::vector<double> weight;  // T_i * alpha_i
    Vec3 rgb;
    double opacity = 0.0;
};

// One stratified (or midpoint) depth per equal bin of [near, far].
inline void sample_depths(const RenderConfig& cfg, Rng& rng, std::vector<double>& t,
                          std::vector<double>& delta) {
    const uint32_t n = cfg.samples_per_ray;
    const double bin = (cfg.far - cfg.near) / n;
    t.resize(n);
    delta.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        const double lo = cfg.near + bin * i;
        t[i] = cfg.stratified ? lo + bin * rng.uniform() : lo + 0.5 * bin;
    }
    for (uint32_t i = 0; i + 1 < n; ++i) delta[i] = t[i + 1] - t[i];
    delta[n - 1] = bin;
}

// Alpha-composites the sampled field along the ray. `field(x, d)` must
// return FieldOutput; it is responsible for reporting sigma = 0 in empty
// space (the model wrapper does this outside its scene box).
template <typename Field>
RayTrace trace_ray_field(Field&& field, const Ray& ray, const RenderConfig& cfg, Rng& rng) {
    RayTrace tr;
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
    for (uint32_t i = 0; i < n; ++i) {
        const FieldOutput s = field(ray.origin + ray.direction * tr.t[i], ray.direction);
        tr.sigma[i] = s.sigma;
        tr.color[i] = s.color;
        const double a = 1.0 - std::exp(-s.sigma * tr.delta[i]);
        tr.alpha[i] = a;
        tr.trans[i] = trans;
        const double w = trans * a;
        tr.weight[i] = w;
        acc += s.color * w;
        opacity += w;
        trans *= 1.0 - a;
    }
    tr.trans[n] = trans;
    tr.rgb = acc + cfg.background * (1.0 - opacity);
    tr.opacity = opacity;
    return tr;
}

template <typename Field>
RayRender render_ray_field(Field&& field, const Ray& ray, const RenderConfig& cfg, Rng& rng) {
    const RayTrace tr = trace_ray_field(field, ray, cfg, rng);
    return {tr.rgb, tr.opacity};
}

RayRender render_ray(const NerfModel& model, const Ray& ray, const RenderConfig& cfg, Rng& rng);
RayTrace trace_ray(const NerfModel& model, const Ray& ray, const RenderConfig& cfg, Rng& rng);

// Deterministic full-frame render: midpoint depths, 8-bit output via
// round(255 * clamp(c, 0, 1)).
Rgb8Image render_image(const NerfModel& model, const CameraIntrinsics& intr, const PoseSE3& pose,
                       const RenderConfig& cfg, int threads = 1);

// Mean over batch and channels of squared error.
double photometric_loss(std::span<const Vec3> pred, std::span<const Vec3> gt);

// -10*log10(MSE) with pixels in [0,1]; +infinity when the images are equal.
double psnr(const Rgb8Image& a, const Rgb8Image& b);

struct RayBatchItem {
    Ray ray;
    Vec3 gt_rgb;
};

struct GradientResult {
    double loss = 0.0;
    std::vector<double> grad;
};

// Exact gradient of photometric_loss over the batch w.r.t. every model
// parameter, holding the sampled depths fixed. Depths for ray i come from
// Rng::derive(depth_seed, i), so results do not depend on how the batch is
// split across threads; partial sums are reduced in fixed chunk order, so a
// fixed thread count gives bit-identical gradients.
GradientResult loss_gradients(const NerfModel& model, std::span<const RayBatchItem> batch,
                              const RenderConfig& cfg, uint64_t depth_seed, int threads = 1);

// Loss alone, same depth scheme; the finite-difference oracle in the tests
// relies on this matching loss_gradients' forward pass exactly.
double batch_loss(const NerfModel& model, std::span<const RayBatchItem> batch,
                  const RenderConfig& cfg, uint64_t depth_seed);

}  // namespace nerfstream
