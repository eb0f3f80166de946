#pragma once

#include <string>
#include <vector>

#include "nerfstream/geometry.hpp"
#include "nerfstream/hash_grid.hpp"
#include "nerfstream/rng.hpp"

namespace nerfstream {

struct ModelConfig {
    HashGridConfig grid;
    uint32_t hidden_width = 64;  // two hidden layers of this width
    Aabb aabb{Vec3{-2.2, -2.2, -2.2}, Vec3{2.2, 2.2, 2.2}};

    uint32_t input_dim() const { return grid.encoded_dim() + 3; }  // + raw view direction
};

struct FieldOutput {
    double sigma = 0.0;  // softplus of raw density, >= 0
    Vec3 color;          // sigmoid of raw color, componentwise in (0,1)
};

// Per-sample forward state kept for the backward pass.
struct FieldCache {
    std::vector<GridLevelCache> grid;
    std::vector<double> input;  // encoded features + direction
    std::vector<double> a1, a2; // post-ReLU hidden activations
    double raw[4] = {0, 0, 0, 0};
    bool inside = false;

    void resize(const ModelConfig& cfg) {
        grid.resize(cfg.grid.levels);
        input.resize(cfg.input_dim());
        a1.resize(cfg.hidden_width);
        a2.resize(cfg.hidden_width);
    }
};

// Radiance field: multiresolution hash encoding into a small ReLU MLP with
// four raw outputs (density plus RGB). Parameters live in one flat vector:
// hash tables first, then W1, b1, W2, b2, W3, b3 row-major.
class NerfModel {
 public:
    explicit NerfModel(const ModelConfig& cfg);

    void init_params(Rng& rng);

    // Convenience query; x should lie inside the scene box (callers clamp or
    // skip outside points).
    FieldOutput query_field(const Vec3& x, const Vec3& d) const;

    // Hot-path forward; cache must be resize()d for this config.
    FieldOutput forward(const Vec3& x, const Vec3& d, FieldCache& cache) const;

    // Accumulates parameter gradients into `grad` (same length as params())
    // given d(loss)/d(sigma) and d(loss)/d(color) for a sample previously
    // run through forward() with `cache`.
    void backward(double dsigma, const Vec3& dcolor, const FieldCache& cache, double* grad) const;

    // Returns sigma = 0 outside the scene box without touching the MLP.
    bool sample_or_empty(const Vec3& x, const Vec3& d, FieldCache& cache, FieldOutput& out) const;

    const ModelConfig& config() const { return cfg_; }
    const Aabb& aabb() const { return cfg_.aabb; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    size_t param_count() const { return params_.size(); }

    // Offsets into the parameter vector.
    size_t hash_offset() const { return 0; }
    size_t mlp_offset() const { return grid_params_; }

 private:
    ModelConfig cfg_;
    size_t grid_params_;
    size_t w1_, b1_, w2_, b2_, w3_, b3_;  // offsets
    std::vector<double> params_;
};

// Checkpoint blob: 16-byte header (magic "NRFB", version u32, parameter
// count u64, all little-endian) followed by the parameters as f64 LE.
void save_checkpoint(const std::string& path, const std::vector<double>& params);
std::vector<double> load_checkpoint(const std::string& path);

double softplus(double x);
double sigmoid(double x);

}  // namespace nerfstream
