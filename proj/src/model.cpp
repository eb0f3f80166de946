#include "nerfstream/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nerfstream/errors.hpp"

namespace nerfstream {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

NerfModel::NerfModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.grid.validate();
    if (cfg_.hidden_width < 1) throw InvalidConfig("hidden width must be >= 1");
    if (!(cfg_.aabb.min.x < cfg_.aabb.max.x && cfg_.aabb.min.y < cfg_.aabb.max.y &&
          cfg_.aabb.min.z < cfg_.aabb.max.z))
        throw InvalidConfig("scene aabb must have positive extent");

    if (cfg_.hidden_width > 256) throw InvalidConfig("hidden width limited to 256");
    if (cfg_.input_dim() > 512) throw InvalidConfig("encoded input limited to 512 dims");

    grid_params_ = cfg_.grid.param_count();
    const size_t in = cfg_.input_dim();
    const size_t w = cfg_.hidden_width;
    w1_ = grid_params_;
    b1_ = w1_ + w * in;
    w2_ = b1_ + w;
    b2_ = w2_ + w * w;
    w3_ = b2_ + w;
    b3_ = w3_ + 4 * w;
    params_.assign(b3_ + 4, 0.0);
}

void NerfModel::init_params(Rng& rng) {
    for (size_t i = 0; i < grid_params_; ++i) params_[i] = rng.uniform(-1e-4, 1e-4);

    const size_t in = cfg_.input_dim();
    const size_t w = cfg_.hidden_width;
    const double s1 = std::sqrt(6.0 / static_cast<double>(in + w));
    for (size_t i = 0; i < w * in; ++i) params_[w1_ + i] = rng.uniform(-s1, s1);
    const double s2 = std::sqrt(6.0 / static_cast<double>(w + w));
    for (size_t i = 0; i < w * w; ++i) params_[w2_ + i] = rng.uniform(-s2, s2);
    // Small output layer so an untrained field starts near sigma = ln 2 and
    // mid-gray color.
    for (size_t i = 0; i < 4 * w; ++i) params_[w3_ + i] = rng.uniform(-1e-2, 1e-2);
    for (size_t i = 0; i < w; ++i) {
        params_[b1_ + i] = 0.0;
        params_[b2_ + i] = 0.0;
    }
    for (size_t i = 0; i < 4; ++i) params_[b3_ + i] = 0.0;
}

FieldOutput NerfModel::forward(const Vec3& x, const Vec3& d, FieldCache& cache) const {
    const double* p = params_.data();
    const uint32_t enc = cfg_.grid.encoded_dim();
    const uint32_t in = cfg_.input_dim();
    const uint32_t w = cfg_.hidden_width;

    grid_encode(cfg_.grid, p, cfg_.aabb, x, cache.input.data(), cache.grid.data());
    cache.input[enc + 0] = d.x;
    cache.input[enc + 1] = d.y;
    cache.input[enc + 2] = d.z;
    cache.inside = true;

    const double* w1 = p + w1_;
    const double* b1 = p + b1_;
    for (uint32_t r = 0; r < w; ++r) {
        double acc = b1[r];
        const double* row = w1 + static_cast<size_t>(r) * in;
        for (uint32_t c = 0; c < in; ++c) acc += row[c] * cache.input[c];
        cache.a1[r] = acc > 0.0 ? acc : 0.0;
    }
    const double* w2 = p + w2_;
    const double* b2 = p + b2_;
    for (uint32_t r = 0; r < w; ++r) {
        double acc = b2[r];
        const double* row = w2 + static_cast<size_t>(r) * w;
        for (uint32_t c = 0; c < w; ++c) acc += row[c] * cache.a1[c];
        cache.a2[r] = acc > 0.0 ? acc : 0.0;
    }
    const double* w3 = p + w3_;
    const double* b3 = p + b3_;
    for (uint32_t r = 0; r < 4; ++r) {
        double acc = b3[r];
        const double* row = w3 + static_cast<size_t>(r) * w;
        for (uint32_t c = 0; c < w; ++c) acc += row[c] * cache.a2[c];
        cache.raw[r] = acc;
    }

    FieldOutput out;
    out.sigma = softplus(cache.raw[0]);
    out.color = Vec3{sigmoid(cache.raw[1]), sigmoid(cache.raw[2]), sigmoid(cache.raw[3])};
    return out;
}

FieldOutput NerfModel::query_field(const Vec3& x, const Vec3& d) const {
    FieldCache cache;
    cache.resize(cfg_);
    return forward(x, d, cache);
}

bool NerfModel::sample_or_empty(const Vec3& x, const Vec3& d, FieldCache& cache,
                                FieldOutput& out) const {
    if (!cfg_.aabb.contains(x)) {
        cache.inside = false;
        out = FieldOutput{};
        return false;
    }
    out = forward(x, d, cache);
    return true;
}

void NerfModel::backward(double dsigma, const Vec3& dcolor, const FieldCache& cache,
                         double* grad) const {
    const double* p = params_.data();
    const uint32_t enc = cfg_.grid.encoded_dim();
    const uint32_t in = cfg_.input_dim();
    const uint32_t w = cfg_.hidden_width;

    // Activation derivatives: d(softplus) = sigmoid, d(sigmoid) = s(1-s).
    double draw[4];
    draw[0] = dsigma * sigmoid(cache.raw[0]);
    const double s1 = sigmoid(cache.raw[1]);
    const double s2 = sigmoid(cache.raw[2]);
    const double s3 = sigmoid(cache.raw[3]);
    draw[1] = dcolor.x * s1 * (1.0 - s1);
    draw[2] = dcolor.y * s2 * (1.0 - s2);
    draw[3] = dcolor.z * s3 * (1.0 - s3);

    // Output layer.
    double da2[256];  // hidden_width <= 256 enforced below at construction use
    for (uint32_t c = 0; c < w; ++c) da2[c] = 0.0;
    const double* w3 = p + w3_;
    for (uint32_t r = 0; r < 4; ++r) {
        const double g = draw[r];
        double* wrow = grad + w3_ + static_cast<size_t>(r) * w;
        const double* row = w3 + static_cast<size_t>(r) * w;
        for (uint32_t c = 0; c < w; ++c) {
            wrow[c] += g * cache.a2[c];
            da2[c] += row[c] * g;
        }
        grad[b3_ + r] += g;
    }

    // Second hidden layer.
    double da1[256];
    for (uint32_t c = 0; c < w; ++c) da1[c] = 0.0;
    const double* w2 = p + w2_;
    for (uint32_t r = 0; r < w; ++r) {
        if (cache.a2[r] <= 0.0) continue;  // ReLU gate
        const double g = da2[r];
        double* wrow = grad + w2_ + static_cast<size_t>(r) * w;
        const double* row = w2 + static_cast<size_t>(r) * w;
        for (uint32_t c = 0; c < w; ++c) {
            wrow[c] += g * cache.a1[c];
            da1[c] += row[c] * g;
        }
        grad[b2_ + r] += g;
    }

    // First hidden layer, then the encoder.
    double din[512];
    for (uint32_t c = 0; c < in; ++c) din[c] = 0.0;
    const double* w1 = p + w1_;
    for (uint32_t r = 0; r < w; ++r) {
        if (cache.a1[r] <= 0.0) continue;
        const double g = da1[r];
        double* wrow = grad + w1_ + static_cast<size_t>(r) * in;
        const double* row = w1 + static_cast<size_t>(r) * in;
        for (uint32_t c = 0; c < in; ++c) {
            wrow[c] += g * cache.input[c];
            din[c] += row[c] * g;
        }
        grad[b1_ + r] += g;
    }

    grid_encode_backward(cfg_.grid, cache.grid.data(), din, grad);
    (void)enc;
}

void save_checkpoint(const std::string& path, const std::vector<double>& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MissingFile("cannot open checkpoint for writing: " + path);
    const char magic[4] = {'N', 'R', 'F', 'B'};
    f.write(magic, 4);
    const uint32_t version = 1;
    uint8_t buf[8];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<uint8_t>(version >> (8 * i));
    f.write(reinterpret_cast<const char*>(buf), 4);
    const uint64_t count = params.size();
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(count >> (8 * i));
    f.write(reinterpret_cast<const char*>(buf), 8);
    for (double v : params) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(bits >> (8 * i));
        f.write(reinterpret_cast<const char*>(buf), 8);
    }
    if (!f) throw Error("checkpoint write failed: " + path);
}

std::vector<double> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingFile("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "NRFB", 4) != 0)
        throw SchemaViolation("bad checkpoint magic: " + path);
    uint8_t buf[8];
    f.read(reinterpret_cast<char*>(buf), 4);
    uint32_t version = 0;
    for (int i = 0; i < 4; ++i) version |= static_cast<uint32_t>(buf[i]) << (8 * i);
    if (version != 1) throw SchemaViolation("unsupported checkpoint version");
    f.read(reinterpret_cast<char*>(buf), 8);
    uint64_t count = 0;
    for (int i = 0; i < 8; ++i) count |= static_cast<uint64_t>(buf[i]) << (8 * i);
    std::vector<double> params(count);
    for (uint64_t n = 0; n < count; ++n) {
        f.read(reinterpret_cast<char*>(buf), 8);
        if (!f) throw SchemaViolation("checkpoint truncated");
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(buf[i]) << (8 * i);
        std::memcpy(&params[n], &bits, 8);
    }
    return params;
}

}  // namespace nerfstream
