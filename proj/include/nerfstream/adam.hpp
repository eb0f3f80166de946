#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nerfstream/errors.hpp"

namespace nerfstream {

struct AdamState {
    std::vector<double> m, v;  // first / second moment accumulators
    uint64_t t = 0;            // completed steps
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(size_t n = 0, double learning_rate = 1e-2)
        : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

// Standard Adam with bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimensionMismatch("adam_step shape mismatch");
    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const double b1 = state.beta1, b2 = state.beta2;
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        const double m = state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        const double v = state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        params[i] -= state.lr * (m / c1) / (std::sqrt(v / c2) + state.eps);
    }
}

}  // namespace nerfstream
