#include "nerfstream/hash_grid.hpp"

#include <algorithm>

namespace nerfstream {

namespace {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

void grid_encode(const HashGridConfig& cfg, const double* tables, const Aabb& aabb, const Vec3& x,
                 double* out, GridLevelCache* cache) {
    const double nx = clamp01((x.x - aabb.min.x) / (aabb.max.x - aabb.min.x));
    const double ny = clamp01((x.y - aabb.min.y) / (aabb.max.y - aabb.min.y));
    const double nz = clamp01((x.z - aabb.min.z) / (aabb.max.z - aabb.min.z));

    const uint32_t mask = cfg.table_size - 1;
    const uint32_t F = cfg.features_per_level;
    const size_t level_stride = static_cast<size_t>(cfg.table_size) * F;

    for (uint32_t l = 0; l < cfg.levels; ++l) {
        const double res = static_cast<double>(cfg.resolution(l));
        const double sx = nx * res, sy = ny * res, sz = nz * res;
        const uint32_t i0 = static_cast<uint32_t>(sx);
        const uint32_t j0 = static_cast<uint32_t>(sy);
        const uint32_t k0 = static_cast<uint32_t>(sz);
        const double fx = sx - i0, fy = sy - j0, fz = sz - k0;
        if (cache) cache[l] = GridLevelCache{i0, j0, k0, fx, fy, fz};

        const double* level = tables + l * level_stride;
        double* dst = out + l * F;
        for (uint32_t f = 0; f < F; ++f) dst[f] = 0.0;

        for (int corner = 0; corner < 8; ++corner) {
            const uint32_t di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
            const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) * (dk ? fz : 1.0 - fz);
            const double* entry = level + static_cast<size_t>(grid_corner_hash(
                                              i0 + di, j0 + dj, k0 + dk, mask)) *
                                              F;
            for (uint32_t f = 0; f < F; ++f) dst[f] += w * entry[f];
        }
    }
}

void grid_encode_backward(const HashGridConfig& cfg, const GridLevelCache* cache,
                          const double* upstream, double* grad_tables) {
    const uint32_t mask = cfg.table_size - 1;
    const uint32_t F = cfg.features_per_level;
    const size_t level_stride = static_cast<size_t>(cfg.table_size) * F;

    for (uint32_t l = 0; l < cfg.levels; ++l) {
        const GridLevelCache& c = cache[l];
        double* level_grad = grad_tables + l * level_stride;
        const double* up = upstream + l * F;

        for (int corner = 0; corner < 8; ++corner) {
            const uint32_t di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
            const double w =
                (di ? c.fx : 1.0 - c.fx) * (dj ? c.fy : 1.0 - c.fy) * (dk ? c.fz : 1.0 - c.fz);
            double* entry_grad =
                level_grad +
                static_cast<size_t>(grid_corner_hash(c.i0 + di, c.j0 + dj, c.k0 + dk, mask)) * F;
            for (uint32_t f = 0; f < F; ++f) entry_grad[f] += w * up[f];
        }
    }
}

}  // namespace nerfstream
