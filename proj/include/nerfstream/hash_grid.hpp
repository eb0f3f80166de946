#pragma once

#include <cmath>
#include <cstdint>

#include "nerfstream/errors.hpp"
#include "nerfstream/geometry.hpp"

namespace nerfstream {

// Multiresolution hash grid: one feature table per level, indexed by a
// spatial hash of integer cell corners, trilinearly interpolated.
struct HashGridConfig {
    uint32_t levels = 8;
    uint32_t table_size = 1u << 14;  // entries per level, power of two
    uint32_t features_per_level = 2;
    uint32_t base_resolution = 16;
    double growth_factor = 1.5;

    uint32_t resolution(uint32_t level) const {
        return static_cast<uint32_t>(
            std::floor(base_resolution * std::pow(growth_factor, static_cast<double>(level))));
    }
    uint32_t encoded_dim() const { return levels * features_per_level; }
    size_t param_count() const {
        return static_cast<size_t>(levels) * table_size * features_per_level;
    }

    void validate() const {
        if (levels < 1) throw InvalidConfig("hash grid needs at least one level");
        if (table_size == 0 || (table_size & (table_size - 1)) != 0)
            throw InvalidConfig("hash table size must be a power of two");
        if (features_per_level < 1) throw InvalidConfig("features_per_level must be >= 1");
        if (base_resolution < 1) throw InvalidConfig("base_resolution must be >= 1");
        if (growth_factor < 1.0) throw InvalidConfig("growth_factor must be >= 1");
    }
};

inline uint32_t grid_corner_hash(uint32_t i, uint32_t j, uint32_t k, uint32_t table_mask) {
    // Primes per corner axis; i's multiplier is 1. uint32 wrap-around is part
    // of the scheme.
    return (i ^ (j * 2654435761u) ^ (k * 805459861u)) & table_mask;
}

// Interpolation state of one level, enough to replay the corner lookups.
struct GridLevelCache {
    uint32_t i0, j0, k0;
    double fx, fy, fz;
};

// Encodes x (clamped into aabb) into levels*features_per_level outputs.
// `tables` holds all levels contiguously, level-major then entry then
// feature. `cache`, when non-null, must have `levels` entries.
void grid_encode(const HashGridConfig& cfg, const double* tables, const Aabb& aabb, const Vec3& x,
                 double* out, GridLevelCache* cache);

// Accumulates d(loss)/d(tables) given d(loss)/d(encoded output).
void grid_encode_backward(const HashGridConfig& cfg, const GridLevelCache* cache,
                          const double* upstream, double* grad_tables);

}  // namespace nerfstream
