#pragma once

#include <span>
#include <string>
#include <vector>

#include "sfda/mat.hpp"
#include "sfda/rng.hpp"

namespace sfda::augment {

// Vector-space analogue of a weak/strong augmentation pair: weak is mild
// Gaussian noise, strong composes N random ops at a shared magnitude.
struct AugmentConfig {
    double weak_noise_sigma = 0.05;   // in units of per-dimension input std
    int strong_ops_per_sample = 2;
    double strong_magnitude = 0.5;    // in (0, 1]
    std::vector<std::string> op_pool = {"noise", "mask", "scale", "rotate"};

    void validate() const;
};

// Per-dimension population standard deviation; augmentation noise is scaled
// by this so its strength is scale-free. Computed once from target-train.
Vec per_dim_std(const Mat& data);

struct AugmentContext {
    AugmentConfig cfg;
    Vec dim_std;
};

// x + N(0, (weak_noise_sigma * dim_std)^2), elementwise.
Vec weak_augment(const AugmentContext& ctx, std::span<const double> x, RngStream& rng);

// Composition of strong_ops_per_sample ops drawn uniformly with replacement
// from op_pool, each scaled by strong_magnitude:
//   noise  - additive Gaussian at 4x the weak scale
//   mask   - zeroes round(0.25 * magnitude * n) distinct coordinates
//   scale  - multiplies by a factor uniform in [1 - 0.5m, 1 + 0.5m]
//   rotate - rotates a uniformly chosen coordinate pair by an angle uniform
//            in [-m*pi/4, m*pi/4] (identity when n < 2)
Vec strong_augment(const AugmentContext& ctx, std::span<const double> x, RngStream& rng);

} // namespace sfda::augment
