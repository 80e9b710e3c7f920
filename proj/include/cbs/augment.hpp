#pragma once

#include <span>
#include <vector>

#include "cbs/rng.hpp"

namespace cbs {

/// Weak/strong view parameters. The trained pipeline requires the strong
/// operator to dominate the weak one (strong_sigma >= weak_sigma, nonzero
/// mask probability); the operators themselves also accept degenerate
/// values so edge cases stay testable.
struct AugmentConfig {
    double weak_sigma = 0.05;        // additive jitter std for the weak view
    double strong_sigma = 0.2;       // additive jitter std for the strong view
    double strong_mask_prob = 0.2;   // per-coordinate zero-mask probability
};

/// features + N(0, weak_sigma^2 I). Identity when weak_sigma = 0.
std::vector<double> weak(const AugmentConfig& cfg, std::span<const double> features, Rng& rng);

/// features + N(0, strong_sigma^2 I), then each coordinate independently
/// zeroed with probability strong_mask_prob.
std::vector<double> strong(const AugmentConfig& cfg, std::span<const double> features, Rng& rng);

}  // namespace cbs
