#include "cbs/augment.hpp"

#include <random>

#include "cbs/errors.hpp"

namespace cbs {

namespace {

void check(const AugmentConfig& cfg) {
    if (!(cfg.weak_sigma >= 0.0)) throw ValidationError("weak_sigma must be >= 0");
    if (!(cfg.strong_sigma >= 0.0)) throw ValidationError("strong_sigma must be >= 0");
    if (!(cfg.strong_mask_prob >= 0.0 && cfg.strong_mask_prob <= 1.0))
        throw ValidationError("strong_mask_prob must be in [0, 1]");
}

}  // namespace

std::vector<double> weak(const AugmentConfig& cfg, std::span<const double> features, Rng& rng) {
    check(cfg);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> out(features.begin(), features.end());
    for (auto& v : out) v += cfg.weak_sigma * gauss(rng);
    return out;
}

std::vector<double> strong(const AugmentConfig& cfg, std::span<const double> features, Rng& rng) {
    check(cfg);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(features.begin(), features.end());
    for (auto& v : out) v += cfg.strong_sigma * gauss(rng);
    for (auto& v : out)
        if (unif(rng) < cfg.strong_mask_prob) v = 0.0;
    return out;
}

}  // namespace cbs
