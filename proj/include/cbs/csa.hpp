#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbs/dataset.hpp"
#include "cbs/model.hpp"
#include "cbs/rng.hpp"

namespace cbs {

/// Convex combination of two clean donors, weighted toward the one the model
/// is more confident about.
struct MixedSample {
    std::vector<double> features;    // l*x_hi + (1-l)*x_lo
    std::vector<double> soft_label;  // same mix of the one-hot observed labels
    double mix_coefficient = 0.5;    // l in [0.5, 1]
    std::uint64_t donor_i = 0;       // first donor id, argument order
    std::uint64_t donor_j = 0;
};

/// l = max(l', 1 - l') with l' ~ Beta(phi, phi), so l lands in [0.5, 1].
double draw_coefficient(Rng& rng, double phi = 4.0);

/// Mixes two donors. The donor with the larger max-softmax confidence
/// receives coefficient l, the other 1 - l; an exact tie favors donor i.
/// Labels enter as one-hot vectors over num_classes.
MixedSample mix(std::uint64_t id_i, std::span<const double> x_i, std::uint32_t y_i,
                std::span<const double> p_i, std::uint64_t id_j, std::span<const double> x_j,
                std::uint32_t y_j, std::span<const double> p_j, double l,
                std::uint32_t num_classes);

/// One MixedSample per listed clean batch member. Partners are drawn
/// uniformly with replacement from the same list (self-pairing allowed, which
/// reduces to the identity mix). Confidences come from the frozen snapshot on
/// raw features. Empty input gives empty output.
std::vector<MixedSample> augment_clean_batch(const TrainView& data,
                                             const std::vector<std::size_t>& clean_positions,
                                             const Model& snapshot, double phi, Rng& rng);

}  // namespace cbs
