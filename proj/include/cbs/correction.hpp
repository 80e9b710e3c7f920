#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cbs/augment.hpp"
#include "cbs/dataset.hpp"
#include "cbs/model.hpp"
#include "cbs/rng.hpp"

namespace cbs {

/// Per-sample correction state: the EMA soft label, running per-class
/// confidence-margin sums, and how many epochs have been accumulated.
struct SampleTracker {
    std::vector<double> ema_label;  // y-hat, distribution over C once initialized
    std::vector<double> cm_cumsum;  // per-class margin sums across tracked epochs
    std::uint64_t epochs_tracked = 0;
    bool initialized = false;
};

/// Tracker table for a fixed id set. The per-epoch protocol per sample is
/// ema_update (refresh y-hat from the weak-view prediction) followed by
/// accumulate_margins (fold the margins of the refreshed y-hat into the
/// running sums). The first ema_update ignores the coefficient and adopts
/// the prediction outright, so y-hat never starts from the noisy one-hot.
class SampleTrackers {
public:
    SampleTrackers() = default;
    SampleTrackers(std::uint32_t num_classes, const std::vector<std::uint64_t>& ids);

    std::uint32_t num_classes() const { return num_classes_; }
    std::size_t size() const { return table_.size(); }
    bool contains(std::uint64_t id) const { return table_.count(id) != 0; }

    /// y-hat <- alpha*y-hat + (1-alpha)*p_weak (alpha = 0 on first touch).
    void ema_update(std::uint64_t id, std::span<const double> p_weak, double alpha_ema);

    /// Adds the current y-hat's full margin vector to cm_cumsum and bumps
    /// epochs_tracked.
    void accumulate_margins(std::uint64_t id);

    /// cm_cumsum[argmax y-hat] / epochs_tracked. The class index is the
    /// current argmax; the sum spans every tracked epoch for that class.
    double acm(std::uint64_t id) const;

    const std::vector<double>& ema_label(std::uint64_t id) const;
    const std::vector<double>& cm_cumsum(std::uint64_t id) const;
    std::uint64_t epochs_tracked(std::uint64_t id) const;

private:
    const SampleTracker& at(std::uint64_t id) const;
    SampleTracker& at(std::uint64_t id);

    std::uint32_t num_classes_ = 0;
    std::unordered_map<std::uint64_t, SampleTracker> table_;
};

/// Per-class confidence margins of a soft label (argmax ties to the lowest
/// index): the argmax entry scores its lead over the runner-up, every other
/// class scores its deficit against the maximum.
std::vector<double> confidence_margin(std::span<const double> y_hat);

/// T = min + (max - min)*tau over the supplied ACM values.
double compute_threshold(const std::vector<double>& acm_values, double tau);

/// Threshold split of the noisy subset. Strictly greater ACM is kept; ties
/// with the threshold are masked.
struct MaskDecision {
    double threshold = 0.0;
    std::vector<std::uint64_t> kept_ids;
    std::vector<std::uint64_t> masked_ids;
};

MaskDecision decide_mask(const SampleTrackers& trackers,
                         const std::vector<std::uint64_t>& noisy_ids, double tau);

/// Mean soft cross-entropy of strong-view predictions against the (constant)
/// EMA labels of the kept samples. Empty kept set gives zero loss and a zero
/// gradient.
std::pair<double, Gradients> consistency_loss(const Model& model, const TrainView& data,
                                              const std::vector<std::size_t>& kept_positions,
                                              const SampleTrackers& trackers,
                                              const AugmentConfig& aug, Rng& rng);

}  // namespace cbs
