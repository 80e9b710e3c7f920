#include "cbs/correction.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cbs/errors.hpp"

namespace cbs {

namespace {

void check_distribution(std::span<const double> p) {
    double sum = 0.0;
    for (const double v : p) {
        if (!(v >= 0.0)) throw ValidationError("distribution entries must be >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("distribution must sum to 1");
}

}  // namespace

SampleTrackers::SampleTrackers(std::uint32_t num_classes, const std::vector<std::uint64_t>& ids)
    : num_classes_(num_classes) {
    if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
    table_.reserve(ids.size());
    for (const auto id : ids) {
        SampleTracker t;
        t.ema_label.assign(num_classes, 0.0);
        t.cm_cumsum.assign(num_classes, 0.0);
        if (!table_.emplace(id, std::move(t)).second)
            throw ValidationError("duplicate sample id " + std::to_string(id));
    }
}

const SampleTracker& SampleTrackers::at(std::uint64_t id) const {
    const auto it = table_.find(id);
    if (it == table_.end())
        throw ValidationError("no tracker for sample id " + std::to_string(id));
    return it->second;
}

SampleTracker& SampleTrackers::at(std::uint64_t id) {
    return const_cast<SampleTracker&>(std::as_const(*this).at(id));
}

void SampleTrackers::ema_update(std::uint64_t id, std::span<const double> p_weak,
                                double alpha_ema) {
    if (!(alpha_ema >= 0.0 && alpha_ema < 1.0))
        throw ValidationError("ema coefficient must be in [0, 1)");
    if (p_weak.size() != num_classes_) throw ValidationError("prediction length mismatch");
    check_distribution(p_weak);
    SampleTracker& t = at(id);
    if (!t.initialized) {
        t.ema_label.assign(p_weak.begin(), p_weak.end());
        t.initialized = true;
        return;
    }
    for (std::uint32_t c = 0; c < num_classes_; ++c)
        t.ema_label[c] = alpha_ema * t.ema_label[c] + (1.0 - alpha_ema) * p_weak[c];
}

void SampleTrackers::accumulate_margins(std::uint64_t id) {
    SampleTracker& t = at(id);
    if (!t.initialized) throw ValidationError("tracker has no label yet for id " + std::to_string(id));
    const auto cm = confidence_margin(t.ema_label);
    for (std::uint32_t c = 0; c < num_classes_; ++c) t.cm_cumsum[c] += cm[c];
    ++t.epochs_tracked;
}

double SampleTrackers::acm(std::uint64_t id) const {
    const SampleTracker& t = at(id);
    if (t.epochs_tracked == 0)
        throw ValidationError("no tracked epochs for sample id " + std::to_string(id));
    const std::size_t j = argmax_low(t.ema_label);
    return t.cm_cumsum[j] / static_cast<double>(t.epochs_tracked);
}

const std::vector<double>& SampleTrackers::ema_label(std::uint64_t id) const {
    const SampleTracker& t = at(id);
    if (!t.initialized) throw ValidationError("tracker has no label yet for id " + std::to_string(id));
    return t.ema_label;
}

const std::vector<double>& SampleTrackers::cm_cumsum(std::uint64_t id) const {
    return at(id).cm_cumsum;
}

std::uint64_t SampleTrackers::epochs_tracked(std::uint64_t id) const {
    return at(id).epochs_tracked;
}

std::vector<double> confidence_margin(std::span<const double> y_hat) {
    check_distribution(y_hat);
    const std::size_t j = argmax_low(y_hat);
    const double top = y_hat[j];
    double runner_up = -1.0;
    for (std::size_t c = 0; c < y_hat.size(); ++c)
        if (c != j) runner_up = std::max(runner_up, y_hat[c]);
    std::vector<double> cm(y_hat.size());
    for (std::size_t c = 0; c < y_hat.size(); ++c)
        cm[c] = (c == j) ? top - runner_up : y_hat[c] - top;
    return cm;
}

double compute_threshold(const std::vector<double>& acm_values, double tau) {
    if (acm_values.empty()) throw ValidationError("threshold needs at least one value");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must be in [0, 1]");
    const auto [lo, hi] = std::minmax_element(acm_values.begin(), acm_values.end());
    return *lo + (*hi - *lo) * tau;
}

MaskDecision decide_mask(const SampleTrackers& trackers,
                         const std::vector<std::uint64_t>& noisy_ids, double tau) {
    MaskDecision d;
    if (noisy_ids.empty()) throw ValidationError("mask decision needs a nonempty noisy subset");
    std::vector<double> values;
    values.reserve(noisy_ids.size());
    for (const auto id : noisy_ids) values.push_back(trackers.acm(id));
    d.threshold = compute_threshold(values, tau);
    for (std::size_t i = 0; i < noisy_ids.size(); ++i)
        (values[i] > d.threshold ? d.kept_ids : d.masked_ids).push_back(noisy_ids[i]);
    return d;
}

std::pair<double, Gradients> consistency_loss(const Model& model, const TrainView& data,
                                              const std::vector<std::size_t>& kept_positions,
                                              const SampleTrackers& trackers,
                                              const AugmentConfig& aug, Rng& rng) {
    if (kept_positions.empty()) return {0.0, zero_gradients(model)};
    std::vector<std::vector<double>> views, targets;
    views.reserve(kept_positions.size());
    targets.reserve(kept_positions.size());
    for (const auto pos : kept_positions) {
        if (pos >= data.size()) throw ValidationError("kept position out of range");
        views.push_back(strong(aug, data.features(pos), rng));
        targets.push_back(trackers.ema_label(data.id(pos)));
    }
    const std::vector<double> weights(kept_positions.size(), 1.0);
    return soft_ce_loss_and_grad(model, views, targets, weights);
}

}  // namespace cbs
