#include "cbs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "cbs/csa.hpp"
#include "cbs/errors.hpp"
#include "cbs/rng.hpp"

namespace cbs {
namespace {

std::vector<std::uint64_t> collect_ids(const TrainView& view) {
    std::vector<std::uint64_t> ids(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) ids[i] = view.id(i);
    return ids;
}

std::vector<double> one_hot(std::uint32_t label, std::uint32_t num_classes) {
    std::vector<double> y(num_classes, 0.0);
    y[label] = 1.0;
    return y;
}

}  // namespace

void validate_run_config(const RunConfig& c) {
    if (c.warmup_epochs < 1) throw ValidationError("warmup_epochs must be at least 1");
    if (c.total_epochs < c.warmup_epochs)
        throw ValidationError("total_epochs must be >= warmup_epochs");
    if (c.batch_size < 1) throw ValidationError("batch_size must be positive");
    if (!(c.initial_lr > 0.0) || !std::isfinite(c.initial_lr))
        throw ValidationError("initial_lr must be positive and finite");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0))
        throw ValidationError("momentum must be in [0, 1)");
    if (!(c.weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
    if (!(c.noise_rate >= 0.0 && c.noise_rate < 1.0))
        throw ValidationError("noise_rate must be in [0, 1)");
    const bool auto_rho = c.selection_ratio < 0.0;
    if (!auto_rho && !(c.selection_ratio > 0.0 && c.selection_ratio <= 1.0))
        throw ValidationError("selection_ratio must be negative (auto) or in (0, 1]");
    if (!(c.mix_phi > 0.0)) throw ValidationError("mix_phi must be positive");
    if (!(c.mask_tau >= 0.0 && c.mask_tau <= 1.0))
        throw ValidationError("mask_tau must be in [0, 1]");
    if (!(c.ema_coefficient >= 0.0 && c.ema_coefficient < 1.0))
        throw ValidationError("ema_coefficient must be in [0, 1)");
    if (!(c.loss_weight >= 0.0)) throw ValidationError("loss_weight must be non-negative");
    if (c.hidden_dim < 1) throw ValidationError("hidden_dim must be positive");
    if (!(c.augment.weak_sigma >= 0.0)) throw ValidationError("weak_sigma must be non-negative");
    if (!(c.augment.strong_sigma >= c.augment.weak_sigma))
        throw ValidationError("strong_sigma must be >= weak_sigma");
    if (!(c.augment.strong_mask_prob > 0.0 && c.augment.strong_mask_prob < 1.0))
        throw ValidationError("strong_mask_prob must be in (0, 1)");
}

double resolved_selection_ratio(const RunConfig& c) {
    validate_run_config(c);
    return c.selection_ratio > 0.0 ? c.selection_ratio : 1.0 - c.noise_rate;
}

double epoch_learning_rate(const RunConfig& c, std::uint32_t epoch) {
    validate_run_config(c);
    if (epoch < 1 || epoch > c.total_epochs)
        throw ValidationError("epoch out of range for the configured schedule");
    if (epoch <= c.warmup_epochs) return c.initial_lr;
    return cosine_lr(c.initial_lr, epoch - c.warmup_epochs - 1,
                     c.total_epochs - c.warmup_epochs);
}

const char* stage_name(Stage s) { return s == Stage::warmup ? "warmup" : "robust"; }

double evaluate_accuracy(const Model& m, const Dataset& ds) {
    if (ds.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (const Sample& s : ds.samples()) {
        const std::vector<double> p = forward(m, s.features);
        if (argmax_low(p) == s.observed_label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

Trainer::Trainer(const RunConfig& config, TrainView train, const Dataset* test_set,
                 Method method)
    : config_(config),
      train_(train),
      test_set_(test_set),
      method_(method),
      ids_(collect_ids(train)),
      trackers_(train.num_classes(), ids_) {
    validate_run_config(config_);
    rho_ = resolved_selection_ratio(config_);
    if (train_.size() == 0) throw ValidationError("training set is empty");
    if (test_set_ &&
        (test_set_->feature_dim() != train_.feature_dim() ||
         test_set_->num_classes() != train_.num_classes()))
        throw ValidationError("test set shape does not match the training data");
    pos_of_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) pos_of_.emplace(ids_[i], i);
    model_ = make_model(train_.feature_dim(), config_.hidden_dim, train_.num_classes(),
                        config_.seed);
}

std::vector<std::vector<std::size_t>> Trainer::make_batches(std::uint32_t epoch) const {
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(derive_seed(config_.seed, stream::kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config_.batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

double Trainer::evaluate_test_accuracy() const {
    return test_set_ ? evaluate_accuracy(model_, *test_set_) : 0.0;
}

void Trainer::track_sample(std::size_t pos, const Model& net, Rng& weak_rng) {
    const std::vector<double> view = weak(config_.augment, train_.features(pos), weak_rng);
    const std::vector<double> p = forward(net, view);
    trackers_.ema_update(ids_[pos], p, config_.ema_coefficient);
    trackers_.accumulate_margins(ids_[pos]);
}

EpochReport Trainer::warmup_epoch(std::uint32_t epoch) {
    const double lr = epoch_learning_rate(config_, epoch);
    Rng weak_rng = make_rng(derive_seed(config_.seed, stream::kWeak, epoch));
    const auto batches = make_batches(epoch);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (const auto& batch : batches) {
        std::vector<std::vector<double>> xs;
        std::vector<std::vector<double>> ys;
        xs.reserve(batch.size());
        ys.reserve(batch.size());
        for (std::size_t pos : batch) {
            const auto f = train_.features(pos);
            xs.emplace_back(f.begin(), f.end());
            ys.push_back(one_hot(train_.label(pos), train_.num_classes()));
        }
        const std::vector<double> w(batch.size(), 1.0);
        auto [l_ce, g] = soft_ce_loss_and_grad(model_, xs, ys, w);
        auto [l_cp, g_cp] = entropy_loss_and_grad(model_, xs);
        add_scaled(g, g_cp, 1.0);
        sgd_step(model_, g, lr, config_.momentum, config_.weight_decay);
        ++steps_;
        const double total = l_ce + l_cp;
        loss_sum += total;
        if (on_batch_) on_batch_({epoch, batch_index, batch.size(), l_ce, l_cp, 1.0, total});
        ++batch_index;
    }

    // End-of-epoch tracking pass over every sample, in storage order, with the
    // weights frozen after the last step of this epoch.
    const Model snapshot = model_;
    for (std::size_t pos = 0; pos < train_.size(); ++pos) track_sample(pos, snapshot, weak_rng);

    EpochReport r;
    r.epoch = epoch;
    r.stage = Stage::warmup;
    r.mean_train_loss = loss_sum / static_cast<double>(batches.size());
    r.test_accuracy = evaluate_test_accuracy();
    r.per_class_clean_counts.assign(train_.num_classes(), 0);
    r.learning_rate = lr;
    return r;
}

EpochReport Trainer::robust_epoch(std::uint32_t epoch) {
    const double lr = epoch_learning_rate(config_, epoch);
    Rng weak_rng = make_rng(derive_seed(config_.seed, stream::kWeak, epoch));
    Rng strong_rng = make_rng(derive_seed(config_.seed, stream::kStrong, epoch));
    Rng mix_rng = make_rng(derive_seed(config_.seed, stream::kMix, epoch));

    // Selection and mixing confidences both come from this frozen epoch-start
    // snapshot; the live model keeps moving underneath it.
    const Model snapshot = model_;
    std::vector<LossRecord> records = compute_losses(snapshot, train_);
    normalize(records);
    const Partition part = select(records, rho_, train_.num_classes());

    std::vector<char> is_clean(train_.size(), 0);
    for (std::uint64_t id : part.clean_ids) is_clean[pos_of_.at(id)] = 1;

    // Mask decision for the whole epoch, taken from the tracker state as it
    // stood when the epoch began.
    std::vector<char> is_kept(train_.size(), 0);
    double masked_fraction = 0.0;
    if (!part.noisy_ids.empty()) {
        const MaskDecision mask = decide_mask(trackers_, part.noisy_ids, config_.mask_tau);
        for (std::uint64_t id : mask.kept_ids) is_kept[pos_of_.at(id)] = 1;
        masked_fraction = static_cast<double>(mask.masked_ids.size()) /
                          static_cast<double>(part.noisy_ids.size());
    }

    OracleMetrics oracle;
    if (on_partition_) oracle = on_partition_(epoch, part);

    const auto batches = make_batches(epoch);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (const auto& batch : batches) {
        std::vector<std::size_t> clean_pos;
        std::vector<std::size_t> kept_pos;
        for (std::size_t pos : batch) {
            if (is_clean[pos]) clean_pos.push_back(pos);
            if (is_kept[pos]) kept_pos.push_back(pos);
        }

        double l_dc = 0.0;
        Gradients g = zero_gradients(model_);
        const std::vector<MixedSample> mixed =
            augment_clean_batch(train_, clean_pos, snapshot, config_.mix_phi, mix_rng);
        if (!mixed.empty()) {
            std::vector<std::vector<double>> xs;
            std::vector<std::vector<double>> ys;
            xs.reserve(mixed.size());
            ys.reserve(mixed.size());
            for (const MixedSample& ms : mixed) {
                xs.push_back(ms.features);
                ys.push_back(ms.soft_label);
            }
            const std::vector<double> w(mixed.size(), 1.0);
            auto [l, grad] = soft_ce_loss_and_grad(model_, xs, ys, w);
            l_dc = l;
            g = std::move(grad);
        }

        // Label/margin tracking for every member of the batch against the
        // live model, before the step below moves it.
        for (std::size_t pos : batch) track_sample(pos, model_, weak_rng);

        auto [l_reg, g_reg] =
            consistency_loss(model_, train_, kept_pos, trackers_, config_.augment, strong_rng);
        add_scaled(g, g_reg, config_.loss_weight);
        sgd_step(model_, g, lr, config_.momentum, config_.weight_decay);
        ++steps_;
        const double total = l_dc + config_.loss_weight * l_reg;
        loss_sum += total;
        if (on_batch_)
            on_batch_({epoch, batch_index, batch.size(), l_dc, l_reg, config_.loss_weight, total});
        ++batch_index;
    }

    EpochReport r;
    r.epoch = epoch;
    r.stage = Stage::robust;
    r.mean_train_loss = loss_sum / static_cast<double>(batches.size());
    r.test_accuracy = evaluate_test_accuracy();
    r.selection_precision = oracle.precision;
    r.selection_recall = oracle.recall;
    r.per_class_clean_counts = part.per_class_quota;
    r.masked_fraction = masked_fraction;
    r.learning_rate = lr;
    return r;
}

EpochReport Trainer::standard_epoch(std::uint32_t epoch) {
    const double lr = epoch_learning_rate(config_, epoch);
    const auto batches = make_batches(epoch);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (const auto& batch : batches) {
        std::vector<std::vector<double>> xs;
        std::vector<std::vector<double>> ys;
        xs.reserve(batch.size());
        ys.reserve(batch.size());
        for (std::size_t pos : batch) {
            const auto f = train_.features(pos);
            xs.emplace_back(f.begin(), f.end());
            ys.push_back(one_hot(train_.label(pos), train_.num_classes()));
        }
        const std::vector<double> w(batch.size(), 1.0);
        auto [l, g] = soft_ce_loss_and_grad(model_, xs, ys, w);
        sgd_step(model_, g, lr, config_.momentum, config_.weight_decay);
        ++steps_;
        loss_sum += l;
        if (on_batch_) on_batch_({epoch, batch_index, batch.size(), l, 0.0, 0.0, l});
        ++batch_index;
    }

    EpochReport r;
    r.epoch = epoch;
    r.stage = epoch <= config_.warmup_epochs ? Stage::warmup : Stage::robust;
    r.mean_train_loss = loss_sum / static_cast<double>(batches.size());
    r.test_accuracy = evaluate_test_accuracy();
    r.per_class_clean_counts.assign(train_.num_classes(), 0);
    r.learning_rate = lr;
    return r;
}

EpochReport Trainer::run_epoch() {
    if (epoch_ >= config_.total_epochs)
        throw ValidationError("all configured epochs have already run");
    const std::uint32_t epoch = epoch_ + 1;
    EpochReport r;
    if (method_ == Method::standard)
        r = standard_epoch(epoch);
    else if (epoch <= config_.warmup_epochs)
        r = warmup_epoch(epoch);
    else
        r = robust_epoch(epoch);
    epoch_ = epoch;
    return r;
}

std::vector<EpochReport> Trainer::run() {
    std::vector<EpochReport> reports;
    reports.reserve(config_.total_epochs - epoch_);
    while (epoch_ < config_.total_epochs) reports.push_back(run_epoch());
    return reports;
}

}  // namespace cbs
