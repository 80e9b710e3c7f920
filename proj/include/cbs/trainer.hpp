#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbs/augment.hpp"
#include "cbs/correction.hpp"
#include "cbs/dataset.hpp"
#include "cbs/model.hpp"
#include "cbs/selection.hpp"

namespace cbs {

/// "ours" is the full pipeline: entropy-regularized warm-up, then per-epoch
/// class-balanced selection, confidence-weighted mixing of the clean subset,
/// EMA label correction with margin masking, and a consistency term on the
/// kept noisy samples. "standard" trains plain cross-entropy on the observed
/// labels for every epoch with the identical model, optimizer, batch order
/// and learning-rate schedule.
enum class Method { ours, standard };

struct RunConfig {
    std::uint32_t warmup_epochs = 15;   // T_w, >= 1
    std::uint32_t total_epochs = 60;    // >= warmup_epochs; equality = pure warm-up
    std::uint32_t batch_size = 128;
    double initial_lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0;
    double selection_ratio = -1.0;      // rho in (0, 1]; negative resolves to 1 - noise_rate
    double noise_rate = 0.0;            // eta assumed by the method (not read from truth)
    double mix_phi = 4.0;               // Beta(phi, phi) mixing parameter
    double mask_tau = 0.2;              // threshold interpolation fraction
    double ema_coefficient = 0.9;       // label EMA; first update adopts the prediction
    double loss_weight = 1.0;           // weight of the consistency term
    std::uint32_t hidden_dim = 64;
    AugmentConfig augment;
    std::uint64_t seed = 1;
};

void validate_run_config(const RunConfig& config);

/// rho actually used: selection_ratio if positive, else 1 - noise_rate.
double resolved_selection_ratio(const RunConfig& config);

/// Learning rate for a 1-based epoch: constant through warm-up, cosine decay
/// across the robust stage.
double epoch_learning_rate(const RunConfig& config, std::uint32_t epoch);

enum class Stage { warmup, robust };

const char* stage_name(Stage s);

struct EpochReport {
    std::uint32_t epoch = 0;  // 1-based
    Stage stage = Stage::warmup;
    double mean_train_loss = 0.0;  // equal-weight mean of per-batch totals
    double test_accuracy = 0.0;    // 0 when no test set was supplied
    double selection_precision = 0.0;  // oracle metrics, via callback; 0 when n/a
    double selection_recall = 0.0;
    std::vector<std::size_t> per_class_clean_counts;  // zeros outside robust epochs
    double masked_fraction = 0.0;  // masked / |noisy subset|; 0 when n/a
    double learning_rate = 0.0;
};

/// Per-batch loss decomposition, total = primary + secondary_weight*secondary.
/// During warm-up primary/secondary are L_ce/L_cp (weight 1); during robust
/// epochs they are the mixed clean loss and the consistency loss.
struct BatchStats {
    std::uint32_t epoch = 0;
    std::size_t batch_index = 0;
    std::size_t batch_count = 0;
    double loss_primary = 0.0;
    double loss_secondary = 0.0;
    double secondary_weight = 0.0;
    double loss_total = 0.0;
};

struct OracleMetrics {
    double precision = 0.0;
    double recall = 0.0;
};

/// The trainer itself never sees ground truth; a caller holding the full
/// dataset may compute oracle selection metrics from the partition and feed
/// them back for reporting.
using PartitionCallback = std::function<OracleMetrics(std::uint32_t epoch, const Partition&)>;
using BatchCallback = std::function<void(const BatchStats&)>;

class Trainer {
public:
    /// The views must outlive the trainer. test_set, when given, must match
    /// the training data's feature_dim and num_classes; its labels are
    /// assumed clean.
    Trainer(const RunConfig& config, TrainView train, const Dataset* test_set = nullptr,
            Method method = Method::ours);

    void on_partition(PartitionCallback cb) { on_partition_ = std::move(cb); }
    void on_batch(BatchCallback cb) { on_batch_ = std::move(cb); }

    /// Advances one epoch. Throws once all configured epochs have run.
    EpochReport run_epoch();

    /// Runs every remaining epoch and returns their reports.
    std::vector<EpochReport> run();

    const Model& model() const { return model_; }
    const SampleTrackers& trackers() const { return trackers_; }
    Method method() const { return method_; }
    std::uint32_t completed_epochs() const { return epoch_; }
    std::uint64_t optimizer_steps() const { return steps_; }

private:
    std::vector<std::vector<std::size_t>> make_batches(std::uint32_t epoch) const;
    double evaluate_test_accuracy() const;
    void track_sample(std::size_t pos, const Model& net, Rng& weak_rng);
    EpochReport warmup_epoch(std::uint32_t epoch);
    EpochReport robust_epoch(std::uint32_t epoch);
    EpochReport standard_epoch(std::uint32_t epoch);

    RunConfig config_;
    double rho_ = 1.0;
    TrainView train_;
    const Dataset* test_set_ = nullptr;
    Method method_ = Method::ours;
    Model model_;
    std::vector<std::uint64_t> ids_;  // position -> sample id
    std::unordered_map<std::uint64_t, std::size_t> pos_of_;
    SampleTrackers trackers_;
    std::uint32_t epoch_ = 0;         // completed epochs
    std::uint64_t steps_ = 0;
    PartitionCallback on_partition_;
    BatchCallback on_batch_;
};

/// Plain argmax accuracy of a model on a labeled dataset.
double evaluate_accuracy(const Model& m, const Dataset& ds);

}  // namespace cbs
