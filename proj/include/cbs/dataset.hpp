#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cbs {

struct Sample {
    std::uint64_t id = 0;
    std::vector<double> features;      // length d, finite, f32-representable
    std::uint32_t observed_label = 0;  // possibly corrupted, in [0, C)
    std::uint32_t true_label = 0;      // hidden ground truth, evaluation only
};

/// Parameters of a synthetic imbalanced blob dataset. Class i receives
/// round(base_count * mu^i) samples with mu = imbalance_factor^(-1/(C-1)),
/// so max(n_i)/min(n_i) equals the imbalance factor at the endpoints.
struct DatasetSpec {
    std::uint32_t num_classes = 10;
    std::uint32_t base_count = 500;  // n_0, head-class sample count
    double imbalance_factor = 1.0;   // max(n_i)/min(n_i), >= 1
    double noise_rate = 0.0;         // label corruption probability, in [0, 1)
    std::uint32_t feature_dim = 16;
    double class_separation = 4.0;   // pairwise centroid distance, in noise stds
    std::uint64_t seed = 0;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::uint32_t num_classes, std::uint32_t feature_dim, std::vector<Sample> samples);

    std::uint32_t num_classes() const { return num_classes_; }
    std::uint32_t feature_dim() const { return feature_dim_; }
    std::size_t size() const { return samples_.size(); }
    const Sample& sample(std::size_t i) const { return samples_[i]; }
    const std::vector<Sample>& samples() const { return samples_; }

private:
    std::uint32_t num_classes_ = 0;
    std::uint32_t feature_dim_ = 0;
    std::vector<Sample> samples_;
};

/// Read-only view of a dataset that hides the ground-truth labels. The
/// training pipeline accepts only this type; code holding a TrainView has
/// no way to reach Sample::true_label.
class TrainView {
public:
    explicit TrainView(const Dataset& ds) : ds_(&ds) {}

    std::size_t size() const { return ds_->size(); }
    std::uint32_t num_classes() const { return ds_->num_classes(); }
    std::uint32_t feature_dim() const { return ds_->feature_dim(); }
    std::uint64_t id(std::size_t i) const { return ds_->sample(i).id; }
    std::span<const double> features(std::size_t i) const { return ds_->sample(i).features; }
    std::uint32_t label(std::size_t i) const { return ds_->sample(i).observed_label; }

private:
    const Dataset* ds_;
};

/// mu = IF^(-1/(C-1)); 1 exactly when IF = 1.
double decay_ratio(std::uint32_t num_classes, double imbalance_factor);

/// Per-class sample counts round(n_0 * mu^i). Throws ValidationError when a
/// count rounds below 1 (imbalance factor too large for the base count).
std::vector<std::size_t> planned_class_counts(const DatasetSpec& spec);

/// Smallest base count whose planned total reaches target_total (the planned
/// total is monotone in n_0). Convenience for "give me ~N samples total".
std::uint32_t base_count_for_total(std::uint32_t num_classes, double imbalance_factor,
                                   std::uint64_t target_total);

/// Gaussian blobs around class centroids at pairwise distance >=
/// class_separation (exactly equal for C <= d, where centroids sit on a
/// scaled coordinate basis). Labels are uncorrupted: observed == true.
/// Features are quantized to f32 so the on-disk format round-trips exactly.
Dataset generate_blobs(const DatasetSpec& spec);

/// Flip each observed label with probability eta to a uniformly random
/// *other* class. Features and true labels are untouched.
Dataset inject_uniform_noise(const Dataset& ds, double eta, std::uint64_t seed);

/// Balanced clean evaluation split drawn around the same centroids as
/// generate_blobs(train_spec): per_class samples per class, IF = 1, eta = 0,
/// from a sample-noise stream disjoint from the training draws.
Dataset make_test_split(const DatasetSpec& train_spec, std::uint32_t per_class = 100);

/// Counts by observed label; sums to size().
std::vector<std::size_t> class_counts(const Dataset& ds);

// ---------------------------------------------------------------------------
// Persistence.
//
// Binary layout (little-endian):
//   magic "CBSD" | u32 version | u32 C | u32 d | u64 N
//   then N records: u64 id | u32 observed | u32 true | d x f32 | u32 crc32
// where the crc32 covers the preceding record bytes. Load verifies magic,
// version, every record checksum, and label ranges.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Inspection export: header "id,observed,true,f0..f{d-1}".
void save_csv(const Dataset& ds, const std::string& path);

}  // namespace cbs
