#pragma once

#include <cstdint>
#include <vector>

#include "cbs/dataset.hpp"
#include "cbs/model.hpp"

namespace cbs {

/// Per-sample loss snapshot used by the class-balanced selection step.
struct LossRecord {
    std::uint64_t sample_id = 0;
    double raw_loss = 0.0;         // -log p(observed class), >= 0
    double normalized_loss = 0.0;  // min-max over the whole record list, in [0, 1]
    std::uint32_t observed_class = 0;
};

/// Disjoint clean/noisy split of the training ids plus the per-class quotas
/// that produced it. Id vectors are sorted ascending.
struct Partition {
    std::vector<std::uint64_t> clean_ids;
    std::vector<std::uint64_t> noisy_ids;
    std::vector<std::size_t> per_class_quota;
};

/// One record per training sample, evaluated on a frozen model snapshot.
/// No parameter updates happen here.
std::vector<LossRecord> compute_losses(const Model& snapshot, const TrainView& data);

/// Min-max normalization over the full list: (l - min)/(max - min), or all
/// zeros when every raw loss is identical.
void normalize(std::vector<LossRecord>& records);

/// Class-balanced small-loss selection. Per observed class i the quota is
/// delta_i = min(floor(rho*N/C), |class i|) and the delta_i smallest
/// normalized losses of that class go to clean_ids, ties broken by ascending
/// sample_id. Unused tail quota is not redistributed to other classes.
Partition select(const std::vector<LossRecord>& records, double rho, std::uint32_t num_classes);

/// Oracle evaluation of a partition against ground truth. Precision is the
/// fraction of selected ids whose observed label is correct; recall is the
/// fraction of all correctly-labeled samples that were selected. Both are 0
/// when their denominator is empty.
struct SelectionQuality {
    double precision = 0.0;
    double recall = 0.0;
    std::vector<std::size_t> per_class_clean_counts;  // by observed class
};

SelectionQuality selection_quality(const Partition& partition, const Dataset& with_truth);

}  // namespace cbs
