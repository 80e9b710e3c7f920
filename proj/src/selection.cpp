#include "cbs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cbs/errors.hpp"

namespace cbs {

std::vector<LossRecord> compute_losses(const Model& snapshot, const TrainView& data) {
    std::vector<LossRecord> records;
    records.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        LossRecord r;
        r.sample_id = data.id(i);
        r.observed_class = data.label(i);
        const auto p = forward(snapshot, data.features(i));
        r.raw_loss = -std::log(std::max(p[r.observed_class], 1e-300));
        records.push_back(r);
    }
    return records;
}

void normalize(std::vector<LossRecord>& records) {
    if (records.empty()) throw ValidationError("normalize needs at least one record");
    double lo = records.front().raw_loss, hi = records.front().raw_loss;
    for (const auto& r : records) {
        lo = std::min(lo, r.raw_loss);
        hi = std::max(hi, r.raw_loss);
    }
    if (hi == lo) {
        for (auto& r : records) r.normalized_loss = 0.0;
        return;
    }
    for (auto& r : records) r.normalized_loss = (r.raw_loss - lo) / (hi - lo);
}

Partition select(const std::vector<LossRecord>& records, double rho, std::uint32_t num_classes) {
    if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("rho must be in (0, 1]");
    if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
    for (const auto& r : records)
        if (r.observed_class >= num_classes)
            throw ValidationError("record class out of range");

    const std::size_t n = records.size();
    // Nudge before flooring so decimal-exact quotas like 0.6*5000/10 do not
    // land one below their real value.
    const auto quota = static_cast<std::size_t>(std::floor(
        rho * static_cast<double>(n) / static_cast<double>(num_classes) + 1e-9));

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < n; ++i) by_class[records[i].observed_class].push_back(i);

    Partition part;
    part.per_class_quota.resize(num_classes);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        auto& idx = by_class[c];
        const std::size_t take = std::min(quota, idx.size());
        part.per_class_quota[c] = take;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (records[a].normalized_loss != records[b].normalized_loss)
                return records[a].normalized_loss < records[b].normalized_loss;
            return records[a].sample_id < records[b].sample_id;
        });
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < take ? part.clean_ids : part.noisy_ids).push_back(records[idx[k]].sample_id);
    }
    std::sort(part.clean_ids.begin(), part.clean_ids.end());
    std::sort(part.noisy_ids.begin(), part.noisy_ids.end());
    return part;
}

SelectionQuality selection_quality(const Partition& partition, const Dataset& with_truth) {
    std::unordered_map<std::uint64_t, std::size_t> index;
    index.reserve(with_truth.size());
    for (std::size_t i = 0; i < with_truth.size(); ++i) index[with_truth.sample(i).id] = i;

    SelectionQuality q;
    q.per_class_clean_counts.assign(with_truth.num_classes(), 0);
    std::size_t correct_selected = 0;
    for (const auto id : partition.clean_ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw ValidationError("partition id not present in dataset");
        const auto& s = with_truth.sample(it->second);
        ++q.per_class_clean_counts[s.observed_label];
        if (s.observed_label == s.true_label) ++correct_selected;
    }
    std::size_t truly_clean = 0;
    for (const auto& s : with_truth.samples())
        if (s.observed_label == s.true_label) ++truly_clean;

    if (!partition.clean_ids.empty())
        q.precision = static_cast<double>(correct_selected) /
                      static_cast<double>(partition.clean_ids.size());
    if (truly_clean > 0)
        q.recall = static_cast<double>(correct_selected) / static_cast<double>(truly_clean);
    return q;
}

}  // namespace cbs
