#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbs/dataset.hpp"
#include "cbs/model.hpp"
#include "cbs/trainer.hpp"

namespace cbs {

const char* method_name(Method m);
Method parse_method(const std::string& name);

/// Training set a spec describes: blobs, plus uniform label noise when
/// spec.noise_rate > 0 (noise stream derived from spec.seed).
Dataset make_train_set(const DatasetSpec& spec);

/// One epoch as a single JSON object on one line; field order is fixed so
/// identical runs serialize byte-identically.
std::string report_json_line(const EpochReport& r, Method method);

struct SingleRunResult {
    std::vector<EpochReport> reports;
    Model model;
};

/// Runs one training job start to finish. Every epoch report is appended to
/// log (when non-null) as a JSON line. with_oracle fills selection
/// precision/recall from the dataset's ground truth; the trainer itself only
/// ever sees the observed-label view.
SingleRunResult run_experiment(const RunConfig& config, const Dataset& train,
                               const Dataset* test, Method method, std::ostream* log,
                               bool with_oracle = true);

double last_k_mean_accuracy(const std::vector<EpochReport>& reports, std::size_t k);
double best_accuracy(const std::vector<EpochReport>& reports);

struct GridSpec {
    std::vector<double> imbalance_factors{1.0, 10.0, 50.0};
    std::vector<double> noise_rates{0.0, 0.2, 0.4};
    std::uint32_t repetitions = 1;
    std::uint32_t test_per_class = 100;
    std::uint64_t target_total = 0;  // when > 0, base_count per cell solves for this N
    DatasetSpec base;                // imbalance/noise/seed overridden per cell
    RunConfig config;                // noise_rate/seed overridden per cell
};

struct CellResult {
    double imbalance_factor = 1.0;
    double noise_rate = 0.0;
    Method method = Method::ours;
    double acc_last10 = 0.0;
    double acc_best = 0.0;
    double sel_precision_final = 0.0;
    double masked_frac_final = 0.0;
    bool failed = false;
    std::string error;
};

/// Paired grid: per (IF, eta) cell both methods train on the byte-identical
/// dataset. Failures are recorded in the cell row and the grid continues.
/// Metrics are averaged over repetitions.
std::vector<CellResult> run_grid(const GridSpec& grid, std::ostream* progress);

void write_grid_csv(const std::vector<CellResult>& cells, std::ostream& out);

/// Human-readable accuracy table (percent) with an ours-minus-standard delta
/// column per cell.
void write_grid_table(const std::vector<CellResult>& cells, std::ostream& out);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;       // by observed label
    std::vector<std::size_t> per_class_counts;    // by observed label
    std::vector<std::vector<std::size_t>> confusion;  // [observed][predicted]
};

EvalResult evaluate_model(const Model& m, const Dataset& ds);

void write_confusion_csv(const EvalResult& r, std::ostream& out);

}  // namespace cbs
