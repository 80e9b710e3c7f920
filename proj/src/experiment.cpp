#include "cbs/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "cbs/errors.hpp"
#include "cbs/rng.hpp"
#include "cbs/selection.hpp"

namespace cbs {
namespace {

std::string fmt(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string percent(double fraction) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * fraction;
    return os.str();
}

}  // namespace

const char* method_name(Method m) { return m == Method::ours ? "ours" : "standard"; }

Method parse_method(const std::string& name) {
    if (name == "ours") return Method::ours;
    if (name == "standard") return Method::standard;
    throw ValidationError("unknown method '" + name + "' (expected ours or standard)");
}

Dataset make_train_set(const DatasetSpec& spec) {
    Dataset ds = generate_blobs(spec);
    if (spec.noise_rate > 0.0) ds = inject_uniform_noise(ds, spec.noise_rate, spec.seed);
    return ds;
}

std::string report_json_line(const EpochReport& r, Method method) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["stage"] = stage_name(r.stage);
    j["method"] = method_name(method);
    j["learning_rate"] = r.learning_rate;
    j["mean_train_loss"] = r.mean_train_loss;
    j["test_accuracy"] = r.test_accuracy;
    j["selection_precision"] = r.selection_precision;
    j["selection_recall"] = r.selection_recall;
    j["per_class_clean_counts"] = r.per_class_clean_counts;
    j["masked_fraction"] = r.masked_fraction;
    return j.dump();
}

SingleRunResult run_experiment(const RunConfig& config, const Dataset& train,
                               const Dataset* test, Method method, std::ostream* log,
                               bool with_oracle) {
    Trainer trainer(config, TrainView(train), test, method);
    if (with_oracle && method == Method::ours) {
        trainer.on_partition([&train](std::uint32_t, const Partition& p) {
            const SelectionQuality q = selection_quality(p, train);
            return OracleMetrics{q.precision, q.recall};
        });
    }
    SingleRunResult out;
    while (trainer.completed_epochs() < config.total_epochs) {
        EpochReport r = trainer.run_epoch();
        if (log) *log << report_json_line(r, method) << '\n';
        out.reports.push_back(std::move(r));
    }
    out.model = trainer.model();
    return out;
}

double last_k_mean_accuracy(const std::vector<EpochReport>& reports, std::size_t k) {
    if (reports.empty() || k == 0) return 0.0;
    const std::size_t n = std::min(k, reports.size());
    double sum = 0.0;
    for (std::size_t i = reports.size() - n; i < reports.size(); ++i)
        sum += reports[i].test_accuracy;
    return sum / static_cast<double>(n);
}

double best_accuracy(const std::vector<EpochReport>& reports) {
    double best = 0.0;
    for (const auto& r : reports) best = std::max(best, r.test_accuracy);
    return best;
}

std::vector<CellResult> run_grid(const GridSpec& grid, std::ostream* progress) {
    if (grid.imbalance_factors.empty() || grid.noise_rates.empty())
        throw ValidationError("experiment grid is empty");
    if (grid.repetitions < 1 || grid.repetitions > 1000)
        throw ValidationError("repetitions must be in [1, 1000]");
    validate_run_config(grid.config);

    std::vector<CellResult> cells;
    std::uint64_t cell_index = 0;
    for (const double imb : grid.imbalance_factors) {
        for (const double eta : grid.noise_rates) {
            struct Acc {
                CellResult row;
                double last10 = 0, best = 0, prec = 0, maskf = 0;
            };
            Acc ours{}, standard{};
            ours.row.method = Method::ours;
            standard.row.method = Method::standard;
            for (Acc* a : {&ours, &standard}) {
                a->row.imbalance_factor = imb;
                a->row.noise_rate = eta;
            }

            for (std::uint32_t rep = 0; rep < grid.repetitions; ++rep) {
                const std::uint64_t combo = cell_index * 1000 + rep;
                DatasetSpec spec = grid.base;
                spec.imbalance_factor = imb;
                spec.noise_rate = eta;
                spec.seed = derive_seed(grid.base.seed, stream::kGrid, combo);
                if (grid.target_total > 0)
                    spec.base_count =
                        base_count_for_total(spec.num_classes, imb, grid.target_total);
                const Dataset train = make_train_set(spec);
                const Dataset test = make_test_split(spec, grid.test_per_class);

                RunConfig cfg = grid.config;
                cfg.noise_rate = eta;
                cfg.seed = derive_seed(grid.config.seed, stream::kGrid, combo);

                for (Acc* a : {&ours, &standard}) {
                    if (a->row.failed) continue;
                    try {
                        const SingleRunResult res =
                            run_experiment(cfg, train, &test, a->row.method, nullptr);
                        const double l10 = last_k_mean_accuracy(res.reports, 10);
                        a->last10 += l10;
                        a->best += best_accuracy(res.reports);
                        a->prec += res.reports.back().selection_precision;
                        a->maskf += res.reports.back().masked_fraction;
                        if (progress)
                            *progress << "IF=" << fmt(imb) << " eta=" << fmt(eta)
                                      << " rep=" << rep << ' ' << method_name(a->row.method)
                                      << ": last10=" << fmt(l10) << '\n';
                    } catch (const std::exception& e) {
                        a->row.failed = true;
                        a->row.error = e.what();
                        if (progress)
                            *progress << "IF=" << fmt(imb) << " eta=" << fmt(eta) << ' '
                                      << method_name(a->row.method) << ": FAILED: " << e.what()
                                      << '\n';
                    }
                }
            }

            for (Acc* a : {&ours, &standard}) {
                if (!a->row.failed) {
                    const double reps = static_cast<double>(grid.repetitions);
                    a->row.acc_last10 = a->last10 / reps;
                    a->row.acc_best = a->best / reps;
                    a->row.sel_precision_final = a->prec / reps;
                    a->row.masked_frac_final = a->maskf / reps;
                }
                cells.push_back(a->row);
            }
            ++cell_index;
        }
    }
    return cells;
}

void write_grid_csv(const std::vector<CellResult>& cells, std::ostream& out) {
    out << "if,nr,method,acc_last10,acc_best,sel_precision_final,masked_frac_final\n";
    for (const CellResult& c : cells) {
        out << fmt(c.imbalance_factor) << ',' << fmt(c.noise_rate) << ','
            << method_name(c.method) << ',';
        if (c.failed)
            out << ",,,";
        else
            out << fmt(c.acc_last10) << ',' << fmt(c.acc_best) << ','
                << fmt(c.sel_precision_final) << ',' << fmt(c.masked_frac_final);
        out << '\n';
    }
}

void write_grid_table(const std::vector<CellResult>& cells, std::ostream& out) {
    out << "  IF   eta   ours_last10    std_last10    delta_pts     ours_best      std_best\n";
    for (std::size_t i = 0; i + 1 < cells.size(); i += 2) {
        const CellResult& a = cells[i];
        const CellResult& b = cells[i + 1];
        // rows come in ours/standard pairs per cell
        const CellResult& ours = a.method == Method::ours ? a : b;
        const CellResult& standard = a.method == Method::ours ? b : a;
        out << std::setw(4) << fmt(ours.imbalance_factor) << "  " << std::setw(4)
            << fmt(ours.noise_rate) << "  ";
        if (ours.failed || standard.failed) {
            out << "      failed";
            if (!ours.error.empty())
                out << " (ours: " << ours.error << ')';
            if (!standard.error.empty())
                out << " (standard: " << standard.error << ')';
            out << '\n';
            continue;
        }
        const double delta = 100.0 * (ours.acc_last10 - standard.acc_last10);
        std::ostringstream d;
        d << std::showpos << std::fixed << std::setprecision(2) << delta;
        out << std::setw(11) << percent(ours.acc_last10) << "  " << std::setw(12)
            << percent(standard.acc_last10) << "  " << std::setw(11) << d.str() << "  "
            << std::setw(12) << percent(ours.acc_best) << "  " << std::setw(12)
            << percent(standard.acc_best) << '\n';
    }
}

EvalResult evaluate_model(const Model& m, const Dataset& ds) {
    if (ds.num_classes() != m.out_dim || ds.feature_dim() != m.in_dim)
        throw ValidationError("checkpoint and dataset shapes are incompatible");
    EvalResult r;
    const std::uint32_t C = ds.num_classes();
    r.per_class_accuracy.assign(C, 0.0);
    r.per_class_counts.assign(C, 0);
    r.confusion.assign(C, std::vector<std::size_t>(C, 0));
    std::size_t hits = 0;
    for (const Sample& s : ds.samples()) {
        const std::vector<double> p = forward(m, s.features);
        const std::size_t pred = argmax_low(p);
        r.confusion[s.observed_label][pred] += 1;
        r.per_class_counts[s.observed_label] += 1;
        if (pred == s.observed_label) ++hits;
    }
    if (ds.size() > 0) r.accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
    for (std::uint32_t c = 0; c < C; ++c)
        if (r.per_class_counts[c] > 0)
            r.per_class_accuracy[c] = static_cast<double>(r.confusion[c][c]) /
                                      static_cast<double>(r.per_class_counts[c]);
    return r;
}

void write_confusion_csv(const EvalResult& r, std::ostream& out) {
    out << "observed";
    for (std::size_t p = 0; p < r.confusion.size(); ++p) out << ",pred_" << p;
    out << '\n';
    for (std::size_t c = 0; c < r.confusion.size(); ++c) {
        out << c;
        for (const std::size_t n : r.confusion[c]) out << ',' << n;
        out << '\n';
    }
}

}  // namespace cbs
