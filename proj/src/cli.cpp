#include "cbs/cli.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cbs/config.hpp"
#include "cbs/errors.hpp"
#include "cbs/experiment.hpp"
#include "cbs/selection.hpp"

namespace cbs::cli {
namespace {

void print_class_counts(const Dataset& ds) {
    std::cout << "class counts (observed):";
    for (const std::size_t c : class_counts(ds)) std::cout << ' ' << c;
    std::cout << '\n';
}

void setup_generate(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "synthesize a labeled blob dataset file");
    auto spec = std::make_shared<DatasetSpec>();
    auto out = std::make_shared<std::string>();
    auto test_out = std::make_shared<std::string>();
    auto csv_out = std::make_shared<std::string>();
    auto per_class = std::make_shared<std::uint32_t>(100);
    cmd->add_option("--out", *out, "output dataset path")->required();
    cmd->add_option("--classes", spec->num_classes, "number of classes");
    cmd->add_option("--base", spec->base_count, "head class sample count");
    cmd->add_option("--if", spec->imbalance_factor, "imbalance factor (head/tail ratio)");
    cmd->add_option("--noise", spec->noise_rate, "uniform label noise rate");
    cmd->add_option("--dim", spec->feature_dim, "feature dimension");
    cmd->add_option("--separation", spec->class_separation, "centroid separation");
    cmd->add_option("--seed", spec->seed, "generation seed");
    cmd->add_option("--test-out", *test_out, "also write a balanced clean test split");
    cmd->add_option("--per-class", *per_class, "test split samples per class");
    cmd->add_option("--csv", *csv_out, "also dump the training set as CSV");
    cmd->callback([spec, out, test_out, csv_out, per_class] {
        const Dataset train = make_train_set(*spec);
        save_dataset(train, *out);
        std::cout << "wrote " << *out << ": N=" << train.size() << " C=" << train.num_classes()
                  << " d=" << train.feature_dim() << " noise=" << spec->noise_rate << '\n';
        print_class_counts(train);
        if (!csv_out->empty()) {
            save_csv(train, *csv_out);
            std::cout << "wrote " << *csv_out << '\n';
        }
        if (!test_out->empty()) {
            const Dataset test = make_test_split(*spec, *per_class);
            save_dataset(test, *test_out);
            std::cout << "wrote " << *test_out << ": N=" << test.size()
                      << " (balanced clean test split)\n";
        }
    });
}

struct TrainArgs {
    std::string config_path, data_path, test_path, log_path, checkpoint_path;
    std::string method = "ours";
    bool dry_run = false;
    bool no_oracle = false;
    RunConfig flags;  // staging area for field overrides
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
};

void apply_overrides(const TrainArgs& a, RunConfig& cfg) {
    for (const auto& [o, apply] : a.overrides)
        if (o->count() > 0) apply(cfg);
}

void setup_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train one model on a dataset file");
    auto a = std::make_shared<TrainArgs>();
    cmd->add_option("--config", a->config_path, "key = value run config file");
    cmd->add_option("--data", a->data_path, "training dataset file");
    cmd->add_option("--test", a->test_path, "clean test dataset file");
    cmd->add_option("--method", a->method, "ours | standard")
        ->check(CLI::IsMember({"ours", "standard"}));
    cmd->add_option("--log", a->log_path, "append one JSON line per epoch here");
    cmd->add_option("--checkpoint", a->checkpoint_path, "write the final model here");
    cmd->add_flag("--dry-run", a->dry_run,
                  "validate the config, print resolved hyperparameters and exit");
    cmd->add_flag("--no-oracle", a->no_oracle,
                  "skip ground-truth selection metrics in the logs");

    RunConfig& f = a->flags;
    auto opt = [&](const char* name, auto& slot, const char* desc, auto member) {
        CLI::Option* o = cmd->add_option(name, slot, desc);
        a->overrides.emplace_back(o, [&slot, member](RunConfig& c) { c.*member = slot; });
    };
    opt("--warmup_epochs", f.warmup_epochs, "warm-up epochs", &RunConfig::warmup_epochs);
    opt("--total_epochs", f.total_epochs, "total epochs", &RunConfig::total_epochs);
    opt("--batch_size", f.batch_size, "mini-batch size", &RunConfig::batch_size);
    opt("--initial_lr", f.initial_lr, "initial learning rate", &RunConfig::initial_lr);
    opt("--momentum", f.momentum, "SGD momentum", &RunConfig::momentum);
    opt("--weight_decay", f.weight_decay, "L2 weight decay", &RunConfig::weight_decay);
    opt("--selection_ratio", f.selection_ratio, "selection ratio rho (negative = 1 - noise_rate)",
        &RunConfig::selection_ratio);
    opt("--noise_rate", f.noise_rate, "assumed label noise rate", &RunConfig::noise_rate);
    opt("--mix_phi", f.mix_phi, "beta mixing parameter", &RunConfig::mix_phi);
    opt("--mask_tau", f.mask_tau, "mask threshold fraction", &RunConfig::mask_tau);
    opt("--ema_coefficient", f.ema_coefficient, "label EMA coefficient",
        &RunConfig::ema_coefficient);
    opt("--loss_weight", f.loss_weight, "consistency loss weight", &RunConfig::loss_weight);
    opt("--hidden_dim", f.hidden_dim, "hidden layer width", &RunConfig::hidden_dim);
    opt("--seed", f.seed, "training seed", &RunConfig::seed);
    // augmentation fields live one level down
    auto aug = [&](const char* name, double AugmentConfig::*member, double& slot,
                   const char* desc) {
        CLI::Option* o = cmd->add_option(name, slot, desc);
        a->overrides.emplace_back(o, [&slot, member](RunConfig& c) { c.augment.*member = slot; });
    };
    aug("--weak_sigma", &AugmentConfig::weak_sigma, f.augment.weak_sigma,
        "weak view jitter sigma");
    aug("--strong_sigma", &AugmentConfig::strong_sigma, f.augment.strong_sigma,
        "strong view jitter sigma");
    aug("--strong_mask_prob", &AugmentConfig::strong_mask_prob, f.augment.strong_mask_prob,
        "strong view coordinate mask probability");

    cmd->callback([a] {
        RunConfig cfg = a->config_path.empty() ? RunConfig{} : load_run_config(a->config_path);
        apply_overrides(*a, cfg);
        validate_run_config(cfg);
        if (a->dry_run) {
            for (const auto& [k, v] : config_key_values(cfg))
                std::cout << k << " = " << v << '\n';
            std::cout << "method = " << a->method << '\n';
            return;
        }
        if (a->data_path.empty())
            throw CLI::RequiredError("--data");
        const Dataset train = load_dataset(a->data_path);
        std::optional<Dataset> test;
        if (!a->test_path.empty()) test = load_dataset(a->test_path);

        std::ofstream log_file;
        std::ostream* log = nullptr;
        if (!a->log_path.empty()) {
            log_file.open(a->log_path, std::ios::app);
            if (!log_file) throw IoError("cannot open log file: " + a->log_path);
            log = &log_file;
        }

        const Method method = parse_method(a->method);
        const SingleRunResult res = run_experiment(cfg, train, test ? &*test : nullptr, method,
                                                   log, !a->no_oracle);
        for (const auto& r : res.reports) {
            std::cout << "epoch " << std::setw(3) << r.epoch << " [" << stage_name(r.stage)
                      << "] loss=" << std::fixed << std::setprecision(4) << r.mean_train_loss;
            if (test) std::cout << " acc=" << std::setprecision(4) << r.test_accuracy;
            if (r.stage == Stage::robust && method == Method::ours)
                std::cout << " sel_prec=" << std::setprecision(3) << r.selection_precision
                          << " masked=" << std::setprecision(3) << r.masked_fraction;
            std::cout << '\n';
        }
        std::cout << "final: last10=" << std::setprecision(4)
                  << last_k_mean_accuracy(res.reports, 10)
                  << " best=" << best_accuracy(res.reports) << '\n';
        if (!a->checkpoint_path.empty()) {
            save_checkpoint(res.model, cfg.total_epochs, a->checkpoint_path);
            std::cout << "wrote " << a->checkpoint_path << '\n';
        }
    });
}

void setup_grid(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "grid", "paired ours-vs-standard sweep over imbalance x noise cells");
    auto grid = std::make_shared<GridSpec>();
    auto cfg_path = std::make_shared<std::string>();
    auto csv_path = std::make_shared<std::string>();
    auto table_path = std::make_shared<std::string>();
    cmd->add_option("--ifs", grid->imbalance_factors, "imbalance factors")->delimiter(',');
    cmd->add_option("--noises", grid->noise_rates, "noise rates")->delimiter(',');
    cmd->add_option("--reps", grid->repetitions, "repetitions per cell");
    cmd->add_option("--classes", grid->base.num_classes, "number of classes");
    cmd->add_option("--base", grid->base.base_count, "head class sample count");
    cmd->add_option("--total", grid->target_total,
                    "solve the base count per cell for this total N");
    cmd->add_option("--dim", grid->base.feature_dim, "feature dimension");
    cmd->add_option("--separation", grid->base.class_separation, "centroid separation");
    cmd->add_option("--data-seed", grid->base.seed, "dataset seed");
    cmd->add_option("--per-class", grid->test_per_class, "test split samples per class");
    cmd->add_option("--config", *cfg_path, "run config file applied to every cell");
    cmd->add_option("--out-csv", *csv_path, "write the result table as CSV here");
    cmd->add_option("--table", *table_path, "write the human-readable table here");
    cmd->callback([grid, cfg_path, csv_path, table_path] {
        if (!cfg_path->empty()) grid->config = load_run_config(*cfg_path);
        const std::vector<CellResult> cells = run_grid(*grid, &std::cout);
        if (!csv_path->empty()) {
            std::ofstream out(*csv_path);
            if (!out) throw IoError("cannot open csv output: " + *csv_path);
            write_grid_csv(cells, out);
            std::cout << "wrote " << *csv_path << '\n';
        } else {
            write_grid_csv(cells, std::cout);
        }
        if (!table_path->empty()) {
            std::ofstream out(*table_path);
            if (!out) throw IoError("cannot open table output: " + *table_path);
            write_grid_table(cells, out);
            std::cout << "wrote " << *table_path << '\n';
        } else {
            write_grid_table(cells, std::cout);
        }
    });
}

void setup_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset file");
    auto ckpt = std::make_shared<std::string>();
    auto data = std::make_shared<std::string>();
    auto confusion = std::make_shared<std::string>();
    auto oracle_rho = std::make_shared<double>(0.0);
    cmd->add_option("--checkpoint", *ckpt, "checkpoint path")->required();
    cmd->add_option("--data", *data, "dataset path")->required();
    cmd->add_option("--confusion", *confusion, "write the confusion matrix CSV here");
    cmd->add_option("--oracle-rho", *oracle_rho,
                    "also run small-loss selection at this rho and report its quality "
                    "against ground truth");
    cmd->callback([ckpt, data, confusion, oracle_rho] {
        const Checkpoint cp = load_checkpoint(*ckpt);
        const Dataset ds = load_dataset(*data);
        const EvalResult res = evaluate_model(cp.model, ds);
        std::cout << "accuracy " << std::fixed << std::setprecision(4) << res.accuracy
                  << " on N=" << ds.size() << " (checkpoint epoch " << cp.epoch << ")\n";
        double weighted = 0.0;
        for (std::size_t c = 0; c < res.per_class_accuracy.size(); ++c) {
            std::cout << "class " << c << ": acc=" << std::setprecision(4)
                      << res.per_class_accuracy[c] << " n=" << res.per_class_counts[c] << '\n';
            weighted += res.per_class_accuracy[c] * static_cast<double>(res.per_class_counts[c]);
        }
        if (ds.size() > 0)
            std::cout << "count-weighted per-class mean " << std::setprecision(4)
                      << weighted / static_cast<double>(ds.size()) << '\n';
        if (!confusion->empty()) {
            std::ofstream out(*confusion);
            if (!out) throw IoError("cannot open confusion output: " + *confusion);
            write_confusion_csv(res, out);
            std::cout << "wrote " << *confusion << '\n';
        }
        if (*oracle_rho > 0.0) {
            std::vector<LossRecord> records = compute_losses(cp.model, TrainView(ds));
            normalize(records);
            const Partition part = select(records, *oracle_rho, ds.num_classes());
            const SelectionQuality q = selection_quality(part, ds);
            std::cout << "selection at rho=" << *oracle_rho << ": precision="
                      << std::setprecision(4) << q.precision << " recall=" << q.recall
                      << " selected=" << part.clean_ids.size() << '\n';
        }
    });
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"training pipeline for imbalanced data with noisy labels"};
    app.require_subcommand(1);
    setup_generate(app);
    setup_train(app);
    setup_grid(app);
    setup_eval(app);

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.emplace_back("cbs");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(argv_store.size());
    for (const std::string& s : argv_store) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace cbs::cli
