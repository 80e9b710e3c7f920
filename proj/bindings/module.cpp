#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cbs/correction.hpp"
#include "cbs/dataset.hpp"
#include "cbs/errors.hpp"
#include "cbs/experiment.hpp"
#include "cbs/model.hpp"
#include "cbs/selection.hpp"
#include "cbs/trainer.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Class-balanced sample selection training pipeline (native core)";

    py::register_exception<cbs::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<cbs::IoError>(m, "IoError", PyExc_IOError);

    py::class_<cbs::Sample>(m, "Sample")
        .def(py::init<>())
        .def_readwrite("id", &cbs::Sample::id)
        .def_readwrite("features", &cbs::Sample::features)
        .def_readwrite("observed_label", &cbs::Sample::observed_label)
        .def_readwrite("true_label", &cbs::Sample::true_label);

    py::class_<cbs::DatasetSpec>(m, "DatasetSpec")
        .def(py::init<>())
        .def_readwrite("num_classes", &cbs::DatasetSpec::num_classes)
        .def_readwrite("base_count", &cbs::DatasetSpec::base_count)
        .def_readwrite("imbalance_factor", &cbs::DatasetSpec::imbalance_factor)
        .def_readwrite("noise_rate", &cbs::DatasetSpec::noise_rate)
        .def_readwrite("feature_dim", &cbs::DatasetSpec::feature_dim)
        .def_readwrite("class_separation", &cbs::DatasetSpec::class_separation)
        .def_readwrite("seed", &cbs::DatasetSpec::seed);

    py::class_<cbs::Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_property_readonly("num_classes", &cbs::Dataset::num_classes)
        .def_property_readonly("feature_dim", &cbs::Dataset::feature_dim)
        .def("__len__", &cbs::Dataset::size)
        .def("sample", &cbs::Dataset::sample, py::return_value_policy::reference_internal);

    m.def("decay_ratio", &cbs::decay_ratio);
    m.def("planned_class_counts", &cbs::planned_class_counts);
    m.def("base_count_for_total", &cbs::base_count_for_total);
    m.def("generate_blobs", &cbs::generate_blobs);
    m.def("inject_uniform_noise", &cbs::inject_uniform_noise);
    m.def("make_test_split", &cbs::make_test_split, py::arg("train_spec"),
          py::arg("per_class") = 100);
    m.def("class_counts", &cbs::class_counts);
    m.def("save_dataset", &cbs::save_dataset);
    m.def("load_dataset", &cbs::load_dataset);
    m.def("make_train_set", &cbs::make_train_set);

    // Selection.
    py::class_<cbs::LossRecord>(m, "LossRecord")
        .def(py::init<>())
        .def_readwrite("sample_id", &cbs::LossRecord::sample_id)
        .def_readwrite("raw_loss", &cbs::LossRecord::raw_loss)
        .def_readwrite("normalized_loss", &cbs::LossRecord::normalized_loss)
        .def_readwrite("observed_class", &cbs::LossRecord::observed_class);

    py::class_<cbs::Partition>(m, "Partition")
        .def(py::init<>())
        .def_readwrite("clean_ids", &cbs::Partition::clean_ids)
        .def_readwrite("noisy_ids", &cbs::Partition::noisy_ids)
        .def_readwrite("per_class_quota", &cbs::Partition::per_class_quota);

    py::class_<cbs::SelectionQuality>(m, "SelectionQuality")
        .def_readonly("precision", &cbs::SelectionQuality::precision)
        .def_readonly("recall", &cbs::SelectionQuality::recall)
        .def_readonly("per_class_clean_counts", &cbs::SelectionQuality::per_class_clean_counts);

    m.def("normalize", [](std::vector<cbs::LossRecord> records) {
        cbs::normalize(records);
        return records;
    });
    m.def("select", &cbs::select, py::arg("records"), py::arg("rho"), py::arg("num_classes"));
    m.def("selection_quality", &cbs::selection_quality);

    // Label correction signals.
    m.def("confidence_margin",
          [](const std::vector<double>& y_hat) { return cbs::confidence_margin(y_hat); });
    m.def("compute_threshold", &cbs::compute_threshold, py::arg("acm_values"), py::arg("tau"));
    m.def("cosine_lr", &cbs::cosine_lr, py::arg("initial_lr"), py::arg("t"), py::arg("total"));

    // Training.
    py::class_<cbs::AugmentConfig>(m, "AugmentConfig")
        .def(py::init<>())
        .def_readwrite("weak_sigma", &cbs::AugmentConfig::weak_sigma)
        .def_readwrite("strong_sigma", &cbs::AugmentConfig::strong_sigma)
        .def_readwrite("strong_mask_prob", &cbs::AugmentConfig::strong_mask_prob);

    py::class_<cbs::RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("warmup_epochs", &cbs::RunConfig::warmup_epochs)
        .def_readwrite("total_epochs", &cbs::RunConfig::total_epochs)
        .def_readwrite("batch_size", &cbs::RunConfig::batch_size)
        .def_readwrite("initial_lr", &cbs::RunConfig::initial_lr)
        .def_readwrite("momentum", &cbs::RunConfig::momentum)
        .def_readwrite("weight_decay", &cbs::RunConfig::weight_decay)
        .def_readwrite("selection_ratio", &cbs::RunConfig::selection_ratio)
        .def_readwrite("noise_rate", &cbs::RunConfig::noise_rate)
        .def_readwrite("mix_phi", &cbs::RunConfig::mix_phi)
        .def_readwrite("mask_tau", &cbs::RunConfig::mask_tau)
        .def_readwrite("ema_coefficient", &cbs::RunConfig::ema_coefficient)
        .def_readwrite("loss_weight", &cbs::RunConfig::loss_weight)
        .def_readwrite("hidden_dim", &cbs::RunConfig::hidden_dim)
        .def_readwrite("augment", &cbs::RunConfig::augment)
        .def_readwrite("seed", &cbs::RunConfig::seed);

    m.def("validate_run_config", &cbs::validate_run_config);
    m.def("resolved_selection_ratio", &cbs::resolved_selection_ratio);
    m.def("epoch_learning_rate", &cbs::epoch_learning_rate);

    py::class_<cbs::EpochReport>(m, "EpochReport")
        .def_readonly("epoch", &cbs::EpochReport::epoch)
        .def_property_readonly(
            "stage", [](const cbs::EpochReport& r) { return std::string(cbs::stage_name(r.stage)); })
        .def_readonly("mean_train_loss", &cbs::EpochReport::mean_train_loss)
        .def_readonly("test_accuracy", &cbs::EpochReport::test_accuracy)
        .def_readonly("selection_precision", &cbs::EpochReport::selection_precision)
        .def_readonly("selection_recall", &cbs::EpochReport::selection_recall)
        .def_readonly("per_class_clean_counts", &cbs::EpochReport::per_class_clean_counts)
        .def_readonly("masked_fraction", &cbs::EpochReport::masked_fraction)
        .def_readonly("learning_rate", &cbs::EpochReport::learning_rate);

    // The method argument is a plain string so callers do not juggle an enum.
    m.def(
        "run_experiment",
        [](const cbs::RunConfig& config, const cbs::Dataset& train, const cbs::Dataset* test,
           const std::string& method, bool with_oracle) {
            const auto res = cbs::run_experiment(config, train, test, cbs::parse_method(method),
                                                 nullptr, with_oracle);
            return res.reports;
        },
        py::arg("config"), py::arg("train"), py::arg("test") = nullptr,
        py::arg("method") = "ours", py::arg("with_oracle") = true,
        py::call_guard<py::gil_scoped_release>());
    m.def("report_json_line", [](const cbs::EpochReport& r, const std::string& method) {
        return cbs::report_json_line(r, cbs::parse_method(method));
    });
    m.def("last_k_mean_accuracy", &cbs::last_k_mean_accuracy);
    m.def("best_accuracy", &cbs::best_accuracy);
}
