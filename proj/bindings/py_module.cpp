#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pipefail/commands.hpp"
#include "pipefail/cv.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/gbt.hpp"
#include "pipefail/logit.hpp"
#include "pipefail/metrics.hpp"
#include "pipefail/run_config.hpp"
#include "pipefail/shap.hpp"
#include "pipefail/smote.hpp"
#include "pipefail/survival.hpp"

namespace py = pybind11;
using namespace pipefail;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

FeatureMatrix to_feature_matrix(const DoubleArray& values, std::vector<std::string> columns) {
    if (values.ndim() != 2) {
        throw InvalidArgument("expected a 2-D float array");
    }
    const std::size_t n = static_cast<std::size_t>(values.shape(0));
    const std::size_t p = static_cast<std::size_t>(values.shape(1));
    if (columns.empty()) {
        for (std::size_t j = 0; j < p; ++j) columns.push_back("x" + std::to_string(j));
    } else if (columns.size() != p) {
        throw InvalidArgument("column list length does not match the array width");
    }
    FeatureMatrix out;
    out.column_names = std::move(columns);
    out.values = Matrix(n, p);
    auto view = values.unchecked<2>();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            out.values(i, j) = view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
        }
    }
    return out;
}

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = m(i, j);
        }
    }
    return out;
}

GbtParams gbt_params(int n_trees, int max_depth, double learning_rate, double lambda,
                     double gamma, double min_child_weight) {
    GbtParams params;
    params.n_trees = n_trees;
    params.max_depth = max_depth;
    params.learning_rate = learning_rate;
    params.lambda = lambda;
    params.gamma = gamma;
    params.min_child_weight = min_child_weight;
    return params;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core for water-pipe failure prediction: synthetic panels, temporal "
              "cross-validation, boosted trees with exact attributions, and an elastic-net "
              "proportional-hazards model";

    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgumentError", PyExc_ValueError);

    m.def(
        "run_command",
        [](const std::string& command, const std::string& config_text,
           const std::string& action) {
            const RunConfig config = parse_run_config_text(config_text);
            if (command == "synth") {
                cmd_synth(config);
            } else if (command == "cv") {
                cmd_cv(config);
            } else if (command == "train") {
                cmd_train(config);
            } else if (command == "explain") {
                cmd_explain(config);
            } else if (command == "survival") {
                cmd_survival(config, action);
            } else {
                throw InvalidArgument("unknown command '" + command + "'");
            }
        },
        py::arg("command"), py::arg("config_text"), py::arg("action") = "",
        "Run a pipeline command (synth, cv, train, explain, survival) from config text; "
        "artifacts land in the configured out_dir");

    m.def(
        "score_probabilities",
        [](const std::vector<double>& probabilities, const std::vector<int>& labels,
           double threshold) {
            const ConfusionMatrix confusion = confusion_at_threshold(
                std::span<const double>(probabilities), std::span<const int>(labels), threshold);
            ScoreSet scores = score_set(confusion, threshold);
            scores.auc = roc_auc(std::span<const double>(probabilities),
                                 std::span<const int>(labels));
            py::dict out;
            out["threshold"] = scores.threshold;
            out["mcc"] = scores.mcc;
            out["precision"] = scores.precision;
            out["recall"] = scores.recall;
            out["accuracy"] = scores.accuracy;
            out["f1"] = scores.f1;
            out["auc"] = scores.auc;
            return out;
        },
        py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5,
        "Confusion metrics at a threshold plus AUC");

    m.def(
        "smote_balance",
        [](const DoubleArray& values, const std::vector<int>& labels, int k_neighbors,
           double target_ratio, std::uint64_t seed, int threads) {
            const FeatureMatrix z = to_feature_matrix(values, {});
            SmoteConfig config;
            config.k_neighbors = k_neighbors;
            config.target_ratio = target_ratio;
            config.seed = seed;
            config.threads = threads;
            const SmoteResult result = smote(z.values, labels, config);
            return py::make_tuple(to_numpy(result.values), result.labels,
                                  result.synthetic_rows);
        },
        py::arg("values"), py::arg("labels"), py::arg("k_neighbors") = 5,
        py::arg("target_ratio") = 1.0, py::arg("seed") = 0, py::arg("threads") = 0,
        "Minority oversampling; returns (values, labels, synthetic_rows)");

    m.def(
        "fit_logit",
        [](const DoubleArray& values, const std::vector<int>& labels,
           std::vector<std::string> columns, double lambda_l1, int max_epochs,
           double tolerance) {
            const FeatureMatrix z = to_feature_matrix(values, std::move(columns));
            const LogitModel model =
                fit_logit_l1(z, labels, lambda_l1, max_epochs, tolerance);
            py::dict out;
            out["columns"] = model.column_names;
            out["beta"] = model.beta;
            out["intercept"] = model.intercept;
            out["converged"] = model.converged;
            out["epochs_run"] = model.epochs_run;
            return out;
        },
        py::arg("values"), py::arg("labels"), py::arg("columns") = std::vector<std::string>{},
        py::arg("lambda_l1") = 0.01, py::arg("max_epochs") = 1000, py::arg("tolerance") = 1e-6,
        "L1-penalized logistic regression fitted by coordinate descent");

    m.def(
        "gbt_fit_predict",
        [](const DoubleArray& train_values, const std::vector<int>& train_labels,
           const DoubleArray& test_values, int n_trees, int max_depth, double learning_rate,
           double lambda, double gamma, double min_child_weight, int threads) {
            const FeatureMatrix train = to_feature_matrix(train_values, {});
            const FeatureMatrix test = to_feature_matrix(test_values, {});
            const BoostedEnsemble model =
                fit_gbt(train, train_labels,
                        gbt_params(n_trees, max_depth, learning_rate, lambda, gamma,
                                   min_child_weight),
                        0, threads);
            return predict_proba_gbt(model, test);
        },
        py::arg("train_values"), py::arg("train_labels"), py::arg("test_values"),
        py::arg("n_trees") = 200, py::arg("max_depth") = 4, py::arg("learning_rate") = 0.1,
        py::arg("reg_lambda") = 1.0, py::arg("gamma") = 0.0, py::arg("min_child_weight") = 1.0,
        py::arg("threads") = 0,
        "Newton-boosted trees on logistic loss; returns failure probabilities for the "
        "test rows");

    m.def(
        "gbt_shap",
        [](const DoubleArray& train_values, const std::vector<int>& train_labels,
           const DoubleArray& test_values, int n_trees, int max_depth, double learning_rate,
           double lambda, double gamma, double min_child_weight, int threads) {
            const FeatureMatrix train = to_feature_matrix(train_values, {});
            const FeatureMatrix test = to_feature_matrix(test_values, {});
            const BoostedEnsemble model =
                fit_gbt(train, train_labels,
                        gbt_params(n_trees, max_depth, learning_rate, lambda, gamma,
                                   min_child_weight),
                        0, threads);
            const ShapAttribution attribution = tree_shap(model, test, threads);
            return py::make_tuple(to_numpy(attribution.values), attribution.base_value);
        },
        py::arg("train_values"), py::arg("train_labels"), py::arg("test_values"),
        py::arg("n_trees") = 50, py::arg("max_depth") = 4, py::arg("learning_rate") = 0.1,
        py::arg("reg_lambda") = 1.0, py::arg("gamma") = 0.0, py::arg("min_child_weight") = 1.0,
        py::arg("threads") = 0,
        "Fit boosted trees and return (per-feature margin attributions, base value); rows "
        "of the first output sum to margin - base");

    m.def(
        "cox_fit",
        [](const DoubleArray& values, const std::vector<double>& durations,
           const std::vector<int>& events, double lambda, double alpha, int max_epochs,
           double tolerance) {
            const FeatureMatrix z = to_feature_matrix(values, {});
            const CoxModel model =
                fit_coxnet(z, durations, events, lambda, alpha, max_epochs, tolerance);
            py::dict out;
            out["beta"] = model.beta;
            out["converged"] = model.converged;
            out["baseline_times"] = model.baseline_times;
            out["baseline_cumhaz"] = model.baseline_cumhaz;
            return out;
        },
        py::arg("values"), py::arg("durations"), py::arg("events"), py::arg("lam") = 0.0,
        py::arg("alpha") = 0.5, py::arg("max_epochs") = 1000, py::arg("tolerance") = 1e-6,
        "Elastic-net proportional-hazards fit (Breslow ties)");

    m.def(
        "concordance",
        [](const std::vector<double>& risk, const std::vector<double>& durations,
           const std::vector<int>& events) {
            return concordance_index(risk, durations, events);
        },
        py::arg("risk"), py::arg("durations"), py::arg("events"),
        "Harrell concordance of risk scores against observed durations");
}
