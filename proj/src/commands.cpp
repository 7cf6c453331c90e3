#include "pipefail/commands.hpp"

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pipefail/csv.hpp"
#include "pipefail/cv.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/features.hpp"
#include "pipefail/ingest.hpp"
#include "pipefail/rng.hpp"
#include "pipefail/serialize.hpp"
#include "pipefail/shap.hpp"
#include "pipefail/survival.hpp"
#include "pipefail/synth.hpp"

namespace pipefail {

namespace {

namespace fs = std::filesystem;

fs::path ensure_out_dir(const std::string& dir) {
    fs::path path(dir);
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) {
        throw InvalidArgument("cannot create output directory '" + dir + "': " + ec.message());
    }
    return path;
}

PanelLoad load_inputs(const RunConfig& config) {
    PanelLoad loaded = load_panel_dir(config.data_dir);
    std::cout << "loaded " << config.data_dir << ": " << loaded.report.summary() << "\n";
    return loaded;
}

const std::vector<std::string>& scores_header() {
    static const std::vector<std::string> header = {"horizon_k", "threshold", "mcc", "precision",
                                                    "recall",    "accuracy",  "f1",  "auc"};
    return header;
}

std::vector<std::string> scores_row(int horizon_k, const ScoreSet& s) {
    return {std::to_string(horizon_k), format_double(s.threshold), format_double(s.mcc),
            format_double(s.precision), format_double(s.recall),   format_double(s.accuracy),
            format_double(s.f1),        format_double(s.auc)};
}

ClassifierArtifact make_artifact(int horizon_k, const FinalEvaluation& result) {
    ClassifierArtifact artifact;
    artifact.kind = result.model;
    artifact.horizon_k = horizon_k;
    artifact.test_year = result.test_year;
    artifact.train_years = result.train_years;
    artifact.threshold = result.threshold;
    artifact.logit = result.logit;
    artifact.gbt = result.gbt;
    return artifact;
}

void require_converged(const CvReport& report) {
    for (const FoldResult& fold : report.folds) {
        if (!fold.converged) {
            throw ConvergenceError("fold " + std::to_string(fold.validation_year) +
                                   ": classifier did not converge; raise max epochs or the "
                                   "tolerance");
        }
    }
}

void require_converged(const FinalEvaluation& result) {
    if (!result.converged) {
        throw ConvergenceError("final fit on test year " + std::to_string(result.test_year) +
                               " did not converge; raise max epochs or the tolerance");
    }
}

// Survival helpers: the eval action refits on a row subset.

FeatureMatrix take_rows(const FeatureMatrix& z, const std::vector<std::size_t>& rows) {
    FeatureMatrix out;
    out.column_names = z.column_names;
    out.values = Matrix(rows.size(), z.values.cols());
    out.row_ids.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row_ids.push_back(z.row_ids.empty() ? std::string() : z.row_ids[rows[r]]);
        for (std::size_t j = 0; j < z.values.cols(); ++j) {
            out.values(r, j) = z.values(rows[r], j);
        }
    }
    return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& values, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (std::size_t row : rows) out.push_back(values[row]);
    return out;
}

void check_survival_config(const RunConfig& config) {
    if (config.cox_alpha < 0.0 || config.cox_alpha > 1.0) {
        throw InvalidArgument("config key 'cox_alpha' must lie in [0, 1]");
    }
    if (config.cox_lambda_points < 1) {
        throw InvalidArgument("config key 'cox_lambda_points' must be positive");
    }
    if (config.cox_max_epochs < 1) {
        throw InvalidArgument("config key 'cox_max_epochs' must be positive");
    }
    if (!(config.cox_tolerance > 0.0)) {
        throw InvalidArgument("config key 'cox_tolerance' must be positive");
    }
    if (!(config.survival_horizon > 0.0)) {
        throw InvalidArgument("config key 'survival_horizon' must be positive");
    }
    if (config.brier_horizon < 1) {
        throw InvalidArgument("config key 'brier_horizon' must be positive");
    }
    if (config.curve_horizon < 1) {
        throw InvalidArgument("config key 'curve_horizon' must be positive");
    }
    if (config.curve_sample < 1) {
        throw InvalidArgument("config key 'curve_sample' must be positive");
    }
}

// Fits the proportional-hazards model on the given rows, either at the pinned
// lambda or along the tuned path, and records the selection trail.
CoxArtifact fit_survival_model(const RunConfig& config, const FeatureMatrix& z,
                               const std::vector<double>& durations,
                               const std::vector<int>& events) {
    CoxArtifact artifact;
    if (config.cox_lambda >= 0.0) {
        artifact.model = fit_coxnet(z, durations, events, config.cox_lambda, config.cox_alpha,
                                    config.cox_max_epochs, config.cox_tolerance);
    } else {
        CoxnetPathFit path = fit_coxnet_path(z, durations, events, config.cox_alpha,
                                             config.cox_lambda_points, config.seed,
                                             config.cox_max_epochs, config.cox_tolerance);
        artifact.model = std::move(path.model);
        artifact.lambda_path = std::move(path.lambda_path);
        artifact.holdout_cindex = std::move(path.holdout_cindex);
        artifact.selected = path.selected;
    }
    if (!artifact.model.converged) {
        throw ConvergenceError("proportional-hazards fit did not converge; raise "
                               "cox_max_epochs or cox_tolerance");
    }
    return artifact;
}

std::size_t count_nonzero(const std::vector<double>& beta) {
    std::size_t n = 0;
    for (double b : beta) {
        if (b != 0.0) ++n;
    }
    return n;
}

}  // namespace

void cmd_synth(const RunConfig& config) {
    const GeneratorConfig generator = config.generator();
    const fs::path out = ensure_out_dir(config.out_dir);
    const SyntheticPanel synth = generate_panel(generator);
    write_synthetic_dir(synth, out);

    std::vector<std::string> seen;
    seen.reserve(synth.inventory.size());
    for (const PipeSnapshot& row : synth.inventory) seen.push_back(row.pipe_id);
    std::sort(seen.begin(), seen.end());
    const std::size_t pipes =
        static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());

    std::cout << "synth: " << pipes << " pipes over " << generator.start_year << "-"
              << generator.end_year << ", " << synth.inventory.size() << " snapshot rows, "
              << synth.failures.size() << " failures\n";
    std::cout << "synth: wrote inventory.csv, failures.csv, operations.csv, truth.json to "
              << out.string() << "\n";
}

void cmd_cv(const RunConfig& config) {
    const fs::path out = ensure_out_dir(config.out_dir);
    const PanelLoad loaded = load_inputs(config);
    const PipelineConfig pipeline = config.pipeline();

    std::vector<int> horizons;
    if (config.horizon_sweep) {
        for (int k = 1; k <= config.horizon_k; ++k) horizons.push_back(k);
    } else {
        horizons.push_back(config.horizon_k);
    }

    static const std::vector<std::string> sweep_header = {
        "horizon_k",     "threshold",    "mcc_mean",      "mcc_std",
        "precision_mean", "precision_std", "recall_mean",   "recall_std",
        "accuracy_mean", "accuracy_std", "f1_mean",       "f1_std",
        "auc_mean",      "auc_std"};
    std::vector<std::vector<std::string>> sweep_rows;
    std::vector<std::vector<std::string>> score_rows;

    for (int k : horizons) {
        const CvScheme scheme = CvScheme::make(loaded.build.panel, k, config.n_folds, config.gap);
        const CvReport report = run_temporal_cv(loaded.build.panel, pipeline, scheme);
        require_converged(report);
        const FinalEvaluation result =
            evaluate_final(loaded.build.panel, pipeline, scheme, report.selected_threshold);
        require_converged(result);

        for (std::size_t i = 0; i < report.grid.size(); ++i) {
            const ScoreSet& m = report.mean[i];
            const ScoreSet& d = report.deviation[i];
            sweep_rows.push_back({std::to_string(k), format_double(report.grid[i]),
                                  format_double(m.mcc), format_double(d.mcc),
                                  format_double(m.precision), format_double(d.precision),
                                  format_double(m.recall), format_double(d.recall),
                                  format_double(m.accuracy), format_double(d.accuracy),
                                  format_double(m.f1), format_double(d.f1),
                                  format_double(m.auc), format_double(d.auc)});
        }
        score_rows.push_back(scores_row(k, result.test));

        std::cout << "cv k=" << k << ": test year " << scheme.test_year << ", folds";
        for (int year : scheme.validation_years) std::cout << " " << year;
        std::cout << ", threshold " << format_double(report.selected_threshold) << ", test MCC "
                  << format_double(result.test.mcc) << ", AUC " << format_double(result.test.auc)
                  << "\n";

        if (k == horizons.back()) {
            save_classifier((out / "model.json").string(), make_artifact(k, result));
            save_encoder((out / "encoder.json").string(), result.encoder);
        }
    }

    write_csv(out / "threshold_sweep.csv", sweep_header, sweep_rows);
    write_csv(out / "scores.csv", scores_header(), score_rows);
    std::cout << "cv: wrote threshold_sweep.csv, scores.csv, model.json, encoder.json to "
              << out.string() << "\n";
}

void cmd_train(const RunConfig& config) {
    if (config.threshold < 0.0 || config.threshold > 1.0) {
        throw InvalidArgument("config key 'threshold' must lie in [0, 1]");
    }
    const fs::path out = ensure_out_dir(config.out_dir);
    const PanelLoad loaded = load_inputs(config);
    const PipelineConfig pipeline = config.pipeline();

    // Single-fold scheme: only the test year and the gap matter here.
    const CvScheme scheme = CvScheme::make(loaded.build.panel, config.horizon_k, 1, config.gap);
    const FinalEvaluation result =
        evaluate_final(loaded.build.panel, pipeline, scheme, config.threshold);
    require_converged(result);

    save_classifier((out / "model.json").string(), make_artifact(config.horizon_k, result));
    save_encoder((out / "encoder.json").string(), result.encoder);
    write_csv(out / "scores.csv", scores_header(),
              {scores_row(config.horizon_k, result.test)});

    std::cout << "train: test year " << result.test_year << ", threshold "
              << format_double(config.threshold) << ", test MCC " << format_double(result.test.mcc)
              << ", AUC " << format_double(result.test.auc) << "\n";
    std::cout << "train: wrote model.json, encoder.json, scores.csv to " << out.string() << "\n";
}

void cmd_explain(const RunConfig& config) {
    const fs::path out = ensure_out_dir(config.out_dir);
    const ClassifierArtifact artifact = load_classifier((out / "model.json").string());
    const ModelKind requested = parse_model_kind(config.model);
    if (requested != artifact.kind) {
        throw InvalidArgument("stored model is '" + model_kind_name(artifact.kind) +
                              "' but the run asks for '" + config.model + "'");
    }

    if (artifact.kind == ModelKind::logit) {
        const auto ranked = rank_coefficients(artifact.logit);
        std::vector<std::vector<std::string>> rows;
        rows.reserve(ranked.size());
        for (const auto& [column, beta] : ranked) {
            rows.push_back({column, format_double(beta)});
        }
        write_csv(out / "coefficients.csv", {"column", "beta"}, rows);
        std::cout << "explain: wrote coefficients.csv (" << rows.size() << " features, intercept "
                  << format_double(artifact.logit.intercept) << ") to " << out.string() << "\n";
        return;
    }

    const EncoderState encoder = load_encoder((out / "encoder.json").string());
    const PanelLoad loaded = load_inputs(config);
    const DesignBlock block = engineer_derived_features(loaded.build.panel, artifact.test_year,
                                                        FeatureSpec::classification_default());
    const FeatureMatrix z = apply_encoder(block, encoder);
    const ShapAttribution attribution = tree_shap(artifact.gbt, z, config.threads);

    const auto summary = shap_summary(attribution);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(summary.size());
    for (const auto& [column, mean_abs] : summary) {
        rows.push_back({column, format_double(mean_abs)});
    }
    write_csv(out / "shap_summary.csv", {"column", "mean_abs_shap"}, rows);

    if (config.explain_dump_rows) {
        std::vector<std::string> header = {"pipe_id", "base_value"};
        header.insert(header.end(), attribution.column_names.begin(),
                      attribution.column_names.end());
        std::vector<std::vector<std::string>> dump;
        dump.reserve(attribution.values.rows());
        for (std::size_t i = 0; i < attribution.values.rows(); ++i) {
            std::vector<std::string> row;
            row.reserve(header.size());
            row.push_back(attribution.row_ids[i]);
            row.push_back(format_double(attribution.base_value));
            for (std::size_t j = 0; j < attribution.values.cols(); ++j) {
                row.push_back(format_double(attribution.values(i, j)));
            }
            dump.push_back(std::move(row));
        }
        write_csv(out / "shap_rows.csv", header, dump);
    }

    std::cout << "explain: attributions over " << attribution.values.rows() << " rows of year "
              << artifact.test_year << "; wrote shap_summary.csv"
              << (config.explain_dump_rows ? " and shap_rows.csv" : "") << " to " << out.string()
              << "\n";
}

void cmd_survival(const RunConfig& config, const std::string& action) {
    check_survival_config(config);
    const fs::path out = ensure_out_dir(config.out_dir);
    const PanelLoad loaded = load_inputs(config);

    const SurvivalDataset data =
        build_survival_dataset(loaded.build.panel, FeatureSpec::survival_default());
    const std::size_t n = data.durations.size();
    std::size_t n_events = 0;
    for (int e : data.events) n_events += static_cast<std::size_t>(e);
    std::cout << "survival dataset: " << n << " pipes, " << n_events << " failures, skipped "
              << data.skipped_nonpositive_duration << " non-positive durations and "
              << data.skipped_no_preceding_snapshot << " without a pre-failure snapshot\n";

    const EncoderState encoder = fit_encoder(data.features);
    const FeatureMatrix z = apply_encoder(data.features, encoder);

    if (action == "screen") {
        const std::vector<ScreenRow> screen =
            single_feature_screen(z, data.durations, data.events, config.seed);
        std::vector<std::vector<std::string>> rows;
        rows.reserve(screen.size());
        std::size_t flagged = 0;
        for (const ScreenRow& row : screen) {
            rows.push_back({row.column, format_double(row.cindex), format_double(row.beta),
                            row.flagged ? "1" : "0"});
            flagged += row.flagged ? 1 : 0;
        }
        write_csv(out / "screen.csv", {"column", "cindex", "beta", "flagged"}, rows);
        std::cout << "survival screen: " << flagged << " of " << screen.size()
                  << " features flagged; wrote screen.csv to " << out.string() << "\n";
        return;
    }

    if (action == "eval") {
        const auto [train_rows, holdout_rows] = survival_holdout_split(n, config.seed);
        if (train_rows.empty() || holdout_rows.empty()) {
            throw DataError("survival eval: not enough rows for a 70/30 holdout");
        }
        const FeatureMatrix z_train = take_rows(z, train_rows);
        const FeatureMatrix z_hold = take_rows(z, holdout_rows);
        const std::vector<double> dur_train = take(data.durations, train_rows);
        const std::vector<double> dur_hold = take(data.durations, holdout_rows);
        const std::vector<int> ev_train = take(data.events, train_rows);
        const std::vector<int> ev_hold = take(data.events, holdout_rows);

        const CoxArtifact fitted = fit_survival_model(config, z_train, dur_train, ev_train);
        const std::vector<double> eta = linear_risk(z_hold, fitted.model);
        const double cindex = concordance_index(eta, dur_hold, ev_hold);
        const KmCurve censoring = censoring_km(dur_hold, ev_hold);

        std::vector<std::vector<std::string>> rows;
        double brier_sum = 0.0;
        std::vector<double> survival(eta.size());
        for (int t = 1; t <= config.brier_horizon; ++t) {
            for (std::size_t i = 0; i < eta.size(); ++i) {
                survival[i] = predict_survival(fitted.model, eta[i], static_cast<double>(t));
            }
            const double brier =
                weighted_brier(survival, dur_hold, ev_hold, censoring, static_cast<double>(t));
            brier_sum += brier;
            rows.push_back({"brier", std::to_string(t), format_double(brier)});
        }
        const double integrated = brier_sum / static_cast<double>(config.brier_horizon);
        rows.push_back({"integrated_brier", "", format_double(integrated)});
        rows.push_back({"cindex", "", format_double(cindex)});
        rows.push_back({"n_train", "", std::to_string(train_rows.size())});
        rows.push_back({"n_holdout", "", std::to_string(holdout_rows.size())});
        std::size_t hold_events = 0;
        for (int e : ev_hold) hold_events += static_cast<std::size_t>(e);
        rows.push_back({"events_holdout", "", std::to_string(hold_events)});
        write_csv(out / "survival_scores.csv", {"metric", "time", "value"}, rows);

        std::cout << "survival eval: holdout c-index " << format_double(cindex)
                  << ", integrated Brier " << format_double(integrated)
                  << "; wrote survival_scores.csv to " << out.string() << "\n";
        return;
    }

    // fit / curves / materials all need the model on every row.
    const CoxArtifact fitted = fit_survival_model(config, z, data.durations, data.events);

    if (action == "fit") {
        CoxArtifact artifact = fitted;
        artifact.encoder = encoder;
        save_cox((out / "coxnet_model.json").string(), artifact);
        std::cout << "survival fit: lambda " << format_double(artifact.model.lambda) << ", alpha "
                  << format_double(artifact.model.alpha) << ", "
                  << count_nonzero(artifact.model.beta) << " of " << artifact.model.beta.size()
                  << " coefficients nonzero; wrote coxnet_model.json to " << out.string() << "\n";
        return;
    }

    if (action == "curves") {
        const std::vector<double> eta = linear_risk(z, fitted.model);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng = Rng::substream(config.seed, 0x63757276u);  // curve sample stream
        for (std::size_t i = n; i > 1; --i) {
            const std::uint64_t j = rng.uniform_int(i);
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(j)]);
        }
        const std::size_t sample =
            std::min(static_cast<std::size_t>(config.curve_sample), n);
        perm.resize(sample);
        std::sort(perm.begin(), perm.end());

        std::vector<std::vector<std::string>> rows;
        rows.reserve(sample * static_cast<std::size_t>(config.curve_horizon));
        for (std::size_t idx : perm) {
            for (int t = 1; t <= config.curve_horizon; ++t) {
                const double s = predict_survival(fitted.model, eta[idx], static_cast<double>(t));
                rows.push_back({data.pipe_ids[idx], std::to_string(t), format_double(s)});
            }
        }
        write_csv(out / "survival_curves.csv", {"pipe_id", "time", "survival"}, rows);
        std::cout << "survival curves: " << sample << " pipes over years 1.."
                  << config.curve_horizon << "; wrote survival_curves.csv to " << out.string()
                  << "\n";
        return;
    }

    if (action == "materials") {
        const std::vector<MaterialSummaryRow> summary =
            material_survival_summary(data, z, fitted.model, config.survival_horizon);
        std::vector<std::vector<std::string>> rows;
        rows.reserve(summary.size());
        for (const MaterialSummaryRow& row : summary) {
            rows.push_back({row.material, std::to_string(row.count), format_double(row.q1),
                            format_double(row.median), format_double(row.q3)});
        }
        write_csv(out / "material_summary.csv", {"material", "count", "q1", "median", "q3"}, rows);

        const std::vector<MaterialCurvePoint> curves =
            material_survival_curves(data, z, fitted.model, config.curve_horizon);
        std::vector<std::vector<std::string>> curve_rows;
        curve_rows.reserve(curves.size());
        for (const MaterialCurvePoint& point : curves) {
            curve_rows.push_back({point.material, std::to_string(point.years_ahead),
                                  format_double(point.mean_survival)});
        }
        write_csv(out / "material_curves.csv", {"material", "years_ahead", "mean_survival"},
                  curve_rows);

        std::cout << "survival materials: " << summary.size() << " materials, conditional "
                  << format_double(config.survival_horizon)
                  << "-year outlook; wrote material_summary.csv and material_curves.csv to "
                  << out.string() << "\n";
        return;
    }

    throw InvalidArgument("unknown survival action '" + action + "'");
}

}  // namespace pipefail
