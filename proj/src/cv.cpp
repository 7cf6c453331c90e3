#include "pipefail/cv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pipefail/errors.hpp"

namespace pipefail {

std::string model_kind_name(ModelKind kind) {
    return kind == ModelKind::logit ? "logit" : "gbt";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "logit") return ModelKind::logit;
    if (name == "gbt") return ModelKind::gbt;
    throw InvalidArgument("unknown model kind '" + name + "' (expected logit or gbt)");
}

CvScheme CvScheme::make(const PanelDataset& panel, int horizon_k, int n_folds, int gap) {
    if (horizon_k < 1) throw InvalidArgument("CvScheme: horizon_k must be >= 1");
    if (n_folds < 1) throw InvalidArgument("CvScheme: n_folds must be >= 1");
    if (gap < 0) gap = horizon_k;
    if (gap < horizon_k) {
        throw InvalidArgument("CvScheme: gap must be >= horizon_k to keep label windows clear");
    }
    CvScheme scheme;
    scheme.horizon_k = horizon_k;
    scheme.n_folds = n_folds;
    scheme.gap = gap;
    scheme.test_year = panel.max_year() - horizon_k;
    for (int f = 0; f < n_folds; ++f) {
        const int year = scheme.test_year - f;
        scheme.validation_years.push_back(year);
    }
    // Feasibility: the oldest fold still needs at least one train year and
    // its own snapshot present in the panel.
    for (int year : scheme.validation_years) {
        const bool present = std::binary_search(panel.years().begin(), panel.years().end(), year);
        if (!present || year - gap < panel.min_year()) {
            throw InvalidArgument("CvScheme: infeasible for panel years " +
                                  std::to_string(panel.min_year()) + "-" +
                                  std::to_string(panel.max_year()) + ": fold year " +
                                  std::to_string(year) + " lacks data or train history");
        }
    }
    return scheme;
}

namespace {

Provenance provenance_of(const DesignBlock& block) {
    Provenance p;
    std::set<int> years(block.row_years.begin(), block.row_years.end());
    p.snapshot_years.assign(years.begin(), years.end());
    p.row_count = block.size();
    return p;
}

struct TrainedClassifier {
    ModelKind kind = ModelKind::gbt;
    LogitModel logit;
    BoostedEnsemble gbt;
    bool converged = true;

    std::vector<double> predict(const FeatureMatrix& matrix) const {
        return kind == ModelKind::logit ? predict_proba_logit(logit, matrix)
                                        : predict_proba_gbt(gbt, matrix);
    }
};

struct FoldArtifacts {
    TrainedClassifier classifier;
    EncoderState encoder;
    Provenance smote_provenance;
};

// Shared train-side pipeline: encode on train rows only, optionally
// oversample, fit the configured classifier.
FoldArtifacts fit_train_side(const PanelDataset& panel, const PipelineConfig& config,
                             const std::vector<int>& train_years, int horizon_k) {
    const LabeledDesign train = assemble_labeled(panel, train_years, horizon_k, config.features);
    FoldArtifacts out;
    out.encoder = fit_encoder(train.block);
    if (!out.encoder.provenance.subset_of(train_years)) {
        throw Error("internal leakage check failed: encoder saw non-train years");
    }
    FeatureMatrix design = apply_encoder(train.block, out.encoder);

    FeatureMatrix fit_matrix;
    std::vector<int> fit_labels;
    std::size_t real_rows = design.values.rows();
    if (config.use_smote) {
        SmoteConfig smote_config = config.smote;
        smote_config.seed = config.seed;
        smote_config.threads = config.threads;
        SmoteResult resampled =
            smote(design.values, train.labels, smote_config, provenance_of(train.block));
        if (!resampled.provenance.subset_of(train_years)) {
            throw Error("internal leakage check failed: resampling saw non-train years");
        }
        out.smote_provenance = resampled.provenance;
        fit_matrix.column_names = design.column_names;
        fit_matrix.row_ids.assign(resampled.values.rows(), std::string());
        fit_matrix.values = std::move(resampled.values);
        fit_labels = std::move(resampled.labels);
        real_rows = resampled.original_rows;
    } else {
        fit_matrix = std::move(design);
        fit_labels = train.labels;
    }

    out.classifier.kind = config.model;
    if (config.model == ModelKind::logit) {
        out.classifier.logit = fit_logit_l1(fit_matrix, fit_labels, config.logit_lambda,
                                            config.logit_max_epochs, config.logit_tolerance);
        out.classifier.converged = out.classifier.logit.converged;
    } else {
        GbtParams params = config.gbt;
        params.real_rows = real_rows;
        out.classifier.gbt = fit_gbt(fit_matrix, fit_labels, params, config.seed, config.threads);
    }
    return out;
}

double metric_field(const ScoreSet& s, int which) {
    switch (which) {
        case 0: return s.mcc;
        case 1: return s.precision;
        case 2: return s.recall;
        case 3: return s.accuracy;
        case 4: return s.f1;
        default: return s.auc;
    }
}

void set_metric_field(ScoreSet* s, int which, double value) {
    switch (which) {
        case 0: s->mcc = value; break;
        case 1: s->precision = value; break;
        case 2: s->recall = value; break;
        case 3: s->accuracy = value; break;
        case 4: s->f1 = value; break;
        default: s->auc = value; break;
    }
}

}  // namespace

CvReport run_temporal_cv(const PanelDataset& panel, const PipelineConfig& config,
                         const CvScheme& scheme) {
    config.features.validate();
    CvReport report;
    report.scheme = scheme;
    report.grid = config.threshold_grid.empty() ? default_threshold_grid() : config.threshold_grid;

    for (int validation_year : scheme.validation_years) {
        try {
            const TemporalSplit split =
                temporal_split(panel, validation_year, scheme.horizon_k, scheme.gap);
            FoldArtifacts artifacts =
                fit_train_side(panel, config, split.train_years, scheme.horizon_k);

            const LabeledDesign validation = assemble_labeled(
                panel, {validation_year}, scheme.horizon_k, config.features);
            const FeatureMatrix design = apply_encoder(validation.block, artifacts.encoder);
            const std::vector<double> probabilities = artifacts.classifier.predict(design);

            FoldResult fold;
            fold.validation_year = validation_year;
            fold.train_years = split.train_years;
            fold.curve = threshold_sweep(probabilities, validation.labels, report.grid);
            fold.encoder_provenance = artifacts.encoder.provenance;
            fold.smote_provenance = artifacts.smote_provenance;
            fold.converged = artifacts.classifier.converged;
            report.folds.push_back(std::move(fold));
        } catch (const Error& e) {
            throw Error("fold " + std::to_string(validation_year) + ": " + e.what());
        }
    }

    const std::size_t folds = report.folds.size();
    report.mean.resize(report.grid.size());
    report.deviation.resize(report.grid.size());
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
        report.mean[g].threshold = report.grid[g];
        report.deviation[g].threshold = report.grid[g];
        for (int metric = 0; metric < 6; ++metric) {
            double sum = 0.0;
            for (const FoldResult& fold : report.folds) {
                sum += metric_field(fold.curve.scores[g], metric);
            }
            const double mean = sum / static_cast<double>(folds);
            double variance = 0.0;
            for (const FoldResult& fold : report.folds) {
                const double d = metric_field(fold.curve.scores[g], metric) - mean;
                variance += d * d;
            }
            variance /= static_cast<double>(folds);
            set_metric_field(&report.mean[g], metric, mean);
            set_metric_field(&report.deviation[g], metric, std::sqrt(variance));
        }
    }
    report.selected_threshold = select_threshold(report);
    return report;
}

double select_threshold(const CvReport& report) {
    if (report.folds.empty() || report.mean.empty()) {
        throw InvalidArgument("select_threshold: report holds no folds");
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < report.grid.size(); ++g) {
        if (report.mean[g].mcc > report.mean[best].mcc) best = g;
    }
    return report.grid[best];
}

FinalEvaluation evaluate_final(const PanelDataset& panel, const PipelineConfig& config,
                               const CvScheme& scheme, double threshold) {
    config.features.validate();
    const TemporalSplit split =
        temporal_split(panel, scheme.test_year, scheme.horizon_k, scheme.gap);
    FoldArtifacts artifacts = fit_train_side(panel, config, split.train_years, scheme.horizon_k);

    const LabeledDesign test =
        assemble_labeled(panel, {scheme.test_year}, scheme.horizon_k, config.features);
    const FeatureMatrix design = apply_encoder(test.block, artifacts.encoder);
    const std::vector<double> probabilities = artifacts.classifier.predict(design);

    FinalEvaluation result;
    result.test_year = scheme.test_year;
    result.train_years = split.train_years;
    result.threshold = threshold;
    result.test = score_set(confusion_at_threshold(probabilities, test.labels, threshold),
                           threshold);
    result.test.auc = roc_auc(probabilities, test.labels);
    result.test_curve = threshold_sweep(probabilities, test.labels,
                                       config.threshold_grid.empty() ? default_threshold_grid()
                                                                     : config.threshold_grid);
    result.encoder = artifacts.encoder;
    result.model = config.model;
    result.logit = std::move(artifacts.classifier.logit);
    result.gbt = std::move(artifacts.classifier.gbt);
    result.converged = artifacts.classifier.converged;
    return result;
}

TuneOutcome tune_configs(const PanelDataset& panel,
                         const std::vector<PipelineConfig>& candidates, const CvScheme& scheme) {
    if (candidates.empty()) {
        throw InvalidArgument("tune_configs: candidate list is empty");
    }
    TuneOutcome outcome;
    for (const PipelineConfig& candidate : candidates) {
        const CvReport report = run_temporal_cv(panel, candidate, scheme);
        std::size_t best = 0;
        for (std::size_t g = 1; g < report.grid.size(); ++g) {
            if (report.mean[g].mcc > report.mean[best].mcc) best = g;
        }
        outcome.best_mean_mcc.push_back(report.mean[best].mcc);
        outcome.best_threshold.push_back(report.grid[best]);
    }
    for (std::size_t i = 1; i < outcome.best_mean_mcc.size(); ++i) {
        if (outcome.best_mean_mcc[i] > outcome.best_mean_mcc[outcome.selected]) {
            outcome.selected = i;
        }
    }
    return outcome;
}

}  // namespace pipefail
