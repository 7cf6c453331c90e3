#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipefail/features.hpp"
#include "pipefail/gbt.hpp"
#include "pipefail/logit.hpp"
#include "pipefail/metrics.hpp"
#include "pipefail/panel.hpp"
#include "pipefail/smote.hpp"

namespace pipefail {

enum class ModelKind { logit, gbt };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// Everything one fold needs to go from panel rows to validation scores.
struct PipelineConfig {
    ModelKind model = ModelKind::gbt;
    FeatureSpec features = FeatureSpec::classification_default();

    bool use_smote = true;
    SmoteConfig smote;

    double logit_lambda = 0.01;
    int logit_max_epochs = 1000;
    double logit_tolerance = 1e-6;

    GbtParams gbt;

    std::vector<double> threshold_grid;  // empty = 0.00..1.00 step 0.01
    std::uint64_t seed = 0;
    int threads = 0;
};

// Gap-aware rolling-origin folds: validation snapshot years are the n_folds
// most recent years whose k-year label window fits in the panel, descending;
// each fold trains on snapshot years <= validation year - gap. The final test
// year is the most recent usable year (max_year - k).
struct CvScheme {
    int horizon_k = 4;
    int n_folds = 5;
    int gap = 4;
    int test_year = 0;
    std::vector<int> validation_years;  // descending

    static CvScheme make(const PanelDataset& panel, int horizon_k, int n_folds = 5, int gap = -1);
};

struct FoldResult {
    int validation_year = 0;
    std::vector<int> train_years;
    ThresholdCurve curve;
    Provenance encoder_provenance;
    Provenance smote_provenance;  // row_count 0 when SMOTE is off
    bool converged = true;
};

struct CvReport {
    CvScheme scheme;
    std::vector<FoldResult> folds;
    std::vector<double> grid;
    std::vector<ScoreSet> mean;       // per grid point, arithmetic mean over folds
    std::vector<ScoreSet> deviation;  // population standard deviation over folds
    double selected_threshold = 0.0;
    ScoreSet test;  // default until evaluate_final fills it
};

// Per fold: temporal_split, engineer features, fit the encoder on train rows
// only, oversample train rows only, fit the classifier, sweep thresholds on
// the untouched validation slice. Provenance of the encoder and the resampled
// set is asserted against the fold's train years. Fold errors are rethrown
// with the fold's validation year in the message.
CvReport run_temporal_cv(const PanelDataset& panel, const PipelineConfig& config,
                         const CvScheme& scheme);

// Grid point maximizing mean MCC, ties toward the lower threshold.
double select_threshold(const CvReport& report);

struct FinalEvaluation {
    int test_year = 0;
    std::vector<int> train_years;
    double threshold = 0.0;
    ScoreSet test;             // at the selected threshold, AUC filled
    ThresholdCurve test_curve;
    EncoderState encoder;
    ModelKind model = ModelKind::gbt;
    LogitModel logit;
    BoostedEnsemble gbt;
    bool converged = true;
};

// Trains on every snapshot year <= test_year - gap and scores the test year's
// window at the given threshold.
FinalEvaluation evaluate_final(const PanelDataset& panel, const PipelineConfig& config,
                               const CvScheme& scheme, double threshold);

struct TuneOutcome {
    std::size_t selected = 0;           // index into the candidate list
    std::vector<double> best_mean_mcc;  // per candidate, at its best threshold
    std::vector<double> best_threshold;
};

// Exhaustive scan over candidate configs, scored by mean CV MCC at each
// candidate's best threshold; ties keep the earlier candidate.
TuneOutcome tune_configs(const PanelDataset& panel,
                         const std::vector<PipelineConfig>& candidates, const CvScheme& scheme);

}  // namespace pipefail
