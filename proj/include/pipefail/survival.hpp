#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipefail/features.hpp"
#include "pipefail/panel.hpp"

namespace pipefail {

// One row per pipe: time from installation to first failure (event = 1) or to
// the last observed snapshot (event = 0). Covariates for failed pipes come
// from the last snapshot strictly before the first failure year so the row
// does not encode the outcome; pipes whose first failure precedes any snapshot
// are skipped, as are rows with non-positive duration.
struct SurvivalDataset {
    std::vector<std::string> pipe_ids;
    std::vector<double> durations;  // years since installation
    std::vector<int> events;        // 1 = failure observed
    DesignBlock features;           // aligned with pipe_ids
    std::size_t skipped_nonpositive_duration = 0;
    std::size_t skipped_no_preceding_snapshot = 0;
};

SurvivalDataset build_survival_dataset(const PanelDataset& panel, const FeatureSpec& spec);

// Proportional hazards model with Breslow tie handling and an elastic-net
// penalty lambda * (alpha * |beta|_1 + (1 - alpha)/2 * |beta|_2^2) on the
// negative partial log-likelihood (unnormalized).
struct CoxModel {
    std::vector<std::string> column_names;
    std::vector<double> beta;
    double lambda = 0.0;
    double alpha = 0.5;
    bool converged = false;
    // Breslow baseline cumulative hazard, a right-continuous step function
    // over the training event times (ascending).
    std::vector<double> baseline_times;
    std::vector<double> baseline_cumhaz;
};

// Breslow partial log-likelihood at beta (no penalty term).
double cox_partial_loglik(const FeatureMatrix& z, const std::vector<double>& durations,
                          const std::vector<int>& events, const std::vector<double>& beta);

// Gradient of the negative partial log-likelihood.
std::vector<double> cox_score(const FeatureMatrix& z, const std::vector<double>& durations,
                              const std::vector<int>& events, const std::vector<double>& beta);

// Cyclic coordinate descent on the penalized negative log-likelihood with an
// exact diagonal curvature and per-coordinate step halving, so the objective
// never increases. Convergence: max coefficient change <= tolerance.
CoxModel fit_coxnet(const FeatureMatrix& z, const std::vector<double>& durations,
                    const std::vector<int>& events, double lambda, double alpha = 0.5,
                    int max_epochs = 1000, double tolerance = 1e-6,
                    const std::vector<double>* warm_start = nullptr);

struct CoxnetPathFit {
    CoxModel model;  // refit on all rows at the selected lambda
    std::vector<double> lambda_path;
    std::vector<double> holdout_cindex;  // per path point
    std::size_t selected = 0;
};

// Seeded 70/30 row split (row indices, each ascending), the same split the
// path fit and the feature screen use internally.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> survival_holdout_split(
    std::size_t n, std::uint64_t seed);

// Fits a 20-point log-spaced lambda path (lambda_max down four decades) on a
// seeded 70/30 split, picks the lambda with the best held-out concordance
// (ties prefer the sparser, larger lambda), then refits on every row.
CoxnetPathFit fit_coxnet_path(const FeatureMatrix& z, const std::vector<double>& durations,
                              const std::vector<int>& events, double alpha = 0.5,
                              int n_lambda = 20, std::uint64_t seed = 0, int max_epochs = 1000,
                              double tolerance = 1e-6);

std::vector<double> linear_risk(const FeatureMatrix& z, const CoxModel& model);

// S(t | z) = exp(-H0(t) * exp(z beta)); H0 interpolates as a step function.
double predict_survival(const CoxModel& model, double risk_eta, double time);

// Kaplan-Meier step curve. survival_at(t) is right-continuous; the left limit
// survival_before(t) is what inverse-censoring weights need at G(T-).
struct KmCurve {
    std::vector<double> times;     // ascending drop times
    std::vector<double> survival;  // value at and after the matching time
    double survival_at(double t) const;
    double survival_before(double t) const;
};

// KM estimate of the censoring distribution G(t) (censorings as drops).
KmCurve censoring_km(const std::vector<double>& durations, const std::vector<int>& events);

// Inverse-censoring-weighted Brier score at `time`: observed failures by t
// weigh (0 - S)^2 by 1/G(T-), survivors past t weigh (1 - S)^2 by 1/G(t),
// rows censored by t contribute zero. Throws DataError when a needed censoring
// weight is zero.
double weighted_brier(const std::vector<double>& survival_at_time,
                      const std::vector<double>& durations, const std::vector<int>& events,
                      const KmCurve& censoring, double time);

// Harrell concordance: pairs with T_i < T_j and event_i = 1 are comparable;
// risk ties count one half. Returns 0.5 when no pair is comparable.
double concordance_index(const std::vector<double>& risk, const std::vector<double>& durations,
                         const std::vector<int>& events);

struct ScreenRow {
    std::string column;
    double cindex = 0.5;  // held-out, single-covariate model
    double beta = 0.0;
    bool flagged = false;  // cindex > 0.55
};

// Fits one unpenalized single-covariate model per encoded column on a seeded
// 70/30 split and reports held-out concordance, sorted descending.
std::vector<ScreenRow> single_feature_screen(const FeatureMatrix& z,
                                             const std::vector<double>& durations,
                                             const std::vector<int>& events,
                                             std::uint64_t seed = 0);

struct MaterialSummaryRow {
    std::string material;
    std::size_t count = 0;
    // Quartiles of the per-pipe conditional survival over the next
    // `horizon_years` years, S(d + h | z) / S(d | z).
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

std::vector<MaterialSummaryRow> material_survival_summary(
    const SurvivalDataset& data, const FeatureMatrix& z, const CoxModel& model,
    double horizon_years = 2.0);

struct MaterialCurvePoint {
    std::string material;
    int years_ahead = 0;
    double mean_survival = 1.0;  // mean conditional survival over pipes
};

// Forward-looking mean conditional survival per material for
// years_ahead = 0..max_years_ahead.
std::vector<MaterialCurvePoint> material_survival_curves(const SurvivalDataset& data,
                                                         const FeatureMatrix& z,
                                                         const CoxModel& model,
                                                         int max_years_ahead = 30);

// Linear-interpolation quantile (type 7): h = (n - 1) p on the sorted sample.
double quantile_linear(std::vector<double> values, double p);

}  // namespace pipefail
