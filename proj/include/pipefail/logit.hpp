#pragma once

#include <string>
#include <vector>

#include "pipefail/features.hpp"

namespace pipefail {

struct LogitModel {
    std::vector<std::string> column_names;
    std::vector<double> beta;
    double intercept = 0.0;
    double lambda_l1 = 0.0;
    bool converged = false;
    int epochs_run = 0;
};

// Minimizes mean cross-entropy + lambda_l1 * ||beta||_1 (intercept
// unpenalized) by cyclic coordinate descent with soft-thresholding on the
// quadratic majorizer using the p(1-p) <= 1/4 curvature bound, which makes the
// penalized objective non-increasing every epoch. Converged when the largest
// coordinate update in an epoch is <= tolerance. Throws DataError on a single
// class or non-finite inputs.
LogitModel fit_logit_l1(const FeatureMatrix& matrix, const std::vector<int>& labels,
                        double lambda_l1, int max_epochs = 1000, double tolerance = 1e-6);

// Probabilities clamped into (0, 1). Throws InvalidArgument when the matrix
// columns differ from the model's.
std::vector<double> predict_proba_logit(const LogitModel& model, const FeatureMatrix& matrix);

// (name, beta) sorted by |beta| descending; exact zeros last; ties keep the
// original column order.
std::vector<std::pair<std::string, double>> rank_coefficients(const LogitModel& model);

// Mean cross-entropy, no penalty. Evaluated in a numerically stable form.
double logistic_loss(const Matrix& values, const std::vector<int>& labels,
                     const std::vector<double>& beta, double intercept);

// Gradient of logistic_loss: d/d(beta_j) and d/d(intercept).
struct LogisticGradient {
    std::vector<double> beta;
    double intercept = 0.0;
};
LogisticGradient logistic_gradient(const Matrix& values, const std::vector<int>& labels,
                                   const std::vector<double>& beta, double intercept);

// logistic_loss + lambda_l1 * ||beta||_1.
double logit_objective(const Matrix& values, const std::vector<int>& labels,
                       const std::vector<double>& beta, double intercept, double lambda_l1);

// Default tuning grid: 9 points log-spaced over [1e-4, 1].
std::vector<double> logit_lambda_grid();

double sigmoid(double margin);

}  // namespace pipefail
