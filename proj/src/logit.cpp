#include "pipefail/logit.hpp"

#include <algorithm>
#include <cmath>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

constexpr double kProbClamp = 1e-12;

double soft_threshold(double value, double amount) {
    if (value > amount) return value - amount;
    if (value < -amount) return value + amount;
    return 0.0;
}

// log(1 + exp(m)) without overflow.
double softplus(double m) { return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))); }

void check_inputs(const Matrix& values, const std::vector<int>& labels) {
    if (values.rows() != labels.size()) {
        throw InvalidArgument("logit: matrix rows and label count differ");
    }
    if (values.rows() == 0) throw InvalidArgument("logit: empty input");
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == 0) has_neg = true;
        else throw InvalidArgument("logit: labels must be 0 or 1");
    }
    if (!has_pos || !has_neg) throw DataError("logit: both classes must be present");
    for (double v : values.data()) {
        if (!std::isfinite(v)) throw DataError("logit: non-finite value in feature matrix");
    }
}

}  // namespace

double sigmoid(double margin) {
    if (margin >= 0.0) {
        return 1.0 / (1.0 + std::exp(-margin));
    }
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

double logistic_loss(const Matrix& values, const std::vector<int>& labels,
                     const std::vector<double>& beta, double intercept) {
    const std::size_t n = values.rows();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double margin = intercept;
        const auto row = values.row(i);
        for (std::size_t j = 0; j < beta.size(); ++j) margin += beta[j] * row[j];
        total += softplus(margin) - double(labels[i]) * margin;
    }
    return total / double(n);
}

LogisticGradient logistic_gradient(const Matrix& values, const std::vector<int>& labels,
                                   const std::vector<double>& beta, double intercept) {
    const std::size_t n = values.rows();
    LogisticGradient grad;
    grad.beta.assign(values.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double margin = intercept;
        const auto row = values.row(i);
        for (std::size_t j = 0; j < beta.size(); ++j) margin += beta[j] * row[j];
        const double residual = sigmoid(margin) - double(labels[i]);
        grad.intercept += residual;
        for (std::size_t j = 0; j < values.cols(); ++j) grad.beta[j] += residual * row[j];
    }
    const double scale = 1.0 / double(n);
    grad.intercept *= scale;
    for (double& g : grad.beta) g *= scale;
    return grad;
}

double logit_objective(const Matrix& values, const std::vector<int>& labels,
                       const std::vector<double>& beta, double intercept, double lambda_l1) {
    double penalty = 0.0;
    for (double b : beta) penalty += std::abs(b);
    return logistic_loss(values, labels, beta, intercept) + lambda_l1 * penalty;
}

LogitModel fit_logit_l1(const FeatureMatrix& matrix, const std::vector<int>& labels,
                        double lambda_l1, int max_epochs, double tolerance) {
    const Matrix& X = matrix.values;
    check_inputs(X, labels);
    if (lambda_l1 < 0.0) throw InvalidArgument("logit: lambda_l1 must be >= 0");
    if (max_epochs < 1) throw InvalidArgument("logit: max_epochs must be >= 1");

    const std::size_t n = X.rows();
    const std::size_t d = X.cols();

    LogitModel model;
    model.column_names = matrix.column_names;
    model.beta.assign(d, 0.0);
    model.lambda_l1 = lambda_l1;

    // Fixed curvature bounds: (1/4n) sum x^2 per coordinate majorizes the
    // logistic curvature, so every update decreases the penalized objective.
    std::vector<double> curvature(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) curvature[j] += row[j] * row[j];
    }
    for (double& h : curvature) h /= 4.0 * double(n);

    std::vector<double> margin(n, 0.0);
    std::vector<double> prob(n, 0.5);

    auto shift_coordinate = [&](std::size_t j, double delta) {
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += delta * X(i, j);
            prob[i] = sigmoid(margin[i]);
        }
    };

    const double inv_n = 1.0 / double(n);
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        double max_delta = 0.0;

        double grad0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) grad0 += prob[i] - double(labels[i]);
        grad0 *= inv_n;
        const double delta0 = -grad0 / 0.25;
        if (delta0 != 0.0) {
            model.intercept += delta0;
            for (std::size_t i = 0; i < n; ++i) {
                margin[i] += delta0;
                prob[i] = sigmoid(margin[i]);
            }
            max_delta = std::abs(delta0);
        }

        for (std::size_t j = 0; j < d; ++j) {
            if (curvature[j] == 0.0) continue;  // all-zero column stays at 0
            double grad = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                grad += (prob[i] - double(labels[i])) * X(i, j);
            }
            grad *= inv_n;
            const double updated =
                soft_threshold(curvature[j] * model.beta[j] - grad, lambda_l1) / curvature[j];
            const double delta = updated - model.beta[j];
            if (delta != 0.0) {
                model.beta[j] = updated;
                shift_coordinate(j, delta);
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }

        model.epochs_run = epoch + 1;
        if (max_delta <= tolerance) {
            model.converged = true;
            break;
        }
    }
    return model;
}

std::vector<double> predict_proba_logit(const LogitModel& model, const FeatureMatrix& matrix) {
    if (matrix.column_names != model.column_names) {
        throw InvalidArgument("logit predict: matrix columns do not match the model");
    }
    std::vector<double> out(matrix.values.rows());
    for (std::size_t i = 0; i < matrix.values.rows(); ++i) {
        double margin = model.intercept;
        const auto row = matrix.values.row(i);
        for (std::size_t j = 0; j < model.beta.size(); ++j) margin += model.beta[j] * row[j];
        out[i] = std::clamp(sigmoid(margin), kProbClamp, 1.0 - kProbClamp);
    }
    return out;
}

std::vector<std::pair<std::string, double>> rank_coefficients(const LogitModel& model) {
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(model.beta.size());
    for (std::size_t j = 0; j < model.beta.size(); ++j) {
        ranked.emplace_back(model.column_names[j], model.beta[j]);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return std::abs(a.second) > std::abs(b.second);
    });
    return ranked;
}

std::vector<double> logit_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 9; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * double(i)));
    return grid;
}

}  // namespace pipefail
