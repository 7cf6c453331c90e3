#include "pipefail/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pipefail/errors.hpp"
#include "pipefail/rng.hpp"

namespace pipefail {

namespace {

constexpr double kEtaClamp = 300.0;

double clamped_exp(double eta) { return std::exp(std::clamp(eta, -kEtaClamp, kEtaClamp)); }

void check_survival_inputs(std::size_t rows, const std::vector<double>& durations,
                           const std::vector<int>& events) {
    if (rows == 0 || durations.size() != rows || events.size() != rows) {
        throw InvalidArgument("survival: durations/events must align with a non-empty matrix");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (!(durations[i] > 0.0) || !std::isfinite(durations[i])) {
            throw InvalidArgument("survival: durations must be positive and finite");
        }
        if (events[i] != 0 && events[i] != 1) {
            throw InvalidArgument("survival: events must be 0 or 1");
        }
    }
}

// Rows sorted by duration descending, grouped by equal duration, so one pass
// accumulates every risk-set sum.
struct RiskGroups {
    std::vector<std::size_t> order;
    std::vector<std::size_t> group_begin;  // offsets into order, one past-the-end sentinel
    std::vector<int> group_events;

    static RiskGroups build(const std::vector<double>& durations, const std::vector<int>& events) {
        RiskGroups rg;
        const std::size_t n = durations.size();
        rg.order.resize(n);
        std::iota(rg.order.begin(), rg.order.end(), std::size_t{0});
        std::sort(rg.order.begin(), rg.order.end(), [&](std::size_t a, std::size_t b) {
            if (durations[a] != durations[b]) return durations[a] > durations[b];
            return a < b;
        });
        std::size_t pos = 0;
        while (pos < n) {
            std::size_t end = pos;
            int d = 0;
            while (end < n && durations[rg.order[end]] == durations[rg.order[pos]]) {
                d += events[rg.order[end]];
                ++end;
            }
            rg.group_begin.push_back(pos);
            rg.group_events.push_back(d);
            pos = end;
        }
        rg.group_begin.push_back(n);
        return rg;
    }
};

double negative_loglik(const RiskGroups& rg, const std::vector<double>& eta,
                       const std::vector<double>& exp_eta, const std::vector<int>& events) {
    double s0 = 0.0;
    double ll = 0.0;
    for (std::size_t g = 0; g + 1 < rg.group_begin.size(); ++g) {
        for (std::size_t k = rg.group_begin[g]; k < rg.group_begin[g + 1]; ++k) {
            s0 += exp_eta[rg.order[k]];
        }
        const int d = rg.group_events[g];
        if (d == 0) continue;
        for (std::size_t k = rg.group_begin[g]; k < rg.group_begin[g + 1]; ++k) {
            const std::size_t row = rg.order[k];
            if (events[row] == 1) ll += eta[row];
        }
        ll -= static_cast<double>(d) * std::log(s0);
    }
    return -ll;
}

// Sparse column view: rows with a non-zero value (one-hot blocks are mostly
// zero, and zero entries never change eta).
struct SparseColumn {
    std::vector<std::uint32_t> rows;
    std::vector<double> values;
};

std::vector<SparseColumn> sparse_columns(const Matrix& values) {
    std::vector<SparseColumn> cols(values.cols());
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            if (v != 0.0) {
                cols[j].rows.push_back(static_cast<std::uint32_t>(i));
                cols[j].values.push_back(v);
            }
        }
    }
    return cols;
}

// Gradient and exact diagonal curvature of the negative log-likelihood for
// one column.
void column_derivatives(const RiskGroups& rg, const Matrix& values, std::size_t j,
                        const std::vector<double>& exp_eta, const std::vector<int>& events,
                        double* grad_out, double* hess_out) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    double grad = 0.0, hess = 0.0;
    for (std::size_t g = 0; g + 1 < rg.group_begin.size(); ++g) {
        for (std::size_t k = rg.group_begin[g]; k < rg.group_begin[g + 1]; ++k) {
            const std::size_t row = rg.order[k];
            const double w = exp_eta[row];
            const double z = values(row, j);
            s0 += w;
            s1 += w * z;
            s2 += w * z * z;
        }
        const int d = rg.group_events[g];
        if (d == 0) continue;
        double event_z = 0.0;
        for (std::size_t k = rg.group_begin[g]; k < rg.group_begin[g + 1]; ++k) {
            const std::size_t row = rg.order[k];
            if (events[row] == 1) event_z += values(row, j);
        }
        const double mean = s1 / s0;
        grad -= event_z - static_cast<double>(d) * mean;
        hess += static_cast<double>(d) * (s2 / s0 - mean * mean);
    }
    *grad_out = grad;
    *hess_out = hess;
}

double soft_threshold(double value, double threshold) {
    if (value > threshold) return value - threshold;
    if (value < -threshold) return value + threshold;
    return 0.0;
}

void breslow_baseline(const RiskGroups& rg, const std::vector<double>& durations,
                      const std::vector<double>& exp_eta, CoxModel* model) {
    // Groups run from the largest duration down; the baseline wants ascending
    // event times, so collect increments and reverse.
    std::vector<double> times, increments;
    double s0 = 0.0;
    for (std::size_t g = 0; g + 1 < rg.group_begin.size(); ++g) {
        for (std::size_t k = rg.group_begin[g]; k < rg.group_begin[g + 1]; ++k) {
            s0 += exp_eta[rg.order[k]];
        }
        const int d = rg.group_events[g];
        if (d == 0) continue;
        times.push_back(durations[rg.order[rg.group_begin[g]]]);
        increments.push_back(static_cast<double>(d) / s0);
    }
    std::reverse(times.begin(), times.end());
    std::reverse(increments.begin(), increments.end());
    model->baseline_times = std::move(times);
    model->baseline_cumhaz.resize(increments.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        cum += increments[i];
        model->baseline_cumhaz[i] = cum;
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = Rng::substream(seed, 0x73706c69u);  // survival split stream
    for (std::size_t i = n; i > 1; --i) {
        const std::uint64_t j = rng.uniform_int(i);
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(j)]);
    }
    const std::size_t n_train = (n * 7) / 10;
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

FeatureMatrix gather_rows(const FeatureMatrix& z, const std::vector<std::size_t>& rows) {
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
std::vector<T> gather(const std::vector<T>& source, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(source[r]);
    return out;
}

int count_events(const std::vector<int>& events) {
    int total = 0;
    for (int e : events) total += e;
    return total;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> survival_holdout_split(
    std::size_t n, std::uint64_t seed) {
    return split_indices(n, seed);
}

double cox_partial_loglik(const FeatureMatrix& z, const std::vector<double>& durations,
                          const std::vector<int>& events, const std::vector<double>& beta) {
    check_survival_inputs(z.values.rows(), durations, events);
    if (beta.size() != z.values.cols()) {
        throw InvalidArgument("cox_partial_loglik: beta length does not match the matrix");
    }
    const std::size_t n = z.values.rows();
    std::vector<double> eta(n, 0.0), exp_eta(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        const auto row = z.values.row(i);
        for (std::size_t j = 0; j < beta.size(); ++j) v += row[j] * beta[j];
        eta[i] = v;
        exp_eta[i] = clamped_exp(v);
    }
    const RiskGroups rg = RiskGroups::build(durations, events);
    return -negative_loglik(rg, eta, exp_eta, events);
}

std::vector<double> cox_score(const FeatureMatrix& z, const std::vector<double>& durations,
                              const std::vector<int>& events, const std::vector<double>& beta) {
    check_survival_inputs(z.values.rows(), durations, events);
    if (beta.size() != z.values.cols()) {
        throw InvalidArgument("cox_score: beta length does not match the matrix");
    }
    const std::size_t n = z.values.rows();
    std::vector<double> exp_eta(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        const auto row = z.values.row(i);
        for (std::size_t j = 0; j < beta.size(); ++j) v += row[j] * beta[j];
        exp_eta[i] = clamped_exp(v);
    }
    const RiskGroups rg = RiskGroups::build(durations, events);
    std::vector<double> grad(z.values.cols());
    for (std::size_t j = 0; j < grad.size(); ++j) {
        double g = 0.0, h = 0.0;
        column_derivatives(rg, z.values, j, exp_eta, events, &g, &h);
        grad[j] = g;
    }
    return grad;
}

CoxModel fit_coxnet(const FeatureMatrix& z, const std::vector<double>& durations,
                    const std::vector<int>& events, double lambda, double alpha, int max_epochs,
                    double tolerance, const std::vector<double>* warm_start) {
    check_survival_inputs(z.values.rows(), durations, events);
    if (lambda < 0.0 || alpha < 0.0 || alpha > 1.0) {
        throw InvalidArgument("fit_coxnet: lambda must be >= 0 and alpha within [0, 1]");
    }
    if (count_events(events) == 0) {
        throw DataError("fit_coxnet: no observed failure events");
    }
    const std::size_t n = z.values.rows();
    const std::size_t d = z.values.cols();

    CoxModel model;
    model.column_names = z.column_names;
    model.lambda = lambda;
    model.alpha = alpha;
    model.beta.assign(d, 0.0);
    if (warm_start != nullptr) {
        if (warm_start->size() != d) {
            throw InvalidArgument("fit_coxnet: warm start length does not match the matrix");
        }
        model.beta = *warm_start;
    }

    const RiskGroups rg = RiskGroups::build(durations, events);
    const std::vector<SparseColumn> cols = sparse_columns(z.values);

    std::vector<double> eta(n, 0.0), exp_eta(n);
    for (std::size_t j = 0; j < d; ++j) {
        if (model.beta[j] == 0.0) continue;
        for (std::size_t k = 0; k < cols[j].rows.size(); ++k) {
            eta[cols[j].rows[k]] += model.beta[j] * cols[j].values[k];
        }
    }
    for (std::size_t i = 0; i < n; ++i) exp_eta[i] = clamped_exp(eta[i]);

    const double l1 = lambda * alpha;
    const double l2 = lambda * (1.0 - alpha);
    auto penalty = [&](const std::vector<double>& beta) {
        double p = 0.0;
        for (double b : beta) p += l1 * std::abs(b) + 0.5 * l2 * b * b;
        return p;
    };

    double nll = negative_loglik(rg, eta, exp_eta, events);
    double pen = penalty(model.beta);
    std::vector<double> saved_eta, saved_exp;

    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        double max_step = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double grad = 0.0, hess = 0.0;
            column_derivatives(rg, z.values, j, exp_eta, events, &grad, &hess);
            const double denom = hess + l2;
            if (denom <= 1e-12) continue;
            double target = soft_threshold(hess * model.beta[j] - grad, l1) / denom;
            if (target == model.beta[j]) continue;

            const SparseColumn& col = cols[j];
            saved_eta.resize(col.rows.size());
            saved_exp.resize(col.rows.size());
            for (std::size_t k = 0; k < col.rows.size(); ++k) {
                saved_eta[k] = eta[col.rows[k]];
                saved_exp[k] = exp_eta[col.rows[k]];
            }
            const double old_beta = model.beta[j];
            const double old_pen_j = l1 * std::abs(old_beta) + 0.5 * l2 * old_beta * old_beta;
            bool accepted = false;
            for (int halving = 0; halving < 40; ++halving) {
                const double delta = target - old_beta;
                if (std::abs(delta) < 1e-15) break;
                for (std::size_t k = 0; k < col.rows.size(); ++k) {
                    const std::size_t row = col.rows[k];
                    eta[row] = saved_eta[k] + delta * col.values[k];
                    exp_eta[row] = clamped_exp(eta[row]);
                }
                const double nll_new = negative_loglik(rg, eta, exp_eta, events);
                const double pen_new =
                    pen - old_pen_j + l1 * std::abs(target) + 0.5 * l2 * target * target;
                if (nll_new + pen_new <= nll + pen + 1e-10) {
                    model.beta[j] = target;
                    nll = nll_new;
                    pen = pen_new;
                    max_step = std::max(max_step, std::abs(delta));
                    accepted = true;
                    break;
                }
                target = old_beta + delta * 0.5;
            }
            if (!accepted) {
                for (std::size_t k = 0; k < col.rows.size(); ++k) {
                    eta[col.rows[k]] = saved_eta[k];
                    exp_eta[col.rows[k]] = saved_exp[k];
                }
            }
        }
        if (max_step <= tolerance) {
            model.converged = true;
            break;
        }
    }

    breslow_baseline(rg, durations, exp_eta, &model);
    return model;
}

CoxnetPathFit fit_coxnet_path(const FeatureMatrix& z, const std::vector<double>& durations,
                              const std::vector<int>& events, double alpha, int n_lambda,
                              std::uint64_t seed, int max_epochs, double tolerance) {
    check_survival_inputs(z.values.rows(), durations, events);
    if (n_lambda < 1) {
        throw InvalidArgument("fit_coxnet_path: n_lambda must be positive");
    }
    if (count_events(events) == 0) {
        throw DataError("fit_coxnet_path: no observed failure events");
    }
    const std::size_t n = z.values.rows();
    auto [train_rows, test_rows] = split_indices(n, seed);
    const FeatureMatrix z_train = gather_rows(z, train_rows);
    const FeatureMatrix z_test = gather_rows(z, test_rows);
    const std::vector<double> dur_train = gather(durations, train_rows);
    const std::vector<double> dur_test = gather(durations, test_rows);
    const std::vector<int> ev_train = gather(events, train_rows);
    const std::vector<int> ev_test = gather(events, test_rows);
    if (count_events(ev_train) == 0 || count_events(ev_test) == 0) {
        throw DataError("fit_coxnet_path: a split holds no failure events; need more data");
    }

    const std::vector<double> zero(z.values.cols(), 0.0);
    const std::vector<double> grad0 = cox_score(z_train, dur_train, ev_train, zero);
    double lambda_max = 0.0;
    for (double g : grad0) lambda_max = std::max(lambda_max, std::abs(g));
    lambda_max /= std::max(alpha, 1e-3);
    if (!(lambda_max > 0.0)) lambda_max = 1.0;

    CoxnetPathFit fit;
    fit.lambda_path.resize(static_cast<std::size_t>(n_lambda));
    for (int k = 0; k < n_lambda; ++k) {
        const double frac = n_lambda == 1 ? 0.0
                                          : static_cast<double>(k) /
                                                static_cast<double>(n_lambda - 1);
        fit.lambda_path[static_cast<std::size_t>(k)] = lambda_max * std::pow(10.0, -4.0 * frac);
    }

    std::vector<double> warm(z.values.cols(), 0.0);
    std::vector<double> best_train_beta = warm;
    double best_c = -1.0;
    fit.holdout_cindex.resize(fit.lambda_path.size());
    for (std::size_t k = 0; k < fit.lambda_path.size(); ++k) {
        const CoxModel m = fit_coxnet(z_train, dur_train, ev_train, fit.lambda_path[k], alpha,
                                      max_epochs, tolerance, &warm);
        warm = m.beta;
        std::vector<double> risk(test_rows.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            double v = 0.0;
            const auto row = z_test.values.row(i);
            for (std::size_t j = 0; j < m.beta.size(); ++j) v += row[j] * m.beta[j];
            risk[i] = v;
        }
        const double c = concordance_index(risk, dur_test, ev_test);
        fit.holdout_cindex[k] = c;
        if (c > best_c) {
            best_c = c;
            fit.selected = k;
            best_train_beta = m.beta;
        }
    }

    fit.model = fit_coxnet(z, durations, events, fit.lambda_path[fit.selected], alpha, max_epochs,
                           tolerance, &best_train_beta);
    return fit;
}

std::vector<double> linear_risk(const FeatureMatrix& z, const CoxModel& model) {
    if (z.column_names != model.column_names) {
        throw InvalidArgument("linear_risk: feature columns do not match the model");
    }
    std::vector<double> risk(z.values.rows());
    for (std::size_t i = 0; i < z.values.rows(); ++i) {
        double v = 0.0;
        const auto row = z.values.row(i);
        for (std::size_t j = 0; j < model.beta.size(); ++j) v += row[j] * model.beta[j];
        risk[i] = v;
    }
    return risk;
}

double predict_survival(const CoxModel& model, double risk_eta, double time) {
    const auto& times = model.baseline_times;
    auto it = std::upper_bound(times.begin(), times.end(), time);
    if (it == times.begin()) return 1.0;
    const std::size_t idx = static_cast<std::size_t>(it - times.begin()) - 1;
    const double h0 = model.baseline_cumhaz[idx];
    return std::exp(-h0 * clamped_exp(risk_eta));
}

double KmCurve::survival_at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double KmCurve::survival_before(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve censoring_km(const std::vector<double>& durations, const std::vector<int>& events) {
    check_survival_inputs(durations.size(), durations, events);
    const std::size_t n = durations.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });

    KmCurve curve;
    double surv = 1.0;
    std::size_t pos = 0;
    std::size_t at_risk = n;
    while (pos < n) {
        std::size_t end = pos;
        int drops = 0;
        while (end < n && durations[order[end]] == durations[order[pos]]) {
            drops += events[order[end]] == 0 ? 1 : 0;
            ++end;
        }
        if (drops > 0) {
            surv *= 1.0 - static_cast<double>(drops) / static_cast<double>(at_risk);
            curve.times.push_back(durations[order[pos]]);
            curve.survival.push_back(surv);
        }
        at_risk -= end - pos;
        pos = end;
    }
    return curve;
}

double weighted_brier(const std::vector<double>& survival_at_time,
                      const std::vector<double>& durations, const std::vector<int>& events,
                      const KmCurve& censoring, double time) {
    check_survival_inputs(durations.size(), durations, events);
    if (survival_at_time.size() != durations.size()) {
        throw InvalidArgument("weighted_brier: prediction vector does not align with rows");
    }
    const double g_t = censoring.survival_at(time);
    double total = 0.0;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        const double s = survival_at_time[i];
        if (durations[i] <= time && events[i] == 1) {
            const double g = censoring.survival_before(durations[i]);
            if (g <= 0.0) {
                throw DataError("weighted_brier: censoring weight is zero at time " +
                                std::to_string(durations[i]));
            }
            total += s * s / g;
        } else if (durations[i] > time) {
            if (g_t <= 0.0) {
                throw DataError("weighted_brier: censoring weight is zero at time " +
                                std::to_string(time));
            }
            total += (1.0 - s) * (1.0 - s) / g_t;
        }
    }
    return total / static_cast<double>(durations.size());
}

double concordance_index(const std::vector<double>& risk, const std::vector<double>& durations,
                         const std::vector<int>& events) {
    check_survival_inputs(durations.size(), durations, events);
    if (risk.size() != durations.size()) {
        throw InvalidArgument("concordance_index: risk vector does not align with rows");
    }
    const std::size_t n = durations.size();

    // Compress risk values to ranks and count pairs with a Fenwick tree over
    // already-processed event rows (earlier durations), so ties and large
    // inputs stay exact and fast.
    std::vector<double> sorted_risk = risk;
    std::sort(sorted_risk.begin(), sorted_risk.end());
    sorted_risk.erase(std::unique(sorted_risk.begin(), sorted_risk.end()), sorted_risk.end());
    const std::size_t m = sorted_risk.size();
    auto rank_of = [&](double value) {
        return static_cast<std::size_t>(
            std::lower_bound(sorted_risk.begin(), sorted_risk.end(), value) -
            sorted_risk.begin());
    };
    std::vector<double> tree(m + 1, 0.0);
    auto add = [&](std::size_t rank) {
        for (std::size_t i = rank + 1; i <= m; i += i & (~i + 1)) tree[i] += 1.0;
    };
    auto prefix = [&](std::size_t count) {  // ranks < count
        double s = 0.0;
        for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree[i];
        return s;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });

    double concordant = 0.0;
    double comparable = 0.0;
    double inserted = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        while (end < n && durations[order[end]] == durations[order[pos]]) ++end;
        for (std::size_t k = pos; k < end; ++k) {
            const std::size_t row = order[k];
            const std::size_t r = rank_of(risk[row]);
            const double less = prefix(r);
            const double less_equal = prefix(r + 1);
            const double equal = less_equal - less;
            const double greater = inserted - less_equal;
            concordant += greater + 0.5 * equal;
            comparable += inserted;
        }
        for (std::size_t k = pos; k < end; ++k) {
            const std::size_t row = order[k];
            if (events[row] == 1) {
                add(rank_of(risk[row]));
                inserted += 1.0;
            }
        }
        pos = end;
    }
    if (comparable == 0.0) return 0.5;
    return concordant / comparable;
}

std::vector<ScreenRow> single_feature_screen(const FeatureMatrix& z,
                                             const std::vector<double>& durations,
                                             const std::vector<int>& events, std::uint64_t seed) {
    check_survival_inputs(z.values.rows(), durations, events);
    if (count_events(events) == 0) {
        throw DataError("single_feature_screen: no observed failure events");
    }
    const std::size_t n = z.values.rows();
    auto [train_rows, test_rows] = split_indices(n, seed);
    const std::vector<double> dur_train = gather(durations, train_rows);
    const std::vector<double> dur_test = gather(durations, test_rows);
    const std::vector<int> ev_train = gather(events, train_rows);
    const std::vector<int> ev_test = gather(events, test_rows);
    if (count_events(ev_train) == 0 || count_events(ev_test) == 0) {
        throw DataError("single_feature_screen: a split holds no failure events; need more data");
    }

    std::vector<ScreenRow> rows;
    rows.reserve(z.values.cols());
    for (std::size_t j = 0; j < z.values.cols(); ++j) {
        FeatureMatrix single;
        single.column_names = {z.column_names[j]};
        single.values = Matrix(train_rows.size(), 1);
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            single.values(i, 0) = z.values(train_rows[i], j);
        }
        const CoxModel m = fit_coxnet(single, dur_train, ev_train, 0.0, 0.5, 500, 1e-8);
        std::vector<double> risk(test_rows.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            risk[i] = z.values(test_rows[i], j) * m.beta[0];
        }
        ScreenRow row;
        row.column = z.column_names[j];
        row.beta = m.beta[0];
        row.cindex = concordance_index(risk, dur_test, ev_test);
        row.flagged = row.cindex > 0.55;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ScreenRow& a, const ScreenRow& b) { return a.cindex > b.cindex; });
    return rows;
}

SurvivalDataset build_survival_dataset(const PanelDataset& panel, const FeatureSpec& spec) {
    spec.validate();
    SurvivalDataset data;

    std::map<int, DesignBlock> blocks;
    auto block_for = [&](int year) -> const DesignBlock& {
        auto it = blocks.find(year);
        if (it == blocks.end()) {
            it = blocks.emplace(year, engineer_derived_features(panel, year, spec)).first;
        }
        return it->second;
    };

    bool names_set = false;
    const auto& rows = panel.rows();
    std::size_t pos = 0;
    while (pos < rows.size()) {
        std::size_t end = pos;
        while (end < rows.size() && rows[end].pipe_id == rows[pos].pipe_id) ++end;
        const std::string& pipe_id = rows[pos].pipe_id;

        const auto first_fail = panel.first_failure_year(pipe_id);
        const PipeSnapshot* chosen = nullptr;
        double duration = 0.0;
        int event = 0;
        if (first_fail.has_value()) {
            for (std::size_t k = end; k > pos; --k) {
                if (rows[k - 1].snapshot_year < *first_fail) {
                    chosen = &rows[k - 1];
                    break;
                }
            }
            if (chosen == nullptr) {
                ++data.skipped_no_preceding_snapshot;
                pos = end;
                continue;
            }
            if (!chosen->install_year.has_value()) {
                throw DataError("build_survival_dataset: missing install_year for pipe " +
                                pipe_id);
            }
            duration = static_cast<double>(*first_fail - *chosen->install_year);
            event = 1;
        } else {
            chosen = &rows[end - 1];
            if (!chosen->install_year.has_value()) {
                throw DataError("build_survival_dataset: missing install_year for pipe " +
                                pipe_id);
            }
            duration = static_cast<double>(chosen->snapshot_year - *chosen->install_year);
            event = 0;
        }
        if (!(duration > 0.0)) {
            ++data.skipped_nonpositive_duration;
            pos = end;
            continue;
        }

        const DesignBlock& block = block_for(chosen->snapshot_year);
        const auto it = std::lower_bound(block.row_ids.begin(), block.row_ids.end(), pipe_id);
        if (it == block.row_ids.end() || *it != pipe_id) {
            throw Error("build_survival_dataset: snapshot row lookup failed for " + pipe_id);
        }
        const std::size_t r = static_cast<std::size_t>(it - block.row_ids.begin());
        if (!names_set) {
            data.features.numeric_names = block.numeric_names;
            data.features.categorical_names = block.categorical_names;
            names_set = true;
        }
        data.pipe_ids.push_back(pipe_id);
        data.durations.push_back(duration);
        data.events.push_back(event);
        data.features.row_ids.push_back(pipe_id);
        data.features.row_years.push_back(chosen->snapshot_year);
        data.features.numeric.append_row(block.numeric.row(r));
        data.features.categorical_rows.push_back(block.categorical_rows[r]);
        pos = end;
    }
    if (data.pipe_ids.empty()) {
        throw DataError("build_survival_dataset: no usable pipe histories");
    }
    return data;
}

double quantile_linear(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    p = std::clamp(p, 0.0, 1.0);
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

// S(d + h | z) / S(d | z), the chance of lasting h more years given survival
// to the row's current duration.
double conditional_survival(const CoxModel& model, double risk_eta, double duration,
                            double horizon) {
    const double now = predict_survival(model, risk_eta, duration);
    if (now <= 0.0) return 0.0;
    const double later = predict_survival(model, risk_eta, duration + horizon);
    return std::min(1.0, later / now);
}

std::size_t material_column(const DesignBlock& features) {
    const auto it = std::find(features.categorical_names.begin(),
                              features.categorical_names.end(), "material");
    if (it == features.categorical_names.end()) {
        throw InvalidArgument("material summaries need the material column in the feature spec");
    }
    return static_cast<std::size_t>(it - features.categorical_names.begin());
}

}  // namespace

std::vector<MaterialSummaryRow> material_survival_summary(const SurvivalDataset& data,
                                                          const FeatureMatrix& z,
                                                          const CoxModel& model,
                                                          double horizon_years) {
    if (z.values.rows() != data.durations.size()) {
        throw InvalidArgument("material_survival_summary: matrix does not align with the dataset");
    }
    const std::size_t mat_col = material_column(data.features);
    const std::vector<double> risk = linear_risk(z, model);
    std::map<std::string, std::vector<double>> by_material;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        const double cs = conditional_survival(model, risk[i], data.durations[i], horizon_years);
        by_material[data.features.categorical_rows[i][mat_col]].push_back(cs);
    }
    std::vector<MaterialSummaryRow> rows;
    rows.reserve(by_material.size());
    for (const auto& [material, values] : by_material) {
        MaterialSummaryRow row;
        row.material = material;
        row.count = values.size();
        row.q1 = quantile_linear(values, 0.25);
        row.median = quantile_linear(values, 0.5);
        row.q3 = quantile_linear(values, 0.75);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.median != b.median) return a.median > b.median;
        return a.material < b.material;
    });
    return rows;
}

std::vector<MaterialCurvePoint> material_survival_curves(const SurvivalDataset& data,
                                                         const FeatureMatrix& z,
                                                         const CoxModel& model,
                                                         int max_years_ahead) {
    if (z.values.rows() != data.durations.size()) {
        throw InvalidArgument("material_survival_curves: matrix does not align with the dataset");
    }
    if (max_years_ahead < 0) {
        throw InvalidArgument("material_survival_curves: max_years_ahead must be >= 0");
    }
    const std::size_t mat_col = material_column(data.features);
    const std::vector<double> risk = linear_risk(z, model);
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        members[data.features.categorical_rows[i][mat_col]].push_back(i);
    }
    std::vector<MaterialCurvePoint> points;
    for (const auto& [material, rows] : members) {
        for (int h = 0; h <= max_years_ahead; ++h) {
            double total = 0.0;
            for (std::size_t i : rows) {
                total += conditional_survival(model, risk[i], data.durations[i],
                                              static_cast<double>(h));
            }
            MaterialCurvePoint point;
            point.material = material;
            point.years_ahead = h;
            point.mean_survival = total / static_cast<double>(rows.size());
            points.push_back(std::move(point));
        }
    }
    return points;
}

}  // namespace pipefail
