// Acceptance gate. Each criterion prints one PASS/FAIL line and enforces a
// wall-clock budget; the process exits nonzero when any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipefail/commands.hpp"
#include "pipefail/cv.hpp"
#include "pipefail/features.hpp"
#include "pipefail/gbt.hpp"
#include "pipefail/logit.hpp"
#include "pipefail/metrics.hpp"
#include "pipefail/panel.hpp"
#include "pipefail/rng.hpp"
#include "pipefail/run_config.hpp"
#include "pipefail/shap.hpp"
#include "pipefail/smote.hpp"
#include "pipefail/survival.hpp"
#include "pipefail/synth.hpp"

namespace fs = std::filesystem;
using namespace pipefail;

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void require_near(double a, double b, double tol, const std::string& what) {
    if (!near(a, b, tol)) {
        std::ostringstream out;
        out << what << " (got " << a << ", want " << b << " +- " << tol << ")";
        throw std::runtime_error(out.str());
    }
}

FeatureMatrix named_matrix(Matrix values) {
    FeatureMatrix out;
    out.values = std::move(values);
    for (std::size_t j = 0; j < out.values.cols(); ++j) {
        out.column_names.push_back("x" + std::to_string(j));
    }
    for (std::size_t i = 0; i < out.values.rows(); ++i) {
        out.row_ids.push_back("r" + std::to_string(i));
    }
    return out;
}

FeatureMatrix take_rows(const FeatureMatrix& z, const std::vector<std::size_t>& rows) {
    FeatureMatrix out;
    out.column_names = z.column_names;
    out.values = Matrix(rows.size(), z.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row_ids.push_back(z.row_ids[rows[r]]);
        for (std::size_t j = 0; j < z.values.cols(); ++j) {
            out.values(r, j) = z.values(rows[r], j);
        }
    }
    return out;
}

double tree_value(const Tree& tree, std::span<const double> row) {
    int at = 0;
    while (!tree.nodes[std::size_t(at)].is_leaf()) {
        const TreeNode& node = tree.nodes[std::size_t(at)];
        at = row[std::size_t(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return tree.nodes[std::size_t(at)].weight;
}

double mean_logloss(const std::vector<double>& margins, const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double signed_margin = labels[i] == 1 ? margins[i] : -margins[i];
        total += signed_margin >= 0.0 ? std::log1p(std::exp(-signed_margin))
                                      : std::log1p(std::exp(signed_margin)) - signed_margin;
    }
    return total / double(margins.size());
}

// Coalition value of one tree: features in the mask follow the row, the rest
// descend both children weighted by training cover. Second implementation of
// the game tree_shap charges, used as the exhaustive oracle below.
double coalition_value(const Tree& tree, int node, std::span<const double> row,
                       std::uint32_t mask) {
    const TreeNode& n = tree.nodes[std::size_t(node)];
    if (n.is_leaf()) return n.weight;
    if (mask & (1u << std::uint32_t(n.feature))) {
        const int next = row[std::size_t(n.feature)] <= n.threshold ? n.left : n.right;
        return coalition_value(tree, next, row, mask);
    }
    const double cl = tree.nodes[std::size_t(n.left)].cover;
    const double cr = tree.nodes[std::size_t(n.right)].cover;
    return (cl * coalition_value(tree, n.left, row, mask) +
            cr * coalition_value(tree, n.right, row, mask)) /
           (cl + cr);
}

struct BruteShap {
    std::vector<double> phi;
    double base = 0.0;
};

BruteShap brute_force_shap(const BoostedEnsemble& model, std::span<const double> row) {
    const std::size_t d = model.column_names.size();
    std::vector<double> fact(d + 1, 1.0);
    for (std::size_t i = 1; i <= d; ++i) fact[i] = fact[i - 1] * double(i);
    BruteShap out;
    out.phi.assign(d, 0.0);
    out.base = model.base_score;
    const double lr = model.params.learning_rate;
    for (const Tree& tree : model.trees) {
        std::vector<double> value(std::size_t(1) << d);
        for (std::uint32_t mask = 0; mask < value.size(); ++mask) {
            value[mask] = coalition_value(tree, 0, row, mask);
        }
        out.base += lr * value[0];
        for (std::size_t j = 0; j < d; ++j) {
            const std::uint32_t bit = 1u << j;
            double phi = 0.0;
            for (std::uint32_t mask = 0; mask < value.size(); ++mask) {
                if (mask & bit) continue;
                const std::size_t s = std::size_t(std::popcount(mask));
                const double weight = fact[s] * fact[d - 1 - s] / fact[d];
                phi += weight * (value[mask | bit] - value[mask]);
            }
            out.phi[j] += lr * phi;
        }
    }
    return out;
}

struct SimData {
    FeatureMatrix matrix;
    std::vector<int> labels;
};

SimData simulate_classification(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 0xacce97u);
    Matrix values(n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) values(i, j) = rng.normal();
        const double margin = 1.3 * values(i, 0) - 0.9 * values(i, 1) +
                              0.6 * values(i, 2 % d) * values(i, 0) + 0.4 * values(i, 3 % d);
        labels[i] = rng.uniform01() < sigmoid(margin) ? 1 : 0;
    }
    SimData out;
    out.matrix = named_matrix(std::move(values));
    out.labels = std::move(labels);
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// The command bodies print one-line summaries; keep the acceptance output to
// the per-criterion lines.
struct QuietStdout {
    std::ostringstream sink;
    std::streambuf* saved;
    QuietStdout() : saved(std::cout.rdbuf(sink.rdbuf())) {}
    ~QuietStdout() { std::cout.rdbuf(saved); }
};

// ---------------------------------------------------------------------------

void criterion_metric_oracles() {
    const ConfusionMatrix hand{6, 88, 4, 2};
    const ScoreSet hand_scores = score_set(hand, 0.5);
    require_near(hand_scores.precision, 0.6, 1e-12, "hand precision");
    require_near(hand_scores.recall, 0.75, 1e-12, "hand recall");
    require_near(hand_scores.accuracy, 0.94, 1e-12, "hand accuracy");
    require_near(hand_scores.f1, 2.0 / 3.0, 1e-12, "hand f1");
    require_near(hand_scores.mcc, 0.6390, 1e-4, "hand mcc, 4 decimals");
    require_near(hand_scores.mcc, 520.0 / std::sqrt(662400.0), 1e-12, "hand mcc, exact form");

    Rng rng = Rng::substream(20260814, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(400);
        const std::uint64_t levels = 2 + rng.uniform_int(30);
        std::vector<double> probs(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = double(rng.uniform_int(levels)) / double(levels - 1);
            labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
        }
        // Half the trials put the threshold on a score value so the strict
        // inequality is exercised.
        const double threshold =
            trial % 2 == 0 ? probs[rng.uniform_int(n)] : rng.uniform01();

        long long tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool predicted = probs[i] > threshold;
            if (labels[i] == 1) {
                predicted ? ++tp : ++fn;
            } else {
                predicted ? ++fp : ++tn;
            }
        }
        const ConfusionMatrix got = confusion_at_threshold(probs, labels, threshold);
        require(got.tp == tp && got.tn == tn && got.fp == fp && got.fn == fn,
                "confusion counts diverge from the re-tally");

        const ScoreSet scores = score_set(got, threshold);
        const double precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        const double accuracy = double(tp + tn) / double(n);
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        double mcc = 0.0;
        if (tp + fp > 0 && tp + fn > 0 && tn + fp > 0 && tn + fn > 0) {
            const long double denominator = std::sqrt((long double)(tp + fp)) *
                                            std::sqrt((long double)(tp + fn)) *
                                            std::sqrt((long double)(tn + fp)) *
                                            std::sqrt((long double)(tn + fn));
            mcc = double(((long double)tp * tn - (long double)fp * fn) / denominator);
        }
        require_near(scores.precision, precision, 1e-12, "precision re-tally");
        require_near(scores.recall, recall, 1e-12, "recall re-tally");
        require_near(scores.accuracy, accuracy, 1e-12, "accuracy re-tally");
        require_near(scores.f1, f1, 1e-12, "f1 re-tally");
        require_near(scores.mcc, mcc, 1e-12, "mcc re-tally");
    }
}

void criterion_auc_pairs() {
    Rng rng = Rng::substream(20260814, 2);
    const std::uint64_t level_choices[] = {2, 3, 5, 9, 17, 33};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(499);
        const std::uint64_t levels = level_choices[rng.uniform_int(6)];
        std::vector<double> probs(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = double(rng.uniform_int(levels)) / double(levels - 1);
            labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
        }
        labels[0] = 0;
        labels[n - 1] = 1;

        double concordant = 0.0;
        long long pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (probs[i] > probs[j]) {
                    concordant += 1.0;
                } else if (probs[i] == probs[j]) {
                    concordant += 0.5;
                }
            }
        }
        require_near(roc_auc(probs, labels), concordant / double(pairs), 1e-12,
                     "auc vs pair enumeration");
    }
}

void criterion_smote() {
    Rng rng = Rng::substream(20260814, 3);
    const std::size_t minority_n = 60, majority_n = 400, d = 6;
    Matrix values(minority_n + majority_n, d);
    std::vector<int> labels(minority_n + majority_n, 0);
    for (std::size_t i = 0; i < minority_n + majority_n; ++i) {
        const bool minority = i < minority_n;
        labels[i] = minority ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            values(i, j) = (minority ? 2.0 : -1.0) + rng.normal();
        }
    }

    std::vector<std::size_t> minority_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) minority_rows.push_back(i);
    }

    for (double ratio : {1.0, 0.7}) {
        SmoteConfig config;
        config.k_neighbors = 5;
        config.target_ratio = ratio;
        config.seed = 77;
        config.threads = 1;
        const SmoteResult result = smote(values, labels, config);

        long long minority_after = 0;
        for (int label : result.labels) minority_after += label == 1 ? 1 : 0;
        require(std::abs(double(minority_after) - ratio * double(majority_n)) <= 1.0,
                "class balance off by more than one sample");
        require(result.original_rows == labels.size(), "originals must be preserved");

        for (std::size_t s = result.original_rows; s < result.values.rows(); ++s) {
            bool reconstructed = false;
            for (std::size_t a = 0; a < minority_rows.size() && !reconstructed; ++a) {
                for (std::size_t b = 0; b < minority_rows.size() && !reconstructed; ++b) {
                    if (a == b) continue;
                    const auto ra = values.row(minority_rows[a]);
                    const auto rb = values.row(minority_rows[b]);
                    std::size_t pivot = d;
                    for (std::size_t j = 0; j < d; ++j) {
                        if (std::abs(rb[j] - ra[j]) > 1e-12) {
                            pivot = j;
                            break;
                        }
                    }
                    if (pivot == d) continue;
                    const double u =
                        (result.values(s, pivot) - ra[pivot]) / (rb[pivot] - ra[pivot]);
                    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
                    bool all = true;
                    for (std::size_t j = 0; j < d; ++j) {
                        if (std::abs(ra[j] + u * (rb[j] - ra[j]) - result.values(s, j)) > 1e-12) {
                            all = false;
                            break;
                        }
                    }
                    reconstructed = all;
                }
            }
            require(reconstructed,
                    "synthetic row is not a convex combination of a minority pair");
        }

        for (int threads : {4, 3, 0}) {
            SmoteConfig other = config;
            other.threads = threads;
            const SmoteResult again = smote(values, labels, other);
            require(again.labels == result.labels, "labels change with the thread count");
            require(again.values.data() == result.values.data(),
                    "synthetic values change with the thread count");
        }
    }
}

void criterion_logit_solver() {
    const SimData data = simulate_classification(500, 8, 41);
    const Matrix& values = data.matrix.values;

    // Finite differences around a generic point.
    Rng rng = Rng::substream(20260814, 4);
    std::vector<double> beta(values.cols());
    for (double& b : beta) b = 0.5 * rng.normal();
    const double intercept = 0.3;
    const LogisticGradient grad = logistic_gradient(values, data.labels, beta, intercept);
    const double h = 1e-6;
    auto loss_at = [&](const std::vector<double>& at_beta, double at_intercept) {
        return logistic_loss(values, data.labels, at_beta, at_intercept);
    };
    for (std::size_t j = 0; j < beta.size(); ++j) {
        std::vector<double> hi = beta, lo = beta;
        hi[j] += h;
        lo[j] -= h;
        const double fd = (loss_at(hi, intercept) - loss_at(lo, intercept)) / (2.0 * h);
        require(std::abs(grad.beta[j] - fd) <= 1e-6 * std::max(1.0, std::abs(grad.beta[j])),
                "coefficient gradient finite-difference mismatch");
    }
    const double fd_intercept =
        (loss_at(beta, intercept + h) - loss_at(beta, intercept - h)) / (2.0 * h);
    require(std::abs(grad.intercept - fd_intercept) <=
                1e-6 * std::max(1.0, std::abs(grad.intercept)),
            "intercept gradient finite-difference mismatch");

    // A crushing L1 penalty zeroes every coefficient and leaves the base rate.
    const LogitModel crushed = fit_logit_l1(data.matrix, data.labels, 1e6, 2000, 1e-10);
    for (double b : crushed.beta) require(b == 0.0, "coefficient survived lambda = 1e6");
    double positives = 0.0;
    for (int label : data.labels) positives += label;
    const double base_rate = positives / double(data.labels.size());
    require_near(crushed.intercept, std::log(base_rate / (1.0 - base_rate)), 1e-6,
                 "intercept is not the base-rate log odds");

    // Coordinate descent is deterministic, so the fit at m epochs is a prefix
    // of the fit at m + 1; the penalized objective must never increase.
    const double lambda = 0.02;
    double previous = logit_objective(values, data.labels, std::vector<double>(values.cols()),
                                      0.0, lambda);
    for (int epochs = 1; epochs <= 40; ++epochs) {
        const LogitModel model = fit_logit_l1(data.matrix, data.labels, lambda, epochs, 1e-300);
        const double objective =
            logit_objective(values, data.labels, model.beta, model.intercept, lambda);
        require(objective <= previous + 1e-12, "objective increased between epochs");
        previous = objective;
    }
}

void criterion_gbt() {
    require_near(leaf_weight(-2.0, 4.0, 1.0), 0.4, 1e-12, "leaf weight hand case");
    require_near(split_gain(2.0, 2.0, -2.0, 2.0, 1.0, 0.0), 4.0 / 3.0, 1e-12,
                 "split gain hand case");

    // One round, one split: gradients at base 0 are +-1/2, hessians 1/4.
    {
        Matrix values(4, 1);
        for (std::size_t i = 0; i < 4; ++i) values(i, 0) = double(i + 1);
        const std::vector<int> labels = {0, 0, 1, 1};
        GbtParams params;
        params.n_trees = 1;
        params.max_depth = 1;
        params.learning_rate = 1.0;
        params.lambda = 0.0;
        params.min_child_weight = 0.0;
        const BoostedEnsemble model = fit_gbt(named_matrix(values), labels, params);
        require_near(model.base_score, 0.0, 1e-12, "textbook base score");
        const Tree& tree = model.trees.at(0);
        const TreeNode& root = tree.nodes.at(0);
        require(root.feature == 0, "textbook split feature");
        require_near(root.threshold, 2.5, 1e-12, "textbook split threshold");
        require_near(tree.nodes.at(std::size_t(root.left)).weight, -2.0, 1e-12,
                     "textbook left leaf");
        require_near(tree.nodes.at(std::size_t(root.right)).weight, 2.0, 1e-12,
                     "textbook right leaf");
    }

    // 200 rounds at 20,000 x 40: the training loss never increases.
    const std::size_t n = 20000, d = 40;
    const SimData data = simulate_classification(n, d, 5);
    GbtParams params;
    params.n_trees = 200;
    params.max_depth = 4;
    params.learning_rate = 0.1;
    params.lambda = 1.0;
    params.min_child_weight = 1.0;
    const BoostedEnsemble model = fit_gbt(data.matrix, data.labels, params);
    require(model.trees.size() == 200, "expected 200 trees");

    std::vector<double> margins(n, model.base_score);
    double previous = mean_logloss(margins, data.labels);
    for (const Tree& tree : model.trees) {
        for (std::size_t i = 0; i < n; ++i) {
            margins[i] += params.learning_rate * tree_value(tree, data.matrix.values.row(i));
        }
        const double loss = mean_logloss(margins, data.labels);
        require(loss <= previous + 1e-12, "training loss increased between rounds");
        previous = loss;
    }
}

void criterion_shap() {
    // Local accuracy on every row of several fitted models.
    struct Shape {
        std::size_t n, d;
        int depth, trees;
    };
    for (const Shape& shape : {Shape{400, 8, 3, 25}, Shape{250, 5, 5, 40}, Shape{150, 3, 2, 10}}) {
        const SimData data = simulate_classification(shape.n, shape.d, 600 + shape.n);
        GbtParams params;
        params.n_trees = shape.trees;
        params.max_depth = shape.depth;
        params.learning_rate = 0.2;
        const BoostedEnsemble model = fit_gbt(data.matrix, data.labels, params);
        const ShapAttribution attribution = tree_shap(model, data.matrix);
        const std::vector<double> margins = predict_margin_gbt(model, data.matrix);
        for (std::size_t i = 0; i < shape.n; ++i) {
            double total = attribution.base_value;
            for (std::size_t j = 0; j < shape.d; ++j) total += attribution.values(i, j);
            require(std::abs(total - margins[i]) <= 1e-9, "local accuracy violated");
        }
    }

    // Exhaustive-subset oracle on a small ensemble.
    const SimData data = simulate_classification(120, 6, 901);
    GbtParams params;
    params.n_trees = 10;
    params.max_depth = 4;
    params.learning_rate = 0.3;
    const BoostedEnsemble model = fit_gbt(data.matrix, data.labels, params);
    const ShapAttribution attribution = tree_shap(model, data.matrix);
    for (std::size_t i = 0; i < 40; ++i) {
        const BruteShap oracle = brute_force_shap(model, data.matrix.values.row(i));
        require(std::abs(attribution.base_value - oracle.base) <= 1e-9,
                "base value diverges from the subset oracle");
        for (std::size_t j = 0; j < 6; ++j) {
            require(std::abs(attribution.values(i, j) - oracle.phi[j]) <= 1e-9,
                    "attribution diverges from the subset oracle");
        }
    }
}

void criterion_cox_stack() {
    // Score hand case: z = {0,1,1}, durations {1,2,3}, only the first fails.
    {
        Matrix z(3, 1);
        z(0, 0) = 0.0;
        z(1, 0) = 1.0;
        z(2, 0) = 1.0;
        const FeatureMatrix matrix = named_matrix(z);
        const std::vector<double> durations = {1.0, 2.0, 3.0};
        const std::vector<int> events = {1, 0, 0};
        const std::vector<double> at_zero = {0.0};
        require_near(cox_partial_loglik(matrix, durations, events, at_zero), -std::log(3.0),
                     1e-12, "partial log-likelihood hand case");
        require_near(cox_score(matrix, durations, events, at_zero)[0], 2.0 / 3.0, 1e-12,
                     "score hand case");
    }

    // Finite differences on tied data.
    {
        Rng rng = Rng::substream(20260814, 7);
        const std::size_t n = 40, d = 3;
        Matrix z(n, d);
        std::vector<double> durations(n);
        std::vector<int> events(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) z(i, j) = rng.normal();
            durations[i] = double(1 + rng.uniform_int(8));
            events[i] = rng.uniform01() < 0.6 ? 1 : 0;
        }
        events[0] = 1;
        const FeatureMatrix matrix = named_matrix(z);
        std::vector<double> beta = {0.3, -0.4, 0.2};
        const std::vector<double> score = cox_score(matrix, durations, events, beta);
        const double h = 1e-5;
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> hi = beta, lo = beta;
            hi[j] += h;
            lo[j] -= h;
            const double fd = -(cox_partial_loglik(matrix, durations, events, hi) -
                                cox_partial_loglik(matrix, durations, events, lo)) /
                              (2.0 * h);
            require(std::abs(score[j] - fd) <= 1e-5 * std::max(1.0, std::abs(score[j])),
                    "cox score finite-difference mismatch");
        }
    }

    // Breslow with a single subject: one event over a risk set of one.
    {
        Matrix z(1, 1);
        z(0, 0) = 0.0;
        const CoxModel model =
            fit_coxnet(named_matrix(z), {5.0}, {1}, 0.0, 1.0, 100, 1e-8);
        require(model.baseline_times.size() == 1 && model.baseline_times[0] == 5.0,
                "single-subject baseline time");
        require_near(model.baseline_cumhaz.at(0), 1.0, 1e-12, "single-subject cumulative hazard");
        require_near(predict_survival(model, 0.0, 4.99), 1.0, 1e-12, "survival before the event");
        require_near(predict_survival(model, 0.0, 5.0), std::exp(-1.0), 1e-12,
                     "survival at the event");
    }

    // Censoring KM hand products.
    {
        const KmCurve curve = censoring_km({1.0, 2.0, 3.0}, {0, 1, 1});
        require_near(curve.survival_at(1.0), 2.0 / 3.0, 1e-12, "censoring drop at t = 1");
        require_near(curve.survival_at(2.5), 2.0 / 3.0, 1e-12, "censoring KM is a step function");
        const KmCurve late = censoring_km({1.0, 2.0, 3.0}, {1, 0, 0});
        require_near(late.survival_at(2.0), 0.5, 1e-12, "censoring drop at t = 2");
        require_near(late.survival_at(3.0), 0.0, 1e-12, "censoring drop at t = 3");
        require_near(late.survival_before(3.0), 0.5, 1e-12, "left limit before t = 3");
    }

    // Brier: the oracle predictor scores zero; a lone survivor at S = 1/2
    // scores a quarter.
    {
        const std::vector<double> durations = {1.0, 4.0, 6.0, 7.0};
        const std::vector<int> events = {1, 1, 0, 0};
        const KmCurve censoring = censoring_km(durations, events);
        const std::vector<double> oracle = {0.0, 0.0, 1.0, 1.0};
        require_near(weighted_brier(oracle, durations, events, censoring, 5.0), 0.0, 1e-12,
                     "oracle predictor Brier");
        const KmCurve none = censoring_km({3.0}, {1});
        require_near(weighted_brier({0.5}, {3.0}, {1}, none, 2.0), 0.25, 1e-12,
                     "single survivor Brier");
    }

    // Concordance pair enumeration.
    require_near(concordance_index({3.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, {1, 1, 1}), 2.0 / 3.0,
                 1e-12, "concordance hand case");
}

void criterion_coxnet_recovery() {
    GeneratorConfig config;
    config.n_pipes = 5000;
    config.start_year = 2004;
    config.end_year = 2019;
    config.seed = 21;
    config.base_rate = 0.02;
    config.split_probability = 0.15;
    config.effect_age = 0.8;
    config.effect_aspect_ratio = -0.8;
    config.effect_material_fd = -0.8;
    config.effect_failure_history = 0.8;
    config.effect_pipe_operations = 0.0;
    config.effect_pressure = 0.6;

    const SyntheticPanel synthetic = generate_panel(config);
    const PanelBuild build = build_panel(synthetic.inventory, synthetic.failures);
    // Exactly the covariates the survival design can identify: age is the
    // time axis and own-pipe operations are zero before the first failure.
    FeatureSpec spec;
    spec.numeric_columns = {"pressure"};
    spec.categorical_columns = {"material"};
    spec.derived_columns = {"aspect_ratio", "failure_history"};
    const SurvivalDataset dataset = build_survival_dataset(build.panel, spec);

    const EncoderState encoder = fit_encoder(dataset.features);
    const FeatureMatrix z = apply_encoder(dataset.features, encoder);
    const auto [train_rows, holdout_rows] = survival_holdout_split(z.values.rows(), 3);
    auto pick = [&](const std::vector<std::size_t>& rows, auto& durations, auto& events) {
        for (std::size_t row : rows) {
            durations.push_back(dataset.durations[row]);
            events.push_back(dataset.events[row]);
        }
    };
    std::vector<double> train_durations, holdout_durations;
    std::vector<int> train_events, holdout_events;
    pick(train_rows, train_durations, train_events);
    pick(holdout_rows, holdout_durations, holdout_events);
    const FeatureMatrix train_z = take_rows(z, train_rows);
    const FeatureMatrix holdout_z = take_rows(z, holdout_rows);

    const CoxModel model =
        fit_coxnet(train_z, train_durations, train_events, 1e-8, 1.0, 2000, 1e-7);
    auto beta_of = [&](const std::string& name) {
        for (std::size_t j = 0; j < model.column_names.size(); ++j) {
            if (model.column_names[j] == name) return model.beta[j];
        }
        throw std::runtime_error("missing covariate " + name);
    };
    require(beta_of("aspect_ratio") < 0.0, "aspect_ratio sign not recovered");
    require(beta_of("material=FD") < 0.0, "material=FD sign not recovered");
    require(beta_of("pressure") > 0.0, "pressure sign not recovered");
    require(beta_of("failure_history") > 0.0, "failure_history sign not recovered");

    const std::vector<double> risk = linear_risk(holdout_z, model);
    const double cindex = concordance_index(risk, holdout_durations, holdout_events);
    require(cindex >= 0.65, "held-out concordance " + std::to_string(cindex) + " below 0.65");
}

void criterion_end_to_end() {
    GeneratorConfig generator;
    generator.n_pipes = 20000;
    generator.start_year = 2004;
    generator.end_year = 2019;
    generator.seed = 17;
    generator.base_rate = 0.01;
    generator.split_probability = 0.1;
    // The composite shares attribution credit with its raw constituents
    // (diameter, length, pressure block), so the planted contrast has to
    // dominate for the summary ranking to surface it.
    generator.effect_aspect_ratio = -0.9;

    const SyntheticPanel synthetic = generate_panel(generator);
    const PanelBuild build = build_panel(synthetic.inventory, synthetic.failures);
    const PanelDataset& panel = build.panel;

    const CvScheme scheme = CvScheme::make(panel, 4, 3);
    PipelineConfig pipeline;
    pipeline.model = ModelKind::gbt;
    pipeline.gbt.n_trees = 40;
    pipeline.gbt.max_depth = 4;
    pipeline.gbt.learning_rate = 0.15;
    pipeline.smote.seed = 11;
    pipeline.seed = 11;
    pipeline.threads = 0;

    const CvReport report = run_temporal_cv(panel, pipeline, scheme);
    const double threshold = select_threshold(report);
    const FinalEvaluation final_gbt = evaluate_final(panel, pipeline, scheme, threshold);
    require(final_gbt.test.mcc >= 0.15,
            "GBT test MCC " + std::to_string(final_gbt.test.mcc) + " below 0.15");

    PipelineConfig linear = pipeline;
    linear.model = ModelKind::logit;
    linear.logit_lambda = 0.01;
    linear.logit_max_epochs = 150;
    linear.logit_tolerance = 1e-5;
    const FinalEvaluation final_logit = evaluate_final(panel, linear, scheme, threshold);
    const auto ranked = rank_coefficients(final_logit.logit);
    auto rank_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (ranked[i].first == name) return i;
        }
        throw std::runtime_error("missing logit coefficient " + name);
    };
    const std::size_t age_rank = rank_of("age");
    const std::size_t aspect_rank = rank_of("aspect_ratio");
    require(age_rank < 5, "age outside the top-5 logit coefficients");
    require(aspect_rank < 5, "aspect_ratio outside the top-5 logit coefficients");
    require(ranked[age_rank].second > 0.0, "age coefficient sign");
    require(ranked[aspect_rank].second < 0.0, "aspect_ratio coefficient sign");
    require(ranked[rank_of("material=FD")].second < 0.0, "material=FD coefficient sign");

    const LabeledDesign test_design =
        assemble_labeled(panel, {scheme.test_year}, scheme.horizon_k, pipeline.features);
    const FeatureMatrix test_matrix = apply_encoder(test_design.block, final_gbt.encoder);
    const ShapAttribution attribution = tree_shap(final_gbt.gbt, test_matrix);
    const auto summary = shap_summary(attribution);
    std::set<std::string> top5;
    for (std::size_t i = 0; i < summary.size() && i < 5; ++i) top5.insert(summary[i].first);
    require(top5.count("age") == 1, "age outside the top-5 SHAP summary");
    require(top5.count("aspect_ratio") == 1, "aspect_ratio outside the top-5 SHAP summary");
}

void criterion_leakage_protocol() {
    GeneratorConfig generator;
    generator.n_pipes = 400;
    generator.start_year = 2004;
    generator.end_year = 2019;
    generator.seed = 5;
    generator.base_rate = 0.03;
    const SyntheticPanel synthetic = generate_panel(generator);
    const PanelBuild build = build_panel(synthetic.inventory, synthetic.failures);
    const PanelDataset& panel = build.panel;

    const CvScheme k4 = CvScheme::make(panel, 4, 5);
    require(k4.validation_years == std::vector<int>({2015, 2014, 2013, 2012, 2011}),
            "k = 4 validation years");
    require(k4.test_year == 2015, "k = 4 test year");
    const CvScheme k1 = CvScheme::make(panel, 1, 5);
    require(k1.validation_years == std::vector<int>({2018, 2017, 2016, 2015, 2014}),
            "k = 1 validation years");
    require(k1.test_year == 2018, "k = 1 test year");

    PipelineConfig pipeline;
    pipeline.model = ModelKind::logit;
    pipeline.logit_max_epochs = 60;
    pipeline.logit_tolerance = 1e-4;
    const CvReport report = run_temporal_cv(panel, pipeline, k4);
    require(report.folds.size() == 5, "expected five folds");
    for (const FoldResult& fold : report.folds) {
        int max_train = panel.min_year();
        for (int year : fold.train_years) max_train = std::max(max_train, year);
        require(max_train + k4.horizon_k <= fold.validation_year,
                "train years leak into the validation window");
        require(fold.encoder_provenance.subset_of(fold.train_years),
                "encoder fitted outside the train years");
        require(fold.smote_provenance.subset_of(fold.train_years),
                "resampling used rows outside the train years");
        require(fold.smote_provenance.row_count > 0, "resampling provenance is empty");
    }
}

std::string criterion_horizon_sweep_report() {
    GeneratorConfig generator;
    generator.n_pipes = 8000;
    generator.start_year = 2004;
    generator.end_year = 2019;
    generator.seed = 29;
    generator.base_rate = 0.01;
    const SyntheticPanel synthetic = generate_panel(generator);
    const PanelBuild build = build_panel(synthetic.inventory, synthetic.failures);
    const PanelDataset& panel = build.panel;

    std::ostringstream note;
    note << "test MCC by horizon:";
    for (int k = 1; k <= 4; ++k) {
        const CvScheme scheme = CvScheme::make(panel, k, 2);
        PipelineConfig pipeline;
        pipeline.model = ModelKind::gbt;
        pipeline.gbt.n_trees = 30;
        pipeline.gbt.max_depth = 3;
        pipeline.gbt.learning_rate = 0.15;
        pipeline.seed = 11;
        const CvReport report = run_temporal_cv(panel, pipeline, scheme);
        const double threshold = select_threshold(report);
        const FinalEvaluation outcome = evaluate_final(panel, pipeline, scheme, threshold);
        note << " k=" << k << " " << std::fixed << std::setprecision(4) << outcome.test.mcc;
    }
    return note.str();
}

void criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / "pipefail_acceptance_c12";
    fs::remove_all(root);
    fs::create_directories(root);

    RunConfig config;
    config.data_dir = (root / "data").string();
    config.seed = 33;
    config.threads = 1;
    config.horizon_k = 2;
    config.n_folds = 2;
    config.gbt_trees = 20;
    config.gbt_depth = 3;
    config.synth_pipes = 2000;
    config.synth_start_year = 2004;
    config.synth_end_year = 2013;
    config.synth_base_rate = 0.04;
    config.synth_split_probability = 0.1;

    const std::vector<std::string> synth_files = {"inventory.csv", "failures.csv",
                                                  "operations.csv", "truth.json"};
    const std::vector<std::string> cv_files = {"scores.csv", "threshold_sweep.csv", "model.json",
                                               "encoder.json"};
    QuietStdout quiet;

    RunConfig synth_a = config;
    synth_a.out_dir = (root / "data").string();
    cmd_synth(synth_a);
    RunConfig synth_b = config;
    synth_b.out_dir = (root / "data_rerun").string();
    cmd_synth(synth_b);
    for (const std::string& name : synth_files) {
        require(slurp(root / "data" / name) == slurp(root / "data_rerun" / name),
                name + " differs between generator reruns");
    }

    auto run_cv = [&](const std::string& out, int threads) {
        RunConfig run = config;
        run.out_dir = (root / out).string();
        run.threads = threads;
        cmd_cv(run);
    };
    run_cv("out_a", 1);
    run_cv("out_b", 1);
    run_cv("out_threads", 4);
    for (const std::string& name : cv_files) {
        require(slurp(root / "out_a" / name) == slurp(root / "out_b" / name),
                name + " differs between cv reruns");
        require(slurp(root / "out_a" / name) == slurp(root / "out_threads" / name),
                name + " differs between 1 and 4 threads");
    }
    fs::remove_all(root);
}

struct Criterion {
    int id;
    std::string label;
    double budget_seconds;
    std::function<std::string()> body;  // returns an optional info suffix
};

}  // namespace

int main() {
    auto plain = [](void (*fn)()) {
        return [fn]() {
            fn();
            return std::string();
        };
    };
    const std::vector<Criterion> criteria = {
        {1, "metric oracles match a brute-force re-tally", 5.0, plain(criterion_metric_oracles)},
        {2, "AUC equals O(n^2) pair enumeration", 10.0, plain(criterion_auc_pairs)},
        {3, "SMOTE balance, convexity and thread determinism", 5.0, plain(criterion_smote)},
        {4, "logit gradient, hard-penalty and monotonicity checks", 30.0,
         plain(criterion_logit_solver)},
        {5, "GBT hand cases and monotone training loss at scale", 60.0, plain(criterion_gbt)},
        {6, "TreeSHAP local accuracy and exhaustive-subset oracle", 60.0, plain(criterion_shap)},
        {7, "Cox partial likelihood, Breslow, KM, Brier and c-index", 30.0,
         plain(criterion_cox_stack)},
        {8, "penalized Cox recovers planted signs with held-out c >= 0.65", 60.0,
         plain(criterion_coxnet_recovery)},
        {9, "end-to-end classifier recovery on the 20k-pipe panel", 300.0,
         plain(criterion_end_to_end)},
        {10, "temporal folds, gaps and train-only provenance", 60.0,
         plain(criterion_leakage_protocol)},
        {11, "horizon sweep report", 420.0, criterion_horizon_sweep_report},
        {12, "byte-identical reruns across seeds and thread counts", 360.0,
         plain(criterion_determinism)},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        std::string info;
        try {
            info = criterion.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && seconds > criterion.budget_seconds) {
            std::ostringstream out;
            out << "over the " << criterion.budget_seconds << "s budget";
            error = out.str();
        }
        const bool ok = error.empty();
        failures += ok ? 0 : 1;
        std::printf("%s criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.label.c_str(), seconds, info.empty() ? "" : " - ",
                    info.c_str());
        if (!ok) std::printf("     reason: %s\n", error.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - std::size_t(failures),
                criteria.size());
    return failures == 0 ? 0 : 1;
}
