#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pipefail/features.hpp"

namespace pipefail {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf value (unscaled; learning rate applied at predict)
    double cover = 0.0;   // training rows reaching the node (synthetic rows excluded
                          // when GbtParams.real_rows is set); used as the SHAP background
    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct GbtParams {
    int n_trees = 200;
    int max_depth = 4;
    double learning_rate = 0.1;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // split gain threshold
    double min_child_weight = 1.0;
    // Number of leading matrix rows that are real observations; rows at and
    // beyond this index (e.g. SMOTE synthetics) still train the trees but are
    // excluded from cover weights. 0 means every row is real.
    std::size_t real_rows = 0;
};

struct BoostedEnsemble {
    GbtParams params;
    double base_score = 0.0;  // log-odds of the (clamped) label mean
    std::vector<std::string> column_names;
    std::vector<Tree> trees;
};

double leaf_weight(double grad_sum, double hess_sum, double lambda);

// 0.5 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda)) - gamma
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda, double gamma);

// Newton boosting on logistic loss: per round g = p - y, h = p (1 - p), exact
// greedy splits over sorted unique values with midpoint thresholds ("<= goes
// left"), nodes split only when gain > 0 and both children reach
// min_child_weight, ties broken by lowest feature index then lowest threshold.
// No row or column subsampling; the result is deterministic and independent of
// the thread count (the seed is reserved for future subsampling options).
// Throws DataError on non-finite inputs; single-class labels are allowed (the
// base rate is clamped into [1e-6, 1 - 1e-6]).
BoostedEnsemble fit_gbt(const FeatureMatrix& matrix, const std::vector<int>& labels,
                        const GbtParams& params, std::uint64_t seed = 0, int threads = 0);

// Margin = base_score + learning_rate * sum of leaf values over the first
// `first_trees` trees (all trees by default).
std::vector<double> predict_margin_gbt(const BoostedEnsemble& ensemble, const FeatureMatrix& matrix,
                                       std::size_t first_trees =
                                           std::numeric_limits<std::size_t>::max());

// sigmoid(margin), clamped into (0, 1).
std::vector<double> predict_proba_gbt(const BoostedEnsemble& ensemble,
                                      const FeatureMatrix& matrix);

}  // namespace pipefail
