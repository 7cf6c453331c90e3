#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pipefail/gbt.hpp"

namespace pipefail {

struct ShapAttribution {
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    Matrix values;            // one row of per-feature contributions per input row
    double base_value = 0.0;  // cover-weighted expected margin of the ensemble
};

// Exact per-tree Shapley attributions of the margin. The coalition value
// follows the trained cover weights: a feature outside the coalition descends
// both children weighted by cover ratios, a feature inside follows the row.
// Satisfies local accuracy exactly: base_value + sum(phi) == predicted margin.
ShapAttribution tree_shap(const BoostedEnsemble& ensemble, const FeatureMatrix& matrix,
                          int threads = 0);

// Mean |phi| per column, sorted descending (ties keep column order).
std::vector<std::pair<std::string, double>> shap_summary(const ShapAttribution& attribution);

}  // namespace pipefail
