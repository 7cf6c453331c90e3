#pragma once

#include <span>
#include <vector>

namespace pipefail {

struct ConfusionMatrix {
    long long tp = 0;
    long long tn = 0;
    long long fp = 0;
    long long fn = 0;

    long long total() const { return tp + tn + fp + fn; }
};

// Threshold-dependent scores plus the threshold-free AUC. score_set() fills
// the five confusion metrics and leaves auc at 0; report paths overwrite auc
// with the Mann-Whitney value computed from the probability vector.
struct ScoreSet {
    double threshold = 0.0;
    double mcc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
};

// Predicts positive iff p > threshold (strict). Throws InvalidArgument on
// length mismatch or empty input.
ConfusionMatrix confusion_at_threshold(std::span<const double> probabilities,
                                       std::span<const int> labels, double threshold);

// Zero-denominator conventions: precision/recall are 0 when their denominator
// is 0; f1 is 0 when precision + recall is 0; MCC is 0 when any marginal
// (tp+fp, tp+fn, tn+fp, tn+fn) is 0. Throws InvalidArgument on an empty
// confusion matrix.
ScoreSet score_set(const ConfusionMatrix& confusion, double threshold = 0.0);

// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie). Throws
// DataError unless both classes are present.
double roc_auc(std::span<const double> probabilities, std::span<const int> labels);

// 0.00, 0.01, ..., 1.00 for the default step.
std::vector<double> default_threshold_grid(double step = 0.01);

struct ThresholdCurve {
    std::vector<double> grid;
    std::vector<ScoreSet> scores;  // aligned with grid, auc filled
};

// Evaluates every grid threshold; the shared AUC is stored in each entry.
ThresholdCurve threshold_sweep(std::span<const double> probabilities,
                               std::span<const int> labels, const std::vector<double>& grid);

}  // namespace pipefail
