#include "pipefail/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pipefail/errors.hpp"

namespace pipefail {

ConfusionMatrix confusion_at_threshold(std::span<const double> probabilities,
                                       std::span<const int> labels, double threshold) {
    if (probabilities.size() != labels.size()) {
        throw InvalidArgument("confusion_at_threshold: probabilities and labels differ in length");
    }
    if (probabilities.empty()) throw InvalidArgument("confusion_at_threshold: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const bool predicted = probabilities[i] > threshold;
        if (labels[i] == 1) {
            predicted ? ++cm.tp : ++cm.fn;
        } else {
            predicted ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

ScoreSet score_set(const ConfusionMatrix& cm, double threshold) {
    if (cm.total() == 0) throw InvalidArgument("score_set: empty confusion matrix");
    ScoreSet s;
    s.threshold = threshold;
    const double tp = double(cm.tp), tn = double(cm.tn), fp = double(cm.fp), fn = double(cm.fn);
    s.precision = (cm.tp + cm.fp) > 0 ? tp / (tp + fp) : 0.0;
    s.recall = (cm.tp + cm.fn) > 0 ? tp / (tp + fn) : 0.0;
    s.accuracy = (tp + tn) / double(cm.total());
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    const double m1 = tp + fp, m2 = tp + fn, m3 = tn + fp, m4 = tn + fn;
    if (m1 > 0 && m2 > 0 && m3 > 0 && m4 > 0) {
        s.mcc = (tp * tn - fp * fn) / std::sqrt(m1 * m2 * m3 * m4);
    } else {
        s.mcc = 0.0;
    }
    return s;
}

double roc_auc(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.size() != labels.size()) {
        throw InvalidArgument("roc_auc: probabilities and labels differ in length");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: both classes must be present");

    // Midrank formulation; ties contribute 1/2 per crossing pair.
    std::vector<std::size_t> order(probabilities.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return probabilities[a] < probabilities[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && probabilities[order[j]] == probabilities[order[i]]) ++j;
        const double midrank = 0.5 * double(i + 1 + j);  // average of ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double np = double(n_pos), nn = double(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<double> default_threshold_grid(double step) {
    if (step <= 0.0 || step > 1.0) throw InvalidArgument("threshold grid step must be in (0, 1]");
    std::vector<double> grid;
    const int count = int(std::llround(1.0 / step));
    grid.reserve(count + 1);
    for (int i = 0; i <= count; ++i) grid.push_back(double(i) * step);
    return grid;
}

ThresholdCurve threshold_sweep(std::span<const double> probabilities,
                               std::span<const int> labels, const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidArgument("threshold_sweep: empty grid");
    const double auc = roc_auc(probabilities, labels);

    // Sort scores by class once; each threshold is then two binary searches.
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(probabilities[i]);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());

    ThresholdCurve curve;
    curve.grid = grid;
    curve.scores.reserve(grid.size());
    for (double threshold : grid) {
        ConfusionMatrix cm;
        const auto pos_above =
            pos.end() - std::upper_bound(pos.begin(), pos.end(), threshold);
        const auto neg_above =
            neg.end() - std::upper_bound(neg.begin(), neg.end(), threshold);
        cm.tp = pos_above;
        cm.fn = static_cast<long long>(pos.size()) - pos_above;
        cm.fp = neg_above;
        cm.tn = static_cast<long long>(neg.size()) - neg_above;
        ScoreSet s = score_set(cm, threshold);
        s.auc = auc;
        curve.scores.push_back(s);
    }
    return curve;
}

}  // namespace pipefail
