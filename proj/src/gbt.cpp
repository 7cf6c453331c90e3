#include "pipefail/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pipefail/errors.hpp"
#include "pipefail/parallel.hpp"

namespace pipefail {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// One candidate split for a node, found while scanning a feature's sorted order.
struct Candidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool valid = false;
};

// Running accumulator for the left side of a node while scanning one feature.
struct ScanState {
    double grad_left = 0.0;
    double hess_left = 0.0;
    std::size_t count_left = 0;
    double last_value = 0.0;
    bool seen = false;
};

// Per-node totals for the level currently being split.
struct NodeStats {
    double grad = 0.0;
    double hess = 0.0;
    std::size_t rows = 0;
    std::size_t real = 0;
};

double midpoint_threshold(double lo, double hi) {
    double mid = lo + (hi - lo) * 0.5;
    // Adjacent doubles can round the midpoint up to hi, which would route the
    // right block left. Fall back to the left value ("<=" keeps it left).
    if (!(mid < hi)) {
        mid = lo;
    }
    return mid;
}

}  // namespace

double leaf_weight(double grad_sum, double hess_sum, double lambda) {
    return -grad_sum / (hess_sum + lambda);
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda, double gamma) {
    const double grad_total = grad_left + grad_right;
    const double hess_total = hess_left + hess_right;
    return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                  grad_right * grad_right / (hess_right + lambda) -
                  grad_total * grad_total / (hess_total + lambda)) -
           gamma;
}

BoostedEnsemble fit_gbt(const FeatureMatrix& matrix, const std::vector<int>& labels,
                        const GbtParams& params, std::uint64_t seed, int threads) {
    (void)seed;
    const std::size_t n = matrix.values.rows();
    const std::size_t d = matrix.values.cols();
    if (n == 0 || n != labels.size()) {
        throw InvalidArgument("fit_gbt: matrix rows and labels must be non-empty and aligned");
    }
    if (params.n_trees < 1 || params.max_depth < 1) {
        throw InvalidArgument("fit_gbt: n_trees and max_depth must be positive");
    }
    if (params.learning_rate <= 0.0 || params.lambda < 0.0 || params.gamma < 0.0 ||
        params.min_child_weight < 0.0) {
        throw InvalidArgument("fit_gbt: invalid learning_rate/lambda/gamma/min_child_weight");
    }
    if (params.real_rows > n) {
        throw InvalidArgument("fit_gbt: real_rows exceeds the number of rows");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw InvalidArgument("fit_gbt: labels must be 0 or 1");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(matrix.values(i, j))) {
                throw DataError("fit_gbt: non-finite feature value at row " + std::to_string(i));
            }
        }
    }
    const std::size_t real_rows = params.real_rows == 0 ? n : params.real_rows;
    const int workers = resolve_threads(threads);

    double positives = 0.0;
    for (int y : labels) positives += y;
    double rate = positives / static_cast<double>(n);
    rate = std::clamp(rate, 1e-6, 1.0 - 1e-6);

    BoostedEnsemble ensemble;
    ensemble.params = params;
    ensemble.base_score = std::log(rate / (1.0 - rate));
    ensemble.column_names = matrix.column_names;

    // Column-major copy plus per-column row order sorted by (value, row).
    std::vector<std::vector<double>> columns(d, std::vector<double>(n));
    std::vector<std::vector<std::uint32_t>> order(d, std::vector<std::uint32_t>(n));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) columns[j][i] = matrix.values(i, j);
        auto& idx = order[j];
        for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
        const auto& col = columns[j];
        std::sort(idx.begin(), idx.end(), [&col](std::uint32_t a, std::uint32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    }

    std::vector<double> margin(n, ensemble.base_score);
    std::vector<double> grad(n), hess(n);
    std::vector<int> node_of(n);       // node index within the current tree, -1 once in a leaf
    std::vector<int> slot_of;          // node index -> accumulator slot at the current level
    std::vector<Candidate> best;       // per (feature, slot), then reduced feature-major
    std::vector<ScanState> scan;       // per (feature, slot) scratch

    for (int round = 0; round < params.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(labels[i]);
            hess[i] = p * (1.0 - p);
        }

        Tree tree;
        tree.nodes.emplace_back();
        std::fill(node_of.begin(), node_of.end(), 0);

        NodeStats root_stats;
        for (std::size_t i = 0; i < n; ++i) {
            root_stats.grad += grad[i];
            root_stats.hess += hess[i];
        }
        root_stats.rows = n;
        root_stats.real = real_rows;

        std::vector<int> level = {0};
        std::vector<NodeStats> stats = {root_stats};

        for (int depth = 0; depth < params.max_depth && !level.empty(); ++depth) {
            const std::size_t slots = level.size();
            slot_of.assign(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < slots; ++s) slot_of[level[s]] = static_cast<int>(s);

            best.assign(d * slots, Candidate{});
            scan.assign(d * slots, ScanState{});
            parallel_for(d, workers, [&](std::size_t j_begin, std::size_t j_end) {
                for (std::size_t j = j_begin; j < j_end; ++j) {
                    Candidate* cand = best.data() + j * slots;
                    ScanState* st = scan.data() + j * slots;
                    const auto& col = columns[j];
                    for (std::uint32_t i : order[j]) {
                        const int node = node_of[i];
                        if (node < 0) continue;
                        const int s = slot_of[node];
                        if (s < 0) continue;
                        ScanState& a = st[s];
                        const double v = col[i];
                        if (a.seen && v > a.last_value) {
                            const NodeStats& ns = stats[static_cast<std::size_t>(s)];
                            const double hess_right = ns.hess - a.hess_left;
                            if (a.hess_left >= params.min_child_weight &&
                                hess_right >= params.min_child_weight) {
                                const double gain =
                                    split_gain(a.grad_left, a.hess_left, ns.grad - a.grad_left,
                                               hess_right, params.lambda, params.gamma);
                                Candidate& c = cand[s];
                                if (gain > 0.0 && (!c.valid || gain > c.gain)) {
                                    c.gain = gain;
                                    c.feature = static_cast<int>(j);
                                    c.threshold = midpoint_threshold(a.last_value, v);
                                    c.valid = true;
                                }
                            }
                        }
                        a.grad_left += grad[i];
                        a.hess_left += hess[i];
                        a.count_left += 1;
                        a.last_value = v;
                        a.seen = true;
                    }
                }
            });

            // Sequential reduce, feature-major: equal gains keep the lowest
            // feature index; within a feature the ascending scan already kept
            // the lowest threshold.
            std::vector<Candidate> chosen(slots);
            for (std::size_t j = 0; j < d; ++j) {
                for (std::size_t s = 0; s < slots; ++s) {
                    const Candidate& c = best[j * slots + s];
                    if (c.valid && (!chosen[s].valid || c.gain > chosen[s].gain)) {
                        chosen[s] = c;
                    }
                }
            }

            std::vector<int> next_level;
            std::vector<NodeStats> next_stats;
            for (std::size_t s = 0; s < slots; ++s) {
                const int node = level[s];
                if (!chosen[s].valid) {
                    TreeNode& leaf = tree.nodes[static_cast<std::size_t>(node)];
                    leaf.weight = leaf_weight(stats[s].grad, stats[s].hess, params.lambda);
                    leaf.cover = static_cast<double>(stats[s].real);
                    continue;
                }
                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                const int right = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                TreeNode& parent = tree.nodes[static_cast<std::size_t>(node)];
                parent.feature = chosen[s].feature;
                parent.threshold = chosen[s].threshold;
                parent.left = left;
                parent.right = right;
                parent.cover = static_cast<double>(stats[s].real);
                next_level.push_back(left);
                next_level.push_back(right);
                next_stats.emplace_back();
                next_stats.emplace_back();
            }

            // Route rows and recompute child totals in row order so the split
            // chosen does not affect how sums are accumulated.
            slot_of.assign(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < next_level.size(); ++s) {
                slot_of[next_level[s]] = static_cast<int>(s);
            }
            for (std::size_t i = 0; i < n; ++i) {
                int node = node_of[i];
                if (node < 0) continue;
                const TreeNode& t = tree.nodes[static_cast<std::size_t>(node)];
                if (t.is_leaf()) {
                    node_of[i] = -1 - node;  // settled; encode the leaf index
                    continue;
                }
                const int child = columns[static_cast<std::size_t>(t.feature)][i] <= t.threshold
                                      ? t.left
                                      : t.right;
                node_of[i] = child;
                NodeStats& cs = next_stats[static_cast<std::size_t>(slot_of[child])];
                cs.grad += grad[i];
                cs.hess += hess[i];
                cs.rows += 1;
                if (i < real_rows) cs.real += 1;
            }
            level = std::move(next_level);
            stats = std::move(next_stats);
        }

        // Any node still open at max depth becomes a leaf.
        for (std::size_t s = 0; s < level.size(); ++s) {
            TreeNode& leaf = tree.nodes[static_cast<std::size_t>(level[s])];
            leaf.weight = leaf_weight(stats[s].grad, stats[s].hess, params.lambda);
            leaf.cover = static_cast<double>(stats[s].real);
        }

        for (std::size_t i = 0; i < n; ++i) {
            int node = node_of[i];
            if (node < 0) node = -1 - node;  // settled leaf, recover the index
            margin[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(node)].weight;
        }

        ensemble.trees.push_back(std::move(tree));
    }
    return ensemble;
}

std::vector<double> predict_margin_gbt(const BoostedEnsemble& ensemble, const FeatureMatrix& matrix,
                                       std::size_t first_trees) {
    if (matrix.column_names != ensemble.column_names) {
        throw InvalidArgument("predict_margin_gbt: feature columns do not match the model");
    }
    const std::size_t n = matrix.values.rows();
    const std::size_t use = std::min(first_trees, ensemble.trees.size());
    std::vector<double> margin(n, ensemble.base_score);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = matrix.values.row(i);
        double sum = 0.0;
        for (std::size_t t = 0; t < use; ++t) {
            const Tree& tree = ensemble.trees[t];
            int node = 0;
            while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
                const TreeNode& tn = tree.nodes[static_cast<std::size_t>(node)];
                node = row[static_cast<std::size_t>(tn.feature)] <= tn.threshold ? tn.left
                                                                                 : tn.right;
            }
            sum += tree.nodes[static_cast<std::size_t>(node)].weight;
        }
        margin[i] += ensemble.params.learning_rate * sum;
    }
    return margin;
}

std::vector<double> predict_proba_gbt(const BoostedEnsemble& ensemble,
                                      const FeatureMatrix& matrix) {
    std::vector<double> p = predict_margin_gbt(ensemble, matrix);
    for (double& v : p) {
        v = std::clamp(sigmoid(v), 1e-12, 1.0 - 1e-12);
    }
    return p;
}

}  // namespace pipefail
