#include "pipefail/shap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pipefail/errors.hpp"
#include "pipefail/parallel.hpp"

namespace pipefail {

namespace {

// One split constraint on a path: rows with value <= threshold go left.
struct Constraint {
    double threshold = 0.0;
    bool goes_left = true;
};

// All path information for one feature on the way to a leaf. `b` is the
// product of cover ratios of that feature's splits (the weight the leaf keeps
// when the feature is outside the coalition).
struct LeafFeature {
    int feature = -1;
    double b = 1.0;
    std::vector<Constraint> constraints;
};

struct LeafGame {
    double weight = 0.0;
    double b_product = 1.0;  // prod of b over features, i.e. v(empty set)
    std::vector<LeafFeature> features;
};

void collect_leaves(const Tree& tree, int node, std::map<int, LeafFeature>& path,
                    std::vector<LeafGame>& out) {
    const TreeNode& tn = tree.nodes[static_cast<std::size_t>(node)];
    if (tn.is_leaf()) {
        LeafGame game;
        game.weight = tn.weight;
        for (const auto& [feature, lf] : path) {
            game.b_product *= lf.b;
            game.features.push_back(lf);
        }
        out.push_back(std::move(game));
        return;
    }
    const double cover = tn.cover;
    for (int side = 0; side < 2; ++side) {
        const int child = side == 0 ? tn.left : tn.right;
        const double child_cover = tree.nodes[static_cast<std::size_t>(child)].cover;
        const double ratio = cover > 0.0 ? child_cover / cover : 0.0;
        auto [it, inserted] = path.emplace(tn.feature, LeafFeature{});
        LeafFeature saved = it->second;
        it->second.feature = tn.feature;
        it->second.b *= ratio;
        it->second.constraints.push_back({tn.threshold, side == 0});
        collect_leaves(tree, child, path, out);
        if (inserted) {
            path.erase(it);
        } else {
            it->second = saved;
        }
    }
}

// Shapley kernel weights s! (u-1-s)! / u! for coalition sizes 0..u-1.
std::vector<double> shapley_weights(std::size_t u) {
    std::vector<double> fact(u + 1, 1.0);
    for (std::size_t k = 1; k <= u; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
    std::vector<double> w(u);
    for (std::size_t s = 0; s < u; ++s) {
        w[s] = fact[s] * fact[u - 1 - s] / fact[u];
    }
    return w;
}

bool row_follows(const LeafFeature& lf, const double* row) {
    for (const Constraint& c : lf.constraints) {
        const bool left = row[lf.feature] <= c.threshold;
        if (left != c.goes_left) return false;
    }
    return true;
}

}  // namespace

ShapAttribution tree_shap(const BoostedEnsemble& ensemble, const FeatureMatrix& matrix,
                          int threads) {
    if (matrix.column_names != ensemble.column_names) {
        throw InvalidArgument("tree_shap: feature columns do not match the model");
    }
    const std::size_t n = matrix.values.rows();
    const std::size_t d = matrix.values.cols();
    const double eta = ensemble.params.learning_rate;

    std::vector<std::vector<LeafGame>> games;
    games.reserve(ensemble.trees.size());
    std::size_t max_u = 1;
    for (const Tree& tree : ensemble.trees) {
        std::map<int, LeafFeature> path;
        std::vector<LeafGame> leaves;
        collect_leaves(tree, 0, path, leaves);
        for (const LeafGame& g : leaves) max_u = std::max(max_u, g.features.size());
        games.push_back(std::move(leaves));
    }

    std::vector<std::vector<double>> weights_by_u(max_u + 1);
    for (std::size_t u = 1; u <= max_u; ++u) weights_by_u[u] = shapley_weights(u);

    ShapAttribution result;
    result.row_ids = matrix.row_ids;
    result.column_names = matrix.column_names;
    result.values = Matrix(n, d);
    result.base_value = ensemble.base_score;
    for (const auto& leaves : games) {
        double expectation = 0.0;
        for (const LeafGame& g : leaves) expectation += g.weight * g.b_product;
        result.base_value += eta * expectation;
    }

    const int workers = resolve_threads(threads);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> a(max_u), b(max_u), poly(max_u);
        for (std::size_t i = begin; i < end; ++i) {
            const double* row = matrix.values.row(i).data();
            double* phi = result.values.row(i).data();
            for (const auto& leaves : games) {
                for (const LeafGame& g : leaves) {
                    const std::size_t u = g.features.size();
                    if (u == 0) continue;
                    for (std::size_t f = 0; f < u; ++f) {
                        a[f] = row_follows(g.features[f], row) ? 1.0 : 0.0;
                        b[f] = g.features[f].b;
                    }
                    const auto& w = weights_by_u[u];
                    for (std::size_t j = 0; j < u; ++j) {
                        if (a[j] == b[j]) continue;
                        // Convolve (b_f + a_f x) over the other features; the
                        // coefficient of x^s sums coalitions of size s.
                        poly[0] = 1.0;
                        std::size_t len = 1;
                        for (std::size_t f = 0; f < u; ++f) {
                            if (f == j) continue;
                            poly[len] = poly[len - 1] * a[f];
                            for (std::size_t s = len - 1; s > 0; --s) {
                                poly[s] = poly[s] * b[f] + poly[s - 1] * a[f];
                            }
                            poly[0] *= b[f];
                            ++len;
                        }
                        double sum = 0.0;
                        for (std::size_t s = 0; s < len; ++s) sum += w[s] * poly[s];
                        phi[g.features[j].feature] += eta * g.weight * (a[j] - b[j]) * sum;
                    }
                }
            }
        }
    });
    return result;
}

std::vector<std::pair<std::string, double>> shap_summary(const ShapAttribution& attribution) {
    const std::size_t n = attribution.values.rows();
    const std::size_t d = attribution.values.cols();
    std::vector<std::pair<std::string, double>> summary;
    summary.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += std::abs(attribution.values(i, j));
        summary.emplace_back(attribution.column_names[j],
                             n > 0 ? total / static_cast<double>(n) : 0.0);
    }
    std::stable_sort(summary.begin(), summary.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    return summary;
}

}  // namespace pipefail
