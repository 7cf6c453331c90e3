#include "pipefail/smote.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pipefail/errors.hpp"
#include "pipefail/parallel.hpp"
#include "pipefail/rng.hpp"

namespace pipefail {

double positive_rate(const std::vector<int>& labels) {
    if (labels.empty()) throw InvalidArgument("positive_rate: empty labels");
    std::size_t positives = 0;
    for (int y : labels) positives += (y == 1);
    return static_cast<double>(positives) / static_cast<double>(labels.size());
}

SmoteResult smote(const Matrix& values, const std::vector<int>& labels, const SmoteConfig& config,
                  Provenance provenance) {
    if (values.rows() != labels.size()) {
        throw InvalidArgument("smote: matrix rows and label count differ");
    }
    if (config.k_neighbors < 1) throw InvalidArgument("smote: k_neighbors must be >= 1");
    if (config.target_ratio <= 0.0) throw InvalidArgument("smote: target_ratio must be > 0");

    std::vector<std::size_t> minority;
    std::size_t majority_count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) {
            minority.push_back(i);
        } else if (labels[i] == 0) {
            ++majority_count;
        } else {
            throw InvalidArgument("smote: labels must be 0 or 1");
        }
    }
    if (minority.empty() || majority_count == 0) {
        throw DataError("smote: both classes must be present");
    }
    if (minority.size() < 2) {
        throw DataError("smote: minority class needs at least 2 rows");
    }

    SmoteResult out;
    out.original_rows = values.rows();
    out.provenance = std::move(provenance);

    int k = config.k_neighbors;
    if (static_cast<std::size_t>(k) >= minority.size()) {
        k = static_cast<int>(minority.size()) - 1;
        out.warning = "k_neighbors clamped to " + std::to_string(k) +
                      " (minority class has only " + std::to_string(minority.size()) + " rows)";
    }

    const long long target =
        static_cast<long long>(std::llround(config.target_ratio * double(majority_count)));
    const long long need = target - static_cast<long long>(minority.size());
    out.synthetic_rows = need > 0 ? static_cast<std::size_t>(need) : 0;

    const std::size_t d = values.cols();
    const std::size_t m = minority.size();

    // k nearest minority neighbors per minority row (exact full scan).
    std::vector<std::vector<std::size_t>> neighbors(m);
    if (out.synthetic_rows > 0) {
        parallel_for(m, config.threads, [&](std::size_t begin, std::size_t end) {
            std::vector<std::pair<double, std::size_t>> dist(m);
            for (std::size_t a = begin; a < end; ++a) {
                const auto row_a = values.row(minority[a]);
                for (std::size_t b = 0; b < m; ++b) {
                    double ss = 0.0;
                    const auto row_b = values.row(minority[b]);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double diff = row_a[j] - row_b[j];
                        ss += diff * diff;
                    }
                    dist[b] = {ss, b};
                }
                dist[a].first = std::numeric_limits<double>::infinity();  // exclude self
                std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
                auto& list = neighbors[a];
                list.reserve(k);
                for (int t = 0; t < k; ++t) list.push_back(dist[t].second);
            }
        });
    }

    out.values = Matrix(values.rows() + out.synthetic_rows, d);
    std::copy(values.data().begin(), values.data().end(), out.values.data().begin());
    out.labels = labels;
    out.labels.resize(labels.size() + out.synthetic_rows, 1);

    parallel_for(out.synthetic_rows, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            Rng rng = Rng::substream(config.seed, s);
            const std::size_t base = s % m;
            const std::size_t pick = neighbors[base][rng.uniform_int(std::uint64_t(k))];
            const double u = rng.uniform01();
            const auto from = values.row(minority[base]);
            const auto to = values.row(minority[pick]);
            auto dest = out.values.row(values.rows() + s);
            for (std::size_t j = 0; j < d; ++j) dest[j] = from[j] + u * (to[j] - from[j]);
        }
    });
    return out;
}

}  // namespace pipefail
