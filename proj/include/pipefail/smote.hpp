#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipefail/features.hpp"
#include "pipefail/matrix.hpp"

namespace pipefail {

struct SmoteConfig {
    int k_neighbors = 5;
    // Desired minority/majority ratio after oversampling; 1.0 = even classes.
    double target_ratio = 1.0;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = all cores; results are identical for any value
};

struct SmoteResult {
    Matrix values;            // originals in input order, synthetics appended
    std::vector<int> labels;  // aligned; synthetic labels are all 1
    std::size_t original_rows = 0;
    std::size_t synthetic_rows = 0;
    std::string warning;  // set when k was clamped for a tiny minority
    Provenance provenance;
};

// Oversamples the minority (label 1) class with synthetic points
// x + u * (neighbor - x), u uniform in (0, 1), neighbors drawn from the k
// nearest minority rows (exact Euclidean scan, self excluded, distance ties
// broken by row index). Original rows are never mutated or removed. Synthetic
// sample s uses an RNG substream keyed by (seed, s) and base row s mod
// minority_count, so output is independent of the thread count. Throws
// DataError when a class is absent or the minority has fewer than 2 rows.
SmoteResult smote(const Matrix& values, const std::vector<int>& labels, const SmoteConfig& config,
                  Provenance provenance = {});

// Fraction of labels equal to 1.
double positive_rate(const std::vector<int>& labels);

}  // namespace pipefail
