#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "pipefail/errors.hpp"
#include "pipefail/rng.hpp"
#include "pipefail/smote.hpp"

using namespace pipefail;

namespace {

struct Dataset {
    Matrix values;
    std::vector<int> labels;
};

Dataset random_imbalanced(std::uint64_t seed, std::size_t majority, std::size_t minority,
                          std::size_t dims) {
    Dataset data;
    data.values = Matrix(majority + minority, dims);
    Rng rng = Rng::substream(seed, 900);
    for (std::size_t i = 0; i < majority + minority; ++i) {
        const bool positive = i >= majority;
        for (std::size_t j = 0; j < dims; ++j) {
            data.values(i, j) = rng.uniform01() + (positive ? 2.0 : 0.0);
        }
        data.labels.push_back(positive ? 1 : 0);
    }
    return data;
}

bool matrices_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) != b(i, j)) return false;
        }
    }
    return true;
}

// A synthetic point must sit on a segment between two minority rows.
bool on_some_minority_segment(const Matrix& values, const std::vector<int>& labels,
                              std::size_t originals, std::size_t synthetic_row,
                              double tolerance) {
    const auto s = values.row(synthetic_row);
    for (std::size_t a = 0; a < originals; ++a) {
        if (labels[a] != 1) continue;
        for (std::size_t b = 0; b < originals; ++b) {
            if (b == a || labels[b] != 1) continue;
            const auto pa = values.row(a);
            const auto pb = values.row(b);
            // Solve u on the first coordinate where the endpoints differ.
            double u = -1.0;
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double d = pb[j] - pa[j];
                if (std::abs(d) > 1e-12) {
                    u = (s[j] - pa[j]) / d;
                    break;
                }
            }
            if (u < 0.0 || u > 1.0) continue;
            bool match = true;
            for (std::size_t j = 0; j < s.size(); ++j) {
                const double expect = pa[j] + u * (pb[j] - pa[j]);
                if (std::abs(expect - s[j]) > tolerance) {
                    match = false;
                    break;
                }
            }
            if (match) return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("smote balances the classes to the target ratio") {
    const Dataset data = random_imbalanced(1, 80, 7, 4);
    SmoteConfig config;
    config.seed = 9;
    const SmoteResult result = smote(data.values, data.labels, config);

    CHECK(result.original_rows == 87);
    CHECK(result.synthetic_rows == 73);  // 7 + 73 = 80 minority rows
    long long positives = 0;
    for (int label : result.labels) positives += label;
    CHECK(positives == 80);
    CHECK(result.values.rows() == 160);

    // Originals are untouched, in order.
    for (std::size_t i = 0; i < result.original_rows; ++i) {
        for (std::size_t j = 0; j < data.values.cols(); ++j) {
            CHECK(result.values(i, j) == data.values(i, j));
        }
    }

    // Half the majority: need = 40 - 7 = 33 synthetics.
    SmoteConfig half = config;
    half.target_ratio = 0.5;
    CHECK(smote(data.values, data.labels, half).synthetic_rows == 33);

    // Already balanced enough: nothing to add.
    SmoteConfig tiny = config;
    tiny.target_ratio = 0.05;
    CHECK(smote(data.values, data.labels, tiny).synthetic_rows == 0);
}

TEST_CASE("every synthetic row is a convex combination of minority rows") {
    const Dataset data = random_imbalanced(2, 60, 9, 3);
    SmoteConfig config;
    config.seed = 4;
    const SmoteResult result = smote(data.values, data.labels, config);
    REQUIRE(result.synthetic_rows > 0);
    for (std::size_t s = result.original_rows; s < result.values.rows(); ++s) {
        CHECK(on_some_minority_segment(result.values, data.labels, result.original_rows, s,
                                       1e-12));
    }
}

TEST_CASE("smote output is deterministic and thread-count independent") {
    const Dataset data = random_imbalanced(3, 100, 11, 5);
    SmoteConfig config;
    config.seed = 42;

    config.threads = 1;
    const SmoteResult one = smote(data.values, data.labels, config);
    config.threads = 4;
    const SmoteResult four = smote(data.values, data.labels, config);
    config.threads = 3;
    const SmoteResult three = smote(data.values, data.labels, config);

    CHECK(matrices_equal(one.values, four.values));
    CHECK(matrices_equal(one.values, three.values));
    CHECK(one.labels == four.labels);

    // A different seed moves the synthetics.
    config.seed = 43;
    const SmoteResult other = smote(data.values, data.labels, config);
    CHECK_FALSE(matrices_equal(one.values, other.values));
}

TEST_CASE("smote clamps k for tiny minorities and reports it") {
    const Dataset data = random_imbalanced(4, 30, 3, 2);
    SmoteConfig config;
    config.k_neighbors = 5;
    const SmoteResult result = smote(data.values, data.labels, config);
    CHECK_FALSE(result.warning.empty());
    CHECK(result.synthetic_rows == 27);
}

TEST_CASE("smote rejects degenerate class splits") {
    Matrix values(4, 2);
    CHECK_THROWS_AS(smote(values, {0, 0, 0, 0}, SmoteConfig{}), DataError);
    CHECK_THROWS_AS(smote(values, {1, 1, 1, 1}, SmoteConfig{}), DataError);
    CHECK_THROWS_AS(smote(values, {0, 0, 0, 1}, SmoteConfig{}), DataError);
}

TEST_CASE("positive rate helper") {
    CHECK(positive_rate({1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(positive_rate({0, 0, 0, 0}) == doctest::Approx(0.0));
}
