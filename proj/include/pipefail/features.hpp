#pragma once

#include <string>
#include <vector>

#include "pipefail/matrix.hpp"
#include "pipefail/panel.hpp"

namespace pipefail {

// Records which slice of the panel an artifact (encoder fit, resampled set)
// was derived from, so leakage checks can assert train-only provenance.
struct Provenance {
    std::vector<int> snapshot_years;  // sorted, unique
    std::size_t row_count = 0;

    bool subset_of(const std::vector<int>& allowed_years) const;
};

// Column selection for a model design. Numeric and categorical names refer to
// raw snapshot fields; derived names refer to the fixed registry of computed
// features (see derived_feature_names()).
struct FeatureSpec {
    std::vector<std::string> numeric_columns;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> derived_columns;

    // Full design for the failure-window classifiers.
    static FeatureSpec classification_default();
    // Survival design: drops the leakage-prone averages (avg_connections_age,
    // age_connections_ratio, avg_elements_age) and the age feature (age is the
    // survival target); install_year stays in as an ordinary covariate.
    static FeatureSpec survival_default();

    // Throws InvalidArgument on unknown names or duplicates.
    void validate() const;
};

const std::vector<std::string>& raw_numeric_names();
const std::vector<std::string>& raw_categorical_names();
// age, failure_history, aspect_ratio, sidewalk_length_ratio,
// greenzone_length_ratio, age_connections_ratio, long_ratio, pipe_operations,
// accessory_operations, other_operations
const std::vector<std::string>& derived_feature_names();

// Engineered but not yet encoded rows: numeric values (raw + derived) plus
// categorical strings, aligned by row.
struct DesignBlock {
    std::vector<std::string> row_ids;
    std::vector<int> row_years;
    std::vector<std::string> numeric_names;      // spec numeric + derived order
    std::vector<std::string> categorical_names;  // spec categorical order
    Matrix numeric;
    std::vector<std::vector<std::string>> categorical_rows;

    std::size_t size() const { return row_ids.size(); }
    void append(const DesignBlock& other);
};

// Rows for one snapshot year, ordered by pipe_id. Derived values depend only
// on the row and the panel's failure log, never on row order. install_year
// must be present on every row (run impute_install_year first).
DesignBlock engineer_derived_features(const PanelDataset& panel, int snapshot_year,
                                      const FeatureSpec& spec);

// Stacks several snapshot years (ascending).
DesignBlock assemble_design(const PanelDataset& panel, const std::vector<int>& years,
                            const FeatureSpec& spec);

struct LabeledDesign {
    DesignBlock block;
    std::vector<int> labels;
};

// Stacked rows with the per-year failure-window label (year, year + k].
LabeledDesign assemble_labeled(const PanelDataset& panel, const std::vector<int>& years, int k,
                               const FeatureSpec& spec);

// Frozen encoding state: population mean/stddev per numeric column (constant
// columns flagged and mapped to zero) and first-seen category lists.
struct EncoderState {
    struct NumericStat {
        std::string name;
        double mean = 0.0;
        double stddev = 0.0;  // population convention, 0 for constant columns
    };
    struct CategoryList {
        std::string name;
        std::vector<std::string> categories;  // first-seen order
    };
    std::vector<NumericStat> numeric;
    std::vector<CategoryList> categorical;
    Provenance provenance;

    std::vector<std::string> encoded_column_names() const;
};

// Numeric columns: encoded mean 0 variance 1 (population convention).
EncoderState fit_encoder(const DesignBlock& block);

struct FeatureMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    Matrix values;
};

// Standardizes numerics and expands categoricals to {0,1} blocks (category
// columns named "name=value"). Unseen categories encode as all zeros. Throws
// InvalidArgument when the block's columns do not match the encoder's.
FeatureMatrix apply_encoder(const DesignBlock& block, const EncoderState& encoder);

}  // namespace pipefail
