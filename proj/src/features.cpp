#include "pipefail/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

using RawNumericGetter = double (*)(const PipeSnapshot&);
using RawCategoryGetter = const std::string& (*)(const PipeSnapshot&);

const std::vector<std::pair<std::string, RawNumericGetter>>& raw_numeric_registry() {
    static const std::vector<std::pair<std::string, RawNumericGetter>> registry = {
        {"diameter_mm", [](const PipeSnapshot& s) { return s.diameter_mm; }},
        {"length_m", [](const PipeSnapshot& s) { return s.length_m; }},
        {"install_year", [](const PipeSnapshot& s) { return double(*s.install_year); }},
        {"num_connections", [](const PipeSnapshot& s) { return double(s.num_connections); }},
        {"avg_connections_age", [](const PipeSnapshot& s) { return s.avg_connections_age; }},
        {"num_elements", [](const PipeSnapshot& s) { return double(s.num_elements); }},
        {"avg_elements_age", [](const PipeSnapshot& s) { return s.avg_elements_age; }},
        {"sidewalk_length_m", [](const PipeSnapshot& s) { return s.sidewalk_length_m; }},
        {"greenzone_length_m", [](const PipeSnapshot& s) { return s.greenzone_length_m; }},
        {"pressure", [](const PipeSnapshot& s) { return s.pressure; }},
        {"maxvsmin_pressure", [](const PipeSnapshot& s) { return s.maxvsmin_pressure; }},
        {"estres_pressure", [](const PipeSnapshot& s) { return s.estres_pressure; }},
    };
    return registry;
}

const std::vector<std::pair<std::string, RawCategoryGetter>>& raw_categorical_registry() {
    static const std::vector<std::pair<std::string, RawCategoryGetter>> registry = {
        {"material", [](const PipeSnapshot& s) -> const std::string& { return s.material; }},
        {"city", [](const PipeSnapshot& s) -> const std::string& { return s.city; }},
        {"network_type",
         [](const PipeSnapshot& s) -> const std::string& { return s.network_type; }},
        {"ind_greenzone",
         [](const PipeSnapshot& s) -> const std::string& { return s.ind_greenzone; }},
        {"assimilable_to_transport",
         [](const PipeSnapshot& s) -> const std::string& { return s.assimilable_to_transport; }},
        {"level_of_traffic",
         [](const PipeSnapshot& s) -> const std::string& { return s.level_of_traffic; }},
        {"underground_gallery",
         [](const PipeSnapshot& s) -> const std::string& { return s.underground_gallery; }},
    };
    return registry;
}

// Derived features get the panel for failure-history lookups.
using DerivedGetter = double (*)(const PanelDataset&, const PipeSnapshot&);

double derived_age(const PanelDataset&, const PipeSnapshot& s) {
    return double(s.snapshot_year - *s.install_year);
}

const std::vector<std::pair<std::string, DerivedGetter>>& derived_registry() {
    static const std::vector<std::pair<std::string, DerivedGetter>> registry = {
        {"age", derived_age},
        {"failure_history",
         [](const PanelDataset& panel, const PipeSnapshot& s) {
             return double(panel.failure_count_through(s.pipe_id, s.snapshot_year));
         }},
        {"aspect_ratio",
         [](const PanelDataset&, const PipeSnapshot& s) { return s.diameter_mm / s.length_m; }},
        {"sidewalk_length_ratio",
         [](const PanelDataset&, const PipeSnapshot& s) {
             return s.sidewalk_length_m / s.length_m;
         }},
        {"greenzone_length_ratio",
         [](const PanelDataset&, const PipeSnapshot& s) {
             return s.greenzone_length_m / s.length_m;
         }},
        {"age_connections_ratio",
         [](const PanelDataset& panel, const PipeSnapshot& s) {
             return s.avg_connections_age / std::max(derived_age(panel, s), 1.0);
         }},
        {"long_ratio",
         [](const PanelDataset&, const PipeSnapshot& s) {
             return s.length_m / s.original_length_m;
         }},
        {"pipe_operations",
         [](const PanelDataset&, const PipeSnapshot& s) { return double(s.pipe_ops_year); }},
        {"accessory_operations",
         [](const PanelDataset&, const PipeSnapshot& s) { return double(s.accessory_ops_year); }},
        {"other_operations",
         [](const PanelDataset&, const PipeSnapshot& s) { return double(s.other_ops_year); }},
    };
    return registry;
}

template <typename Registry>
auto find_in(const Registry& registry, const std::string& name) {
    for (const auto& entry : registry) {
        if (entry.first == name) return &entry;
    }
    return decltype(&registry.front()){nullptr};
}

void check_unique(const std::vector<std::string>& names, const char* what) {
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument(std::string("duplicate ") + what + " column in feature spec");
    }
}

}  // namespace

bool Provenance::subset_of(const std::vector<int>& allowed_years) const {
    for (int year : snapshot_years) {
        if (std::find(allowed_years.begin(), allowed_years.end(), year) == allowed_years.end()) {
            return false;
        }
    }
    return true;
}

const std::vector<std::string>& raw_numeric_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, getter] : raw_numeric_registry()) out.push_back(name);
        return out;
    }();
    return names;
}

const std::vector<std::string>& raw_categorical_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, getter] : raw_categorical_registry()) out.push_back(name);
        return out;
    }();
    return names;
}

const std::vector<std::string>& derived_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, getter] : derived_registry()) out.push_back(name);
        return out;
    }();
    return names;
}

FeatureSpec FeatureSpec::classification_default() {
    FeatureSpec spec;
    spec.numeric_columns = raw_numeric_names();
    spec.categorical_columns = raw_categorical_names();
    spec.derived_columns = derived_feature_names();
    return spec;
}

FeatureSpec FeatureSpec::survival_default() {
    FeatureSpec spec = classification_default();
    auto drop = [](std::vector<std::string>& names, const std::string& name) {
        names.erase(std::remove(names.begin(), names.end(), name), names.end());
    };
    drop(spec.numeric_columns, "avg_connections_age");
    drop(spec.numeric_columns, "avg_elements_age");
    drop(spec.derived_columns, "age");
    drop(spec.derived_columns, "age_connections_ratio");
    return spec;
}

void FeatureSpec::validate() const {
    for (const auto& name : numeric_columns) {
        if (!find_in(raw_numeric_registry(), name)) {
            throw InvalidArgument("unknown numeric column '" + name + "'");
        }
    }
    for (const auto& name : categorical_columns) {
        if (!find_in(raw_categorical_registry(), name)) {
            throw InvalidArgument("unknown categorical column '" + name + "'");
        }
    }
    for (const auto& name : derived_columns) {
        if (!find_in(derived_registry(), name)) {
            throw InvalidArgument("unknown derived column '" + name + "'");
        }
    }
    check_unique(numeric_columns, "numeric");
    check_unique(categorical_columns, "categorical");
    check_unique(derived_columns, "derived");
}

void DesignBlock::append(const DesignBlock& other) {
    if (row_ids.empty()) {
        *this = other;
        return;
    }
    if (numeric_names != other.numeric_names || categorical_names != other.categorical_names) {
        throw InvalidArgument("cannot append design blocks with different columns");
    }
    row_ids.insert(row_ids.end(), other.row_ids.begin(), other.row_ids.end());
    row_years.insert(row_years.end(), other.row_years.begin(), other.row_years.end());
    for (std::size_t i = 0; i < other.numeric.rows(); ++i) numeric.append_row(other.numeric.row(i));
    categorical_rows.insert(categorical_rows.end(), other.categorical_rows.begin(),
                            other.categorical_rows.end());
}

DesignBlock engineer_derived_features(const PanelDataset& panel, int snapshot_year,
                                      const FeatureSpec& spec) {
    spec.validate();
    auto rows = panel.rows_at_year(snapshot_year);
    if (rows.empty()) {
        throw InvalidArgument("snapshot year " + std::to_string(snapshot_year) +
                              " not present in panel");
    }

    DesignBlock block;
    block.numeric_names = spec.numeric_columns;
    block.numeric_names.insert(block.numeric_names.end(), spec.derived_columns.begin(),
                               spec.derived_columns.end());
    block.categorical_names = spec.categorical_columns;
    block.numeric = Matrix(rows.size(), block.numeric_names.size());
    block.row_ids.reserve(rows.size());
    block.row_years.assign(rows.size(), snapshot_year);
    block.categorical_rows.reserve(rows.size());

    std::vector<RawNumericGetter> numeric_getters;
    for (const auto& name : spec.numeric_columns) {
        numeric_getters.push_back(find_in(raw_numeric_registry(), name)->second);
    }
    std::vector<DerivedGetter> derived_getters;
    for (const auto& name : spec.derived_columns) {
        derived_getters.push_back(find_in(derived_registry(), name)->second);
    }
    std::vector<RawCategoryGetter> category_getters;
    for (const auto& name : spec.categorical_columns) {
        category_getters.push_back(find_in(raw_categorical_registry(), name)->second);
    }

    const bool needs_install =
        !spec.derived_columns.empty() ||
        std::find(spec.numeric_columns.begin(), spec.numeric_columns.end(), "install_year") !=
            spec.numeric_columns.end();

    std::size_t out_row = 0;
    for (std::size_t idx : rows) {
        const PipeSnapshot& snapshot = panel.rows()[idx];
        if (needs_install && !snapshot.install_year) {
            throw DataError("pipe " + snapshot.pipe_id + " at year " +
                            std::to_string(snapshot_year) +
                            " has no install_year; run impute_install_year first");
        }
        block.row_ids.push_back(snapshot.pipe_id);
        std::size_t col = 0;
        for (auto getter : numeric_getters) block.numeric(out_row, col++) = getter(snapshot);
        for (auto getter : derived_getters) {
            block.numeric(out_row, col++) = getter(panel, snapshot);
        }
        std::vector<std::string> cats;
        cats.reserve(category_getters.size());
        for (auto getter : category_getters) cats.push_back(getter(snapshot));
        block.categorical_rows.push_back(std::move(cats));
        ++out_row;
    }
    return block;
}

DesignBlock assemble_design(const PanelDataset& panel, const std::vector<int>& years,
                            const FeatureSpec& spec) {
    if (years.empty()) throw InvalidArgument("assemble_design: no years given");
    auto sorted_years = years;
    std::sort(sorted_years.begin(), sorted_years.end());
    DesignBlock out;
    for (int year : sorted_years) {
        out.append(engineer_derived_features(panel, year, spec));
    }
    return out;
}

LabeledDesign assemble_labeled(const PanelDataset& panel, const std::vector<int>& years, int k,
                               const FeatureSpec& spec) {
    if (years.empty()) throw InvalidArgument("assemble_labeled: no years given");
    auto sorted_years = years;
    std::sort(sorted_years.begin(), sorted_years.end());
    LabeledDesign out;
    for (int year : sorted_years) {
        DesignBlock block = engineer_derived_features(panel, year, spec);
        LabeledSlice slice = label_failure_window(panel, year, k);
        // Both are ordered by pipe_id within the year, so they align.
        if (slice.pipe_ids != block.row_ids) {
            throw Error("internal: label slice misaligned with design block");
        }
        out.block.append(block);
        out.labels.insert(out.labels.end(), slice.labels.begin(), slice.labels.end());
    }
    return out;
}

std::vector<std::string> EncoderState::encoded_column_names() const {
    std::vector<std::string> names;
    for (const auto& stat : numeric) names.push_back(stat.name);
    for (const auto& list : categorical) {
        for (const auto& category : list.categories) names.push_back(list.name + "=" + category);
    }
    return names;
}

EncoderState fit_encoder(const DesignBlock& block) {
    if (block.size() == 0) throw InvalidArgument("fit_encoder: empty design block");
    EncoderState state;
    const std::size_t n = block.size();

    state.numeric.reserve(block.numeric_names.size());
    for (std::size_t j = 0; j < block.numeric_names.size(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += block.numeric(i, j);
        const double mean = sum / double(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = block.numeric(i, j) - mean;
            ss += d * d;
        }
        EncoderState::NumericStat stat;
        stat.name = block.numeric_names[j];
        stat.mean = mean;
        stat.stddev = std::sqrt(ss / double(n));  // population convention
        state.numeric.push_back(std::move(stat));
    }

    for (std::size_t c = 0; c < block.categorical_names.size(); ++c) {
        EncoderState::CategoryList list;
        list.name = block.categorical_names[c];
        std::unordered_map<std::string, bool> seen;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& value = block.categorical_rows[i][c];
            if (seen.emplace(value, true).second) list.categories.push_back(value);
        }
        state.categorical.push_back(std::move(list));
    }

    state.provenance.row_count = n;
    auto years = block.row_years;
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());
    state.provenance.snapshot_years = std::move(years);
    return state;
}

FeatureMatrix apply_encoder(const DesignBlock& block, const EncoderState& encoder) {
    if (block.numeric_names.size() != encoder.numeric.size()) {
        throw InvalidArgument("encoder schema mismatch: numeric column count");
    }
    for (std::size_t j = 0; j < encoder.numeric.size(); ++j) {
        if (block.numeric_names[j] != encoder.numeric[j].name) {
            throw InvalidArgument("encoder schema mismatch: expected numeric column '" +
                                  encoder.numeric[j].name + "', got '" + block.numeric_names[j] +
                                  "'");
        }
    }
    if (block.categorical_names.size() != encoder.categorical.size()) {
        throw InvalidArgument("encoder schema mismatch: categorical column count");
    }
    for (std::size_t c = 0; c < encoder.categorical.size(); ++c) {
        if (block.categorical_names[c] != encoder.categorical[c].name) {
            throw InvalidArgument("encoder schema mismatch: expected categorical column '" +
                                  encoder.categorical[c].name + "', got '" +
                                  block.categorical_names[c] + "'");
        }
    }

    FeatureMatrix out;
    out.row_ids = block.row_ids;
    out.column_names = encoder.encoded_column_names();

    std::size_t cat_width = 0;
    for (const auto& list : encoder.categorical) cat_width += list.categories.size();
    const std::size_t width = encoder.numeric.size() + cat_width;
    out.values = Matrix(block.size(), width);

    for (std::size_t i = 0; i < block.size(); ++i) {
        std::size_t col = 0;
        for (std::size_t j = 0; j < encoder.numeric.size(); ++j) {
            const auto& stat = encoder.numeric[j];
            // Constant columns carry no information; they encode to zero.
            out.values(i, col++) =
                stat.stddev > 0.0 ? (block.numeric(i, j) - stat.mean) / stat.stddev : 0.0;
        }
        for (std::size_t c = 0; c < encoder.categorical.size(); ++c) {
            const auto& list = encoder.categorical[c];
            const std::string& value = block.categorical_rows[i][c];
            for (const auto& category : list.categories) {
                out.values(i, col++) = (value == category) ? 1.0 : 0.0;
            }
        }
    }
    return out;
}

}  // namespace pipefail
