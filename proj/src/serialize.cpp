#include "pipefail/serialize.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

void write_json_file(const std::string& path, const ordered_json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot open '" + path + "' for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw DataError("failed while writing '" + path + "'");
    }
}

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open '" + path + "'");
    }
    try {
        return ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw DataError(path + ": not valid JSON: " + e.what());
    }
}

const ordered_json& need(const ordered_json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw DataError(path + ": missing field '" + std::string(key) + "'");
    }
    return *it;
}

double need_double(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_number()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be a number");
    }
    return v.get<double>();
}

long long need_int(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_number_integer()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be an integer");
    }
    return v.get<long long>();
}

bool need_bool(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_boolean()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be a boolean");
    }
    return v.get<bool>();
}

std::string need_string(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_string()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<double> need_doubles(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_array()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_number()) {
            throw DataError(path + ": field '" + std::string(key) + "' must hold numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

std::vector<int> need_ints(const ordered_json& j, const std::string& path, const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_array()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be an array");
    }
    std::vector<int> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_number_integer()) {
            throw DataError(path + ": field '" + std::string(key) + "' must hold integers");
        }
        out.push_back(item.get<int>());
    }
    return out;
}

std::vector<std::string> need_strings(const ordered_json& j, const std::string& path,
                                      const char* key) {
    const ordered_json& v = need(j, path, key);
    if (!v.is_array()) {
        throw DataError(path + ": field '" + std::string(key) + "' must be an array");
    }
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_string()) {
            throw DataError(path + ": field '" + std::string(key) + "' must hold strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

void check_header(const ordered_json& j, const std::string& path, const char* artifact) {
    if (need_int(j, path, "schema_version") != kSchemaVersion) {
        throw DataError(path + ": unsupported schema_version");
    }
    if (need_string(j, path, "artifact") != artifact) {
        throw DataError(path + ": expected a '" + std::string(artifact) + "' artifact");
    }
}

ordered_json logit_to_json(const LogitModel& m) {
    ordered_json j;
    j["columns"] = m.column_names;
    j["intercept"] = m.intercept;
    j["beta"] = m.beta;
    j["lambda_l1"] = m.lambda_l1;
    j["converged"] = m.converged;
    j["epochs_run"] = m.epochs_run;
    return j;
}

LogitModel logit_from_json(const ordered_json& j, const std::string& path) {
    LogitModel m;
    m.column_names = need_strings(j, path, "columns");
    m.intercept = need_double(j, path, "intercept");
    m.beta = need_doubles(j, path, "beta");
    m.lambda_l1 = need_double(j, path, "lambda_l1");
    m.converged = need_bool(j, path, "converged");
    m.epochs_run = static_cast<int>(need_int(j, path, "epochs_run"));
    if (m.beta.size() != m.column_names.size()) {
        throw DataError(path + ": beta length does not match the column list");
    }
    return m;
}

ordered_json gbt_to_json(const BoostedEnsemble& m) {
    ordered_json params;
    params["n_trees"] = m.params.n_trees;
    params["max_depth"] = m.params.max_depth;
    params["learning_rate"] = m.params.learning_rate;
    params["lambda"] = m.params.lambda;
    params["gamma"] = m.params.gamma;
    params["min_child_weight"] = m.params.min_child_weight;

    ordered_json trees = ordered_json::array();
    for (const Tree& tree : m.trees) {
        ordered_json t;
        std::vector<int> feature, left, right;
        std::vector<double> threshold, weight, cover;
        feature.reserve(tree.nodes.size());
        for (const TreeNode& node : tree.nodes) {
            feature.push_back(node.feature);
            threshold.push_back(node.threshold);
            left.push_back(node.left);
            right.push_back(node.right);
            weight.push_back(node.weight);
            cover.push_back(node.cover);
        }
        t["feature"] = feature;
        t["threshold"] = threshold;
        t["left"] = left;
        t["right"] = right;
        t["weight"] = weight;
        t["cover"] = cover;
        trees.push_back(std::move(t));
    }

    ordered_json j;
    j["columns"] = m.column_names;
    j["base_score"] = m.base_score;
    j["params"] = std::move(params);
    j["trees"] = std::move(trees);
    return j;
}

BoostedEnsemble gbt_from_json(const ordered_json& j, const std::string& path) {
    BoostedEnsemble m;
    m.column_names = need_strings(j, path, "columns");
    m.base_score = need_double(j, path, "base_score");

    const ordered_json& params = need(j, path, "params");
    m.params.n_trees = static_cast<int>(need_int(params, path, "n_trees"));
    m.params.max_depth = static_cast<int>(need_int(params, path, "max_depth"));
    m.params.learning_rate = need_double(params, path, "learning_rate");
    m.params.lambda = need_double(params, path, "lambda");
    m.params.gamma = need_double(params, path, "gamma");
    m.params.min_child_weight = need_double(params, path, "min_child_weight");

    const ordered_json& trees = need(j, path, "trees");
    if (!trees.is_array()) {
        throw DataError(path + ": field 'trees' must be an array");
    }
    const int n_cols = static_cast<int>(m.column_names.size());
    for (const auto& t : trees) {
        const std::vector<int> feature = need_ints(t, path, "feature");
        const std::vector<double> threshold = need_doubles(t, path, "threshold");
        const std::vector<int> left = need_ints(t, path, "left");
        const std::vector<int> right = need_ints(t, path, "right");
        const std::vector<double> weight = need_doubles(t, path, "weight");
        const std::vector<double> cover = need_doubles(t, path, "cover");
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n ||
            weight.size() != n || cover.size() != n || n == 0) {
            throw DataError(path + ": tree arrays are empty or misaligned");
        }
        Tree tree;
        tree.nodes.resize(n);
        const int limit = static_cast<int>(n);
        for (std::size_t i = 0; i < n; ++i) {
            TreeNode& node = tree.nodes[i];
            node.feature = feature[i];
            node.threshold = threshold[i];
            node.left = left[i];
            node.right = right[i];
            node.weight = weight[i];
            node.cover = cover[i];
            if (node.feature >= n_cols) {
                throw DataError(path + ": tree references a feature outside the column list");
            }
            if (!node.is_leaf() && (node.left < 0 || node.left >= limit || node.right < 0 ||
                                    node.right >= limit)) {
                throw DataError(path + ": tree child index out of range");
            }
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

ordered_json encoder_payload(const EncoderState& encoder) {
    ordered_json numeric = ordered_json::array();
    for (const auto& stat : encoder.numeric) {
        ordered_json item;
        item["name"] = stat.name;
        item["mean"] = stat.mean;
        item["stddev"] = stat.stddev;
        numeric.push_back(std::move(item));
    }
    ordered_json categorical = ordered_json::array();
    for (const auto& list : encoder.categorical) {
        ordered_json item;
        item["name"] = list.name;
        item["categories"] = list.categories;
        categorical.push_back(std::move(item));
    }
    ordered_json provenance;
    provenance["snapshot_years"] = encoder.provenance.snapshot_years;
    provenance["row_count"] = encoder.provenance.row_count;

    ordered_json j;
    j["numeric"] = std::move(numeric);
    j["categorical"] = std::move(categorical);
    j["provenance"] = std::move(provenance);
    return j;
}

EncoderState encoder_from_payload(const ordered_json& j, const std::string& path) {
    EncoderState encoder;
    const ordered_json& numeric = need(j, path, "numeric");
    if (!numeric.is_array()) {
        throw DataError(path + ": field 'numeric' must be an array");
    }
    for (const auto& item : numeric) {
        EncoderState::NumericStat stat;
        stat.name = need_string(item, path, "name");
        stat.mean = need_double(item, path, "mean");
        stat.stddev = need_double(item, path, "stddev");
        encoder.numeric.push_back(std::move(stat));
    }
    const ordered_json& categorical = need(j, path, "categorical");
    if (!categorical.is_array()) {
        throw DataError(path + ": field 'categorical' must be an array");
    }
    for (const auto& item : categorical) {
        EncoderState::CategoryList list;
        list.name = need_string(item, path, "name");
        list.categories = need_strings(item, path, "categories");
        encoder.categorical.push_back(std::move(list));
    }
    const ordered_json& provenance = need(j, path, "provenance");
    encoder.provenance.snapshot_years = need_ints(provenance, path, "snapshot_years");
    encoder.provenance.row_count =
        static_cast<std::size_t>(need_int(provenance, path, "row_count"));
    return encoder;
}

}  // namespace

void save_classifier(const std::string& path, const ClassifierArtifact& artifact) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "classifier";
    j["kind"] = model_kind_name(artifact.kind);
    j["horizon_k"] = artifact.horizon_k;
    j["test_year"] = artifact.test_year;
    j["train_years"] = artifact.train_years;
    j["threshold"] = artifact.threshold;
    if (artifact.kind == ModelKind::logit) {
        j["logit"] = logit_to_json(artifact.logit);
    } else {
        j["gbt"] = gbt_to_json(artifact.gbt);
    }
    write_json_file(path, j);
}

ClassifierArtifact load_classifier(const std::string& path) {
    const ordered_json j = read_json_file(path);
    check_header(j, path, "classifier");
    ClassifierArtifact artifact;
    const std::string kind = need_string(j, path, "kind");
    if (kind == "logit") {
        artifact.kind = ModelKind::logit;
    } else if (kind == "gbt") {
        artifact.kind = ModelKind::gbt;
    } else {
        throw DataError(path + ": unknown model kind '" + kind + "'");
    }
    artifact.horizon_k = static_cast<int>(need_int(j, path, "horizon_k"));
    artifact.test_year = static_cast<int>(need_int(j, path, "test_year"));
    artifact.train_years = need_ints(j, path, "train_years");
    artifact.threshold = need_double(j, path, "threshold");
    if (artifact.kind == ModelKind::logit) {
        artifact.logit = logit_from_json(need(j, path, "logit"), path);
    } else {
        artifact.gbt = gbt_from_json(need(j, path, "gbt"), path);
    }
    return artifact;
}

void save_encoder(const std::string& path, const EncoderState& encoder) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "encoder";
    ordered_json payload = encoder_payload(encoder);
    for (auto& [key, value] : payload.items()) {
        j[key] = std::move(value);
    }
    write_json_file(path, j);
}

EncoderState load_encoder(const std::string& path) {
    const ordered_json j = read_json_file(path);
    check_header(j, path, "encoder");
    return encoder_from_payload(j, path);
}

void save_cox(const std::string& path, const CoxArtifact& artifact) {
    ordered_json model;
    model["columns"] = artifact.model.column_names;
    model["beta"] = artifact.model.beta;
    model["lambda"] = artifact.model.lambda;
    model["alpha"] = artifact.model.alpha;
    model["converged"] = artifact.model.converged;
    model["baseline_times"] = artifact.model.baseline_times;
    model["baseline_cumhaz"] = artifact.model.baseline_cumhaz;

    ordered_json selection;
    selection["lambda_path"] = artifact.lambda_path;
    selection["holdout_cindex"] = artifact.holdout_cindex;
    selection["selected"] = artifact.selected;

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "cox";
    j["model"] = std::move(model);
    j["encoder"] = encoder_payload(artifact.encoder);
    j["selection"] = std::move(selection);
    write_json_file(path, j);
}

CoxArtifact load_cox(const std::string& path) {
    const ordered_json j = read_json_file(path);
    check_header(j, path, "cox");
    CoxArtifact artifact;
    const ordered_json& model = need(j, path, "model");
    artifact.model.column_names = need_strings(model, path, "columns");
    artifact.model.beta = need_doubles(model, path, "beta");
    artifact.model.lambda = need_double(model, path, "lambda");
    artifact.model.alpha = need_double(model, path, "alpha");
    artifact.model.converged = need_bool(model, path, "converged");
    artifact.model.baseline_times = need_doubles(model, path, "baseline_times");
    artifact.model.baseline_cumhaz = need_doubles(model, path, "baseline_cumhaz");
    if (artifact.model.beta.size() != artifact.model.column_names.size()) {
        throw DataError(path + ": beta length does not match the column list");
    }
    if (artifact.model.baseline_times.size() != artifact.model.baseline_cumhaz.size()) {
        throw DataError(path + ": baseline arrays are misaligned");
    }
    artifact.encoder = encoder_from_payload(need(j, path, "encoder"), path);
    const ordered_json& selection = need(j, path, "selection");
    artifact.lambda_path = need_doubles(selection, path, "lambda_path");
    artifact.holdout_cindex = need_doubles(selection, path, "holdout_cindex");
    artifact.selected = static_cast<std::size_t>(need_int(selection, path, "selected"));
    if (artifact.lambda_path.size() != artifact.holdout_cindex.size()) {
        throw DataError(path + ": selection arrays are misaligned");
    }
    return artifact;
}

}  // namespace pipefail
