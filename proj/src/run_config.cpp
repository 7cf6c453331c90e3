#include "pipefail/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pipefail/csv.hpp"
#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    std::size_t end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

void set_string(std::string RunConfig::* field, RunConfig& config, const std::string&,
                const std::string& value) {
    config.*field = value;
}

void set_bool(bool RunConfig::* field, RunConfig& config, const std::string& key,
              const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") {
        config.*field = true;
    } else if (value == "false" || value == "no" || value == "0") {
        config.*field = false;
    } else {
        throw InvalidArgument("config key '" + key + "': expected a boolean, got '" + value + "'");
    }
}

void set_int(int RunConfig::* field, RunConfig& config, const std::string& key,
             const std::string& value) {
    long long parsed = 0;
    if (!parse_int(value, parsed) || parsed < -1000000000LL || parsed > 1000000000LL) {
        throw InvalidArgument("config key '" + key + "': expected an integer, got '" + value +
                              "'");
    }
    config.*field = static_cast<int>(parsed);
}

void set_u64(std::uint64_t RunConfig::* field, RunConfig& config, const std::string& key,
             const std::string& value) {
    long long parsed = 0;
    if (!parse_int(value, parsed) || parsed < 0) {
        throw InvalidArgument("config key '" + key + "': expected a nonnegative integer, got '" +
                              value + "'");
    }
    config.*field = static_cast<std::uint64_t>(parsed);
}

void set_double(double RunConfig::* field, RunConfig& config, const std::string& key,
                const std::string& value) {
    double parsed = 0.0;
    if (!parse_double(value, parsed)) {
        throw InvalidArgument("config key '" + key + "': expected a number, got '" + value + "'");
    }
    config.*field = parsed;
}

const std::map<std::string, Setter>& key_table() {
    using namespace std::placeholders;
    static const std::map<std::string, Setter> table = {
        {"data_dir", std::bind(set_string, &RunConfig::data_dir, _1, _2, _3)},
        {"out_dir", std::bind(set_string, &RunConfig::out_dir, _1, _2, _3)},
        {"seed", std::bind(set_u64, &RunConfig::seed, _1, _2, _3)},
        {"threads", std::bind(set_int, &RunConfig::threads, _1, _2, _3)},
        {"horizon_k", std::bind(set_int, &RunConfig::horizon_k, _1, _2, _3)},
        {"gap", std::bind(set_int, &RunConfig::gap, _1, _2, _3)},
        {"n_folds", std::bind(set_int, &RunConfig::n_folds, _1, _2, _3)},
        {"horizon_sweep", std::bind(set_bool, &RunConfig::horizon_sweep, _1, _2, _3)},
        {"model", std::bind(set_string, &RunConfig::model, _1, _2, _3)},
        {"threshold", std::bind(set_double, &RunConfig::threshold, _1, _2, _3)},
        {"smote_enabled", std::bind(set_bool, &RunConfig::smote_enabled, _1, _2, _3)},
        {"smote_k", std::bind(set_int, &RunConfig::smote_k, _1, _2, _3)},
        {"smote_ratio", std::bind(set_double, &RunConfig::smote_ratio, _1, _2, _3)},
        {"logit_lambda", std::bind(set_double, &RunConfig::logit_lambda, _1, _2, _3)},
        {"logit_max_epochs", std::bind(set_int, &RunConfig::logit_max_epochs, _1, _2, _3)},
        {"logit_tolerance", std::bind(set_double, &RunConfig::logit_tolerance, _1, _2, _3)},
        {"gbt_trees", std::bind(set_int, &RunConfig::gbt_trees, _1, _2, _3)},
        {"gbt_depth", std::bind(set_int, &RunConfig::gbt_depth, _1, _2, _3)},
        {"gbt_learning_rate", std::bind(set_double, &RunConfig::gbt_learning_rate, _1, _2, _3)},
        {"gbt_lambda", std::bind(set_double, &RunConfig::gbt_lambda, _1, _2, _3)},
        {"gbt_gamma", std::bind(set_double, &RunConfig::gbt_gamma, _1, _2, _3)},
        {"gbt_min_child_weight",
         std::bind(set_double, &RunConfig::gbt_min_child_weight, _1, _2, _3)},
        {"explain_dump_rows", std::bind(set_bool, &RunConfig::explain_dump_rows, _1, _2, _3)},
        {"cox_alpha", std::bind(set_double, &RunConfig::cox_alpha, _1, _2, _3)},
        {"cox_lambda", std::bind(set_double, &RunConfig::cox_lambda, _1, _2, _3)},
        {"cox_lambda_points", std::bind(set_int, &RunConfig::cox_lambda_points, _1, _2, _3)},
        {"cox_max_epochs", std::bind(set_int, &RunConfig::cox_max_epochs, _1, _2, _3)},
        {"cox_tolerance", std::bind(set_double, &RunConfig::cox_tolerance, _1, _2, _3)},
        {"survival_horizon", std::bind(set_double, &RunConfig::survival_horizon, _1, _2, _3)},
        {"brier_horizon", std::bind(set_int, &RunConfig::brier_horizon, _1, _2, _3)},
        {"curve_horizon", std::bind(set_int, &RunConfig::curve_horizon, _1, _2, _3)},
        {"curve_sample", std::bind(set_int, &RunConfig::curve_sample, _1, _2, _3)},
        {"synth_pipes", std::bind(set_int, &RunConfig::synth_pipes, _1, _2, _3)},
        {"synth_start_year", std::bind(set_int, &RunConfig::synth_start_year, _1, _2, _3)},
        {"synth_end_year", std::bind(set_int, &RunConfig::synth_end_year, _1, _2, _3)},
        {"synth_base_rate", std::bind(set_double, &RunConfig::synth_base_rate, _1, _2, _3)},
        {"synth_split_probability",
         std::bind(set_double, &RunConfig::synth_split_probability, _1, _2, _3)},
        {"synth_material_mix",
         std::bind(set_string, &RunConfig::synth_material_mix, _1, _2, _3)},
        {"synth_effect_age", std::bind(set_double, &RunConfig::synth_effect_age, _1, _2, _3)},
        {"synth_effect_aspect_ratio",
         std::bind(set_double, &RunConfig::synth_effect_aspect_ratio, _1, _2, _3)},
        {"synth_effect_material_fd",
         std::bind(set_double, &RunConfig::synth_effect_material_fd, _1, _2, _3)},
        {"synth_effect_failure_history",
         std::bind(set_double, &RunConfig::synth_effect_failure_history, _1, _2, _3)},
        {"synth_effect_pipe_operations",
         std::bind(set_double, &RunConfig::synth_effect_pipe_operations, _1, _2, _3)},
        {"synth_effect_pressure",
         std::bind(set_double, &RunConfig::synth_effect_pressure, _1, _2, _3)},
    };
    return table;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig config;
    std::istringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto setter = key_table().find(key);
        if (setter == key_table().end()) {
            throw InvalidArgument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        }
        if (!seen.emplace(key, line_no).second) {
            throw InvalidArgument("config line " + std::to_string(line_no) + ": key '" + key +
                                  "' already set on line " + std::to_string(seen[key]));
        }
        setter->second(config, key, value);
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw InvalidArgument("cannot read config file " + path.string());
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_run_config_text(buffer.str());
}

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.model = parse_model_kind(model);
    p.use_smote = smote_enabled;
    if (smote_k < 1) throw InvalidArgument("config key 'smote_k': must be >= 1");
    if (!(smote_ratio > 0.0)) throw InvalidArgument("config key 'smote_ratio': must be > 0");
    p.smote.k_neighbors = smote_k;
    p.smote.target_ratio = smote_ratio;
    if (logit_lambda < 0.0) throw InvalidArgument("config key 'logit_lambda': must be >= 0");
    if (logit_max_epochs < 1) {
        throw InvalidArgument("config key 'logit_max_epochs': must be >= 1");
    }
    if (!(logit_tolerance > 0.0)) {
        throw InvalidArgument("config key 'logit_tolerance': must be > 0");
    }
    p.logit_lambda = logit_lambda;
    p.logit_max_epochs = logit_max_epochs;
    p.logit_tolerance = logit_tolerance;
    if (gbt_trees < 1) throw InvalidArgument("config key 'gbt_trees': must be >= 1");
    if (gbt_depth < 1) throw InvalidArgument("config key 'gbt_depth': must be >= 1");
    if (!(gbt_learning_rate > 0.0)) {
        throw InvalidArgument("config key 'gbt_learning_rate': must be > 0");
    }
    if (gbt_lambda < 0.0) throw InvalidArgument("config key 'gbt_lambda': must be >= 0");
    if (gbt_gamma < 0.0) throw InvalidArgument("config key 'gbt_gamma': must be >= 0");
    if (gbt_min_child_weight < 0.0) {
        throw InvalidArgument("config key 'gbt_min_child_weight': must be >= 0");
    }
    p.gbt.n_trees = gbt_trees;
    p.gbt.max_depth = gbt_depth;
    p.gbt.learning_rate = gbt_learning_rate;
    p.gbt.lambda = gbt_lambda;
    p.gbt.gamma = gbt_gamma;
    p.gbt.min_child_weight = gbt_min_child_weight;
    p.seed = seed;
    p.threads = threads;
    return p;
}

GeneratorConfig RunConfig::generator() const {
    GeneratorConfig g;
    if (synth_pipes < 1) throw InvalidArgument("config key 'synth_pipes': must be >= 1");
    g.n_pipes = synth_pipes;
    g.start_year = synth_start_year;
    g.end_year = synth_end_year;
    g.seed = seed;
    g.base_rate = synth_base_rate;
    g.split_probability = synth_split_probability;
    g.material_mix.clear();
    std::istringstream stream(synth_material_mix);
    std::string entry;
    while (std::getline(stream, entry, ',')) {
        const std::size_t colon = entry.find(':');
        double weight = 0.0;
        if (colon == std::string::npos || trim(entry.substr(0, colon)).empty() ||
            !parse_double(trim(entry.substr(colon + 1)), weight)) {
            throw InvalidArgument(
                "config key 'synth_material_mix': expected NAME:WEIGHT,... got '" +
                synth_material_mix + "'");
        }
        g.material_mix.emplace_back(trim(entry.substr(0, colon)), weight);
    }
    g.effect_age = synth_effect_age;
    g.effect_aspect_ratio = synth_effect_aspect_ratio;
    g.effect_material_fd = synth_effect_material_fd;
    g.effect_failure_history = synth_effect_failure_history;
    g.effect_pipe_operations = synth_effect_pipe_operations;
    g.effect_pressure = synth_effect_pressure;
    g.validate();
    return g;
}

}  // namespace pipefail
