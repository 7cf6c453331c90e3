#include "pipefail/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "pipefail/csv.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/rng.hpp"

namespace pipefail {

namespace {

// Substream tags: 1 = static attribute draws, 2 = per-year hazard draws.
constexpr std::uint64_t kStaticStream = 1;
constexpr std::uint64_t kYearStream = 2;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string pipe_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%06d", index);
    return buf;
}

template <typename T>
const T& pick_weighted(const std::vector<std::pair<T, double>>& options, double u) {
    double cum = 0.0;
    for (const auto& [value, weight] : options) {
        cum += weight;
        if (u < cum) return value;
    }
    return options.back().first;
}

struct PipeState {
    int index = 0;  // substream index, also creation order
    std::string id;
    std::string parent_id;
    int parent_index = -1;
    int created_year = 0;  // first snapshot year

    std::string material;
    double diameter = 0.0;
    double length = 0.0;
    double original_length = 0.0;
    int install_year = 0;
    std::string city, network_type, ind_greenzone, assimilable, traffic, gallery;
    double sidewalk = 0.0, greenzone = 0.0;
    double pressure = 0.0, maxvsmin = 0.0, estres = 0.0;
    int num_connections = 0;
    double conn_age_base = 0.0;  // value at start_year, ages one year per year
    int num_elements = 0;
    double elem_age_base = 0.0;

    std::vector<int> failure_years;
    double static_risk = 0.0;

    int failures_through(int year) const {
        return static_cast<int>(
            std::upper_bound(failure_years.begin(), failure_years.end(), year) -
            failure_years.begin());
    }
};

const std::vector<std::pair<double, double>>& diameter_catalog() {
    static const std::vector<std::pair<double, double>> catalog = {
        {60.0, 0.25}, {80.0, 0.25}, {100.0, 0.20}, {150.0, 0.15}, {300.0, 0.10}, {600.0, 0.05}};
    return catalog;
}

const std::vector<std::pair<std::string, double>>& city_mix() {
    static const std::vector<std::pair<std::string, double>> mix = {
        {"BCN", 0.50}, {"HOS", 0.15}, {"COR", 0.15}, {"SAD", 0.10}, {"BAD", 0.10}};
    return mix;
}

PipeState draw_initial_pipe(const GeneratorConfig& config, int index) {
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(index), kStaticStream);
    PipeState p;
    p.index = index;
    p.id = pipe_name(index);
    p.created_year = config.start_year;

    p.material = pick_weighted(config.material_mix, rng.uniform01());
    p.diameter = pick_weighted(diameter_catalog(), rng.uniform01());
    p.length = std::clamp(rng.lognormal(std::log(120.0), 0.8), 5.0, 3000.0);
    p.original_length = p.length;
    p.install_year = config.start_year -
                     static_cast<int>(rng.uniform_int(
                         static_cast<std::uint64_t>(config.start_year - 1950 + 1)));
    p.city = pick_weighted(city_mix(), rng.uniform01());
    p.network_type = rng.uniform01() < 0.8 ? "DISTRIBUTION" : "TRANSPORT";
    p.sidewalk = rng.uniform01() * p.length;
    if (rng.uniform01() < 0.3) {
        p.ind_greenzone = "YES";
        p.greenzone = rng.uniform01() * p.length;
    } else {
        p.ind_greenzone = "NO";
        p.greenzone = 0.0;
    }
    p.assimilable = rng.uniform01() < 0.15 ? "YES" : "NO";
    const double traffic_u = rng.uniform01();
    p.traffic = traffic_u < 0.5 ? "LOW" : (traffic_u < 0.8 ? "MEDIUM" : "HIGH");
    p.gallery = rng.uniform01() < 0.05 ? "YES" : "NO";
    p.pressure = rng.lognormal(std::log(40.0), 0.4);
    p.maxvsmin = 1.0 + std::abs(rng.normal()) * 0.2;
    p.estres = p.pressure * (0.8 + 0.4 * rng.uniform01());
    p.num_connections = static_cast<int>(rng.poisson(p.length / 50.0));
    const double age_at_start = static_cast<double>(config.start_year - p.install_year);
    p.conn_age_base = rng.uniform01() * age_at_start;
    p.num_elements = static_cast<int>(rng.poisson(p.length / 100.0));
    p.elem_age_base = rng.uniform01() * age_at_start;
    return p;
}

PipeState draw_child_pipe(const GeneratorConfig& config, const PipeState& parent, int index,
                          int split_year) {
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(index), kStaticStream);
    PipeState p = parent;
    p.index = index;
    p.id = parent.id + "-" + std::to_string(split_year);
    p.parent_id = parent.id;
    p.parent_index = parent.index;
    p.created_year = split_year + 1;
    p.failure_years.clear();

    const double fraction = rng.uniform(0.3, 0.7);
    p.original_length = parent.length;
    p.length = parent.length * fraction;
    p.sidewalk = parent.sidewalk * fraction;
    p.greenzone = parent.greenzone * fraction;
    p.num_connections = static_cast<int>(std::lround(parent.num_connections * fraction));
    p.num_elements = static_cast<int>(std::lround(parent.num_elements * fraction));
    return p;
}

struct Standardizer {
    double mean = 0.0;
    double std = 1.0;
    double z(double value) const { return (value - mean) / std; }
};

Standardizer standardize(const std::vector<double>& values) {
    Standardizer s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    if (s.std <= 1e-12) s.std = 1.0;
    return s;
}

PipeSnapshot to_snapshot(const PipeState& p, const GeneratorConfig& config, int year) {
    PipeSnapshot row;
    row.pipe_id = p.id;
    row.snapshot_year = year;
    row.material = p.material;
    row.diameter_mm = p.diameter;
    row.length_m = p.length;
    row.original_length_m = p.original_length;
    row.install_year = p.install_year;
    row.num_connections = p.num_connections;
    row.avg_connections_age =
        std::max(0.0, p.conn_age_base + static_cast<double>(year - config.start_year));
    row.num_elements = p.num_elements;
    row.avg_elements_age =
        std::max(0.0, p.elem_age_base + static_cast<double>(year - config.start_year));
    row.city = p.city;
    row.network_type = p.network_type;
    row.sidewalk_length_m = p.sidewalk;
    row.ind_greenzone = p.ind_greenzone;
    row.greenzone_length_m = p.greenzone;
    row.assimilable_to_transport = p.assimilable;
    row.level_of_traffic = p.traffic;
    row.underground_gallery = p.gallery;
    row.pressure = p.pressure;
    row.maxvsmin_pressure = p.maxvsmin;
    row.estres_pressure = p.estres;
    row.parent_id = p.parent_id;
    return row;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (n_pipes < 1) throw InvalidArgument("generator: n_pipes must be >= 1");
    if (start_year > end_year || start_year < 1900 || end_year > 2100) {
        throw InvalidArgument("generator: year range must be ordered and within 1900-2100");
    }
    if (!(base_rate > 0.0) || base_rate > 0.05) {
        throw InvalidArgument("generator: base_rate must lie in (0, 0.05]");
    }
    if (split_probability < 0.0 || split_probability >= 1.0) {
        throw InvalidArgument("generator: split_probability must lie in [0, 1)");
    }
    if (material_mix.empty()) throw InvalidArgument("generator: material_mix is empty");
    double total = 0.0;
    for (const auto& [name, weight] : material_mix) {
        if (name.empty() || weight < 0.0) {
            throw InvalidArgument("generator: material weights must be named and nonnegative");
        }
        total += weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument("generator: material weights must sum to 1");
    }
}

std::uint64_t config_fingerprint(const GeneratorConfig& config) {
    std::string text;
    auto add = [&text](const std::string& key, const std::string& value) {
        text += key;
        text += '=';
        text += value;
        text += '\n';
    };
    add("n_pipes", std::to_string(config.n_pipes));
    add("start_year", std::to_string(config.start_year));
    add("end_year", std::to_string(config.end_year));
    add("seed", std::to_string(config.seed));
    add("base_rate", format_double(config.base_rate));
    add("split_probability", format_double(config.split_probability));
    std::string mix;
    for (const auto& [name, weight] : config.material_mix) {
        if (!mix.empty()) mix += ',';
        mix += name + ":" + format_double(weight);
    }
    add("material_mix", mix);
    add("effect_age", format_double(config.effect_age));
    add("effect_aspect_ratio", format_double(config.effect_aspect_ratio));
    add("effect_material_fd", format_double(config.effect_material_fd));
    add("effect_failure_history", format_double(config.effect_failure_history));
    add("effect_pipe_operations", format_double(config.effect_pipe_operations));
    add("effect_pressure", format_double(config.effect_pressure));

    std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a 64-bit
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

SyntheticPanel generate_panel(const GeneratorConfig& config) {
    config.validate();
    const int mid_year = config.start_year + (config.end_year - config.start_year) / 2;

    std::vector<PipeState> pipes;
    pipes.reserve(static_cast<std::size_t>(config.n_pipes));
    for (int i = 0; i < config.n_pipes; ++i) {
        pipes.push_back(draw_initial_pipe(config, i));
    }

    std::vector<double> ages, aspects, pressures;
    ages.reserve(pipes.size());
    for (const PipeState& p : pipes) {
        ages.push_back(static_cast<double>(mid_year - p.install_year));
        aspects.push_back(p.diameter / p.length);
        pressures.push_back(p.pressure);
    }
    const Standardizer age_std = standardize(ages);
    const Standardizer aspect_std = standardize(aspects);
    const Standardizer pressure_std = standardize(pressures);

    auto static_risk = [&](const PipeState& p) {
        return config.effect_age * age_std.z(static_cast<double>(mid_year - p.install_year)) +
               config.effect_aspect_ratio * aspect_std.z(p.diameter / p.length) +
               config.effect_material_fd * (p.material == "FD" ? 1.0 : 0.0) +
               config.effect_pressure * pressure_std.z(p.pressure);
    };
    for (PipeState& p : pipes) p.static_risk = static_risk(p);

    // Calibrate the intercept so the mean hazard at mid-year ages, with no
    // failure feedback yet, matches base_rate.
    double lo = -30.0, hi = 10.0;
    for (int iter = 0; iter < 100; ++iter) {
        const double b0 = 0.5 * (lo + hi);
        double mean = 0.0;
        for (const PipeState& p : pipes) mean += sigmoid(b0 + p.static_risk);
        mean /= static_cast<double>(pipes.size());
        if (mean < config.base_rate) {
            lo = b0;
        } else {
            hi = b0;
        }
    }
    const double b0 = 0.5 * (lo + hi);

    SyntheticPanel out;
    int next_index = config.n_pipes;
    for (int year = config.start_year; year <= config.end_year; ++year) {
        const std::size_t alive = pipes.size();  // children created this year start next year
        for (std::size_t i = 0; i < alive; ++i) {
            if (pipes[i].created_year > year) continue;
            out.inventory.push_back(to_snapshot(pipes[i], config, year));
        }
        for (std::size_t i = 0; i < alive; ++i) {
            PipeState& p = pipes[i];
            if (p.created_year > year) continue;

            int history = p.failures_through(year - 1);
            for (int anc = p.parent_index; anc >= 0; anc = pipes[static_cast<std::size_t>(anc)].parent_index) {
                history += pipes[static_cast<std::size_t>(anc)].failures_through(year - 1);
            }
            const int ops_prev = p.failures_through(year - 1) - p.failures_through(year - 2);

            const double age_term =
                config.effect_age *
                (age_std.z(static_cast<double>(year - p.install_year)) -
                 age_std.z(static_cast<double>(mid_year - p.install_year)));
            const double eta = b0 + p.static_risk + age_term +
                               config.effect_failure_history * static_cast<double>(history) +
                               config.effect_pipe_operations * static_cast<double>(ops_prev);

            Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(p.index), kYearStream,
                                     static_cast<std::uint64_t>(year));
            if (rng.uniform01() < sigmoid(eta)) {
                p.failure_years.push_back(year);
                out.failures.push_back({p.id, year});
                out.operations.by_pipe[p.id][year][0] += 1;
                if (p.parent_index < 0 && p.index >= 1) {
                    // Crew activity spills onto neighbouring assets.
                    for (int delta : {-1, 1}) {
                        const int n = p.index + delta;
                        if (n >= 0 && n < config.n_pipes) {
                            out.operations.by_pipe[pipe_name(n)][year][1] += 1;
                        }
                    }
                    for (int delta : {-2, 2}) {
                        const int n = p.index + delta;
                        if (n >= 0 && n < config.n_pipes) {
                            out.operations.by_pipe[pipe_name(n)][year][2] += 1;
                        }
                    }
                }
            }
            if (config.split_probability > 0.0 && year < config.end_year &&
                p.failures_through(year) > 0 && rng.uniform01() < config.split_probability) {
                pipes.push_back(draw_child_pipe(config, p, next_index, year));
                PipeState& child = pipes.back();
                child.static_risk = static_risk(child);
                ++next_index;
            }
        }
    }

    out.truth.fingerprint = config_fingerprint(config);
    out.truth.b0 = b0;
    out.truth.coefficients = {{"age", config.effect_age},
                              {"aspect_ratio", config.effect_aspect_ratio},
                              {"material_FD", config.effect_material_fd},
                              {"failure_history", config.effect_failure_history},
                              {"pipe_operations", config.effect_pipe_operations},
                              {"pressure", config.effect_pressure}};
    out.truth.age_mean = age_std.mean;
    out.truth.age_std = age_std.std;
    out.truth.aspect_mean = aspect_std.mean;
    out.truth.aspect_std = aspect_std.std;
    out.truth.pressure_mean = pressure_std.mean;
    out.truth.pressure_std = pressure_std.std;
    for (const PipeState& p : pipes) {
        out.truth.pipe_ids.push_back(p.id);
        out.truth.static_risk.push_back(p.static_risk);
    }
    return out;
}

void write_synthetic_dir(const SyntheticPanel& panel, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_inventory_csv(dir / "inventory.csv", panel.inventory);
    write_failures_csv(dir / "failures.csv", panel.failures);
    write_operations_csv(dir / "operations.csv", panel.operations);

    nlohmann::ordered_json truth;
    truth["fingerprint"] = panel.truth.fingerprint;
    truth["b0"] = panel.truth.b0;
    nlohmann::ordered_json coef;
    for (const auto& [name, value] : panel.truth.coefficients) coef[name] = value;
    truth["coefficients"] = coef;
    truth["standardization"] = {{"age_mean", panel.truth.age_mean},
                                {"age_std", panel.truth.age_std},
                                {"aspect_mean", panel.truth.aspect_mean},
                                {"aspect_std", panel.truth.aspect_std},
                                {"pressure_mean", panel.truth.pressure_mean},
                                {"pressure_std", panel.truth.pressure_std}};
    truth["pipe_ids"] = panel.truth.pipe_ids;
    truth["static_risk"] = panel.truth.static_risk;

    std::ofstream file(dir / "truth.json", std::ios::binary);
    if (!file) {
        throw DataError("cannot write " + (dir / "truth.json").string());
    }
    file << truth.dump(2) << '\n';
}

SyntheticTruth planted_truth(const std::filesystem::path& truth_json,
                             const GeneratorConfig& config) {
    std::ifstream file(truth_json, std::ios::binary);
    if (!file) {
        throw DataError("cannot read " + truth_json.string());
    }
    nlohmann::json parsed;
    try {
        file >> parsed;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid truth file " + truth_json.string() + ": " + e.what());
    }
    SyntheticTruth truth;
    truth.fingerprint = parsed.at("fingerprint").get<std::uint64_t>();
    if (truth.fingerprint != config_fingerprint(config)) {
        throw DataError("truth file " + truth_json.string() +
                        " does not match the given generator config");
    }
    truth.b0 = parsed.at("b0").get<double>();
    for (const auto& [name, value] : parsed.at("coefficients").items()) {
        truth.coefficients[name] = value.get<double>();
    }
    const auto& standardization = parsed.at("standardization");
    truth.age_mean = standardization.at("age_mean").get<double>();
    truth.age_std = standardization.at("age_std").get<double>();
    truth.aspect_mean = standardization.at("aspect_mean").get<double>();
    truth.aspect_std = standardization.at("aspect_std").get<double>();
    truth.pressure_mean = standardization.at("pressure_mean").get<double>();
    truth.pressure_std = standardization.at("pressure_std").get<double>();
    truth.pipe_ids = parsed.at("pipe_ids").get<std::vector<std::string>>();
    truth.static_risk = parsed.at("static_risk").get<std::vector<double>>();
    if (truth.pipe_ids.size() != truth.static_risk.size()) {
        throw DataError("truth file " + truth_json.string() + " has misaligned risk entries");
    }
    return truth;
}

}  // namespace pipefail
