#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pipefail/ingest.hpp"
#include "pipefail/panel.hpp"

namespace pipefail {

// Seeded panel generator with planted effects. Failure of pipe i in year y is
// Bernoulli with probability sigmoid(b0 + sum effect_j * driver_j(i, y)); the
// continuous drivers (age, aspect ratio, pressure) are standardized against
// the initial population at the panel's middle year, material FD enters as an
// indicator, and failure history / previous-year operations enter as raw
// counts so realized failures feed the hazard forward. b0 is calibrated by
// bisection so the population mean hazard at the middle year matches
// base_rate before feedback.
struct GeneratorConfig {
    int n_pipes = 1000;
    int start_year = 2004;
    int end_year = 2019;
    std::uint64_t seed = 1;
    double base_rate = 0.01;  // target annual failure probability, within (0, 0.05]

    // Per (pipe, year) chance that a pipe with at least one past failure is
    // split; the child keeps install year and material, records the parent id,
    // and starts with a shorter length than its recorded original length.
    double split_probability = 0.0;

    std::vector<std::pair<std::string, double>> material_mix = {
        {"FD", 0.35}, {"FG", 0.30}, {"PEAMC", 0.20}, {"AG", 0.10}, {"OTHER", 0.05}};

    double effect_age = 0.8;
    double effect_aspect_ratio = -0.5;
    double effect_material_fd = -0.7;
    double effect_failure_history = 0.6;
    double effect_pipe_operations = 0.3;
    double effect_pressure = 0.4;

    void validate() const;  // throws InvalidArgument
};

struct SyntheticTruth {
    std::uint64_t fingerprint = 0;  // FNV-1a of the canonical config text
    double b0 = 0.0;
    std::map<std::string, double> coefficients;  // named planted effects
    // Standardization constants behind the planted drivers.
    double age_mean = 0.0, age_std = 1.0;
    double aspect_mean = 0.0, aspect_std = 1.0;
    double pressure_mean = 0.0, pressure_std = 1.0;
    // Static linear risk per pipe (age taken at the middle year, history and
    // operations at zero), aligned with pipe_ids.
    std::vector<std::string> pipe_ids;
    std::vector<double> static_risk;
};

struct SyntheticPanel {
    std::vector<PipeSnapshot> inventory;  // year-major, creation order
    std::vector<FailureEvent> failures;
    OperationCounts operations;
    SyntheticTruth truth;
};

SyntheticPanel generate_panel(const GeneratorConfig& config);

// inventory.csv, failures.csv, operations.csv, truth.json
void write_synthetic_dir(const SyntheticPanel& panel, const std::filesystem::path& dir);

std::uint64_t config_fingerprint(const GeneratorConfig& config);

// Loads truth.json and checks its fingerprint against the config that
// supposedly produced it. Throws DataError on a mismatch.
SyntheticTruth planted_truth(const std::filesystem::path& truth_json,
                             const GeneratorConfig& config);

}  // namespace pipefail
