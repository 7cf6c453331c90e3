#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pipefail/cv.hpp"
#include "pipefail/synth.hpp"

namespace pipefail {

// Flat key = value run configuration ('#' starts a comment, blank lines
// ignored). Every key has a default; unknown or repeated keys are rejected so
// typos cannot silently fall back to defaults.
struct RunConfig {
    // Shared
    std::string data_dir = "data";  // expects inventory.csv / failures.csv / operations.csv
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = all cores

    // Classification protocol
    int horizon_k = 4;
    int gap = -1;  // -1 = use horizon_k
    int n_folds = 5;
    bool horizon_sweep = false;  // cv: run k = 1..horizon_k, one scores row each
    std::string model = "gbt";
    double threshold = 0.5;  // decision threshold for train (cv selects its own)

    // Balancing
    bool smote_enabled = true;
    int smote_k = 5;
    double smote_ratio = 1.0;

    // Model hyperparameters
    double logit_lambda = 0.01;
    int logit_max_epochs = 1000;
    double logit_tolerance = 1e-6;
    int gbt_trees = 200;
    int gbt_depth = 4;
    double gbt_learning_rate = 0.1;
    double gbt_lambda = 1.0;
    double gbt_gamma = 0.0;
    double gbt_min_child_weight = 1.0;

    // Explain
    bool explain_dump_rows = false;  // also write per-row attributions

    // Survival
    double cox_alpha = 0.5;
    double cox_lambda = -1.0;  // >= 0 pins lambda; negative = tuned path
    int cox_lambda_points = 20;
    int cox_max_epochs = 1000;
    double cox_tolerance = 1e-6;
    double survival_horizon = 2.0;  // years ahead for the material summary
    int brier_horizon = 100;        // Brier grid 1..brier_horizon
    int curve_horizon = 30;         // years covered by curve outputs
    int curve_sample = 500;         // sampled pipes in survival curves

    // Generator
    int synth_pipes = 1000;
    int synth_start_year = 2004;
    int synth_end_year = 2019;
    double synth_base_rate = 0.01;
    double synth_split_probability = 0.0;
    std::string synth_material_mix = "FD:0.35,FG:0.3,PEAMC:0.2,AG:0.1,OTHER:0.05";
    double synth_effect_age = 0.8;
    double synth_effect_aspect_ratio = -0.5;
    double synth_effect_material_fd = -0.7;
    double synth_effect_failure_history = 0.6;
    double synth_effect_pipe_operations = 0.3;
    double synth_effect_pressure = 0.4;

    PipelineConfig pipeline() const;    // throws InvalidArgument on bad values
    GeneratorConfig generator() const;  // same
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace pipefail
