#pragma once

#include <string>

#include "pipefail/run_config.hpp"

namespace pipefail {

// Subcommand bodies behind the CLI. Each takes the parsed run configuration,
// reads inputs from data_dir, writes artifacts into out_dir and prints a short
// summary to stdout. Errors are reported by throwing: InvalidArgument for bad
// configuration or a kind mismatch, DataError for broken inputs,
// ConvergenceError when a fit gives up. The CLI maps those onto exit codes.

// Generates a synthetic panel and writes inventory.csv, failures.csv,
// operations.csv and truth.json into out_dir.
void cmd_synth(const RunConfig& config);

// Rolling-origin cross-validation, threshold selection and the final held-out
// test evaluation. Writes threshold_sweep.csv, scores.csv, model.json and
// encoder.json. With horizon_sweep the whole protocol repeats for
// k = 1..horizon_k and scores.csv carries one row per horizon.
void cmd_cv(const RunConfig& config);

// Fits on every usable train year and scores the test year at the configured
// threshold (no fold loop). Writes model.json, encoder.json and scores.csv.
void cmd_train(const RunConfig& config);

// Explains the model stored in out_dir: coefficients.csv for the linear
// model, shap_summary.csv (plus shap_rows.csv when explain_dump_rows is set)
// for the boosted trees, computed over the stored test year's rows.
void cmd_explain(const RunConfig& config);

// Survival toolbox. Actions: "fit" (elastic-net proportional hazards,
// coxnet_model.json), "eval" (held-out concordance and Brier grid,
// survival_scores.csv), "screen" (per-feature screen, screen.csv), "curves"
// (per-pipe survival curves for a seeded sample, survival_curves.csv),
// "materials" (material_summary.csv and material_curves.csv).
void cmd_survival(const RunConfig& config, const std::string& action);

}  // namespace pipefail
