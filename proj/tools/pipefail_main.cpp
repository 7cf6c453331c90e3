#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipefail/commands.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/run_config.hpp"

namespace {

// Flags carried by every subcommand. CLI flags override the matching config
// file keys; overrides apply only when the flag was actually given.
struct SharedFlags {
    std::string config_path;
    std::string out_dir;
    std::string model;
    std::uint64_t seed = 0;
    int threads = 0;
    int horizon = 0;

    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* model_opt = nullptr;
    CLI::Option* horizon_opt = nullptr;
};

void add_shared_flags(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration file (key = value lines)")
        ->required();
    flags.out_opt = cmd->add_option("--out", flags.out_dir, "output directory override");
    flags.seed_opt = cmd->add_option("--seed", flags.seed, "seed override");
    flags.threads_opt =
        cmd->add_option("--threads", flags.threads, "worker thread override (0 = all cores)");
    flags.model_opt = cmd->add_option("--model", flags.model, "classifier override")
                          ->check(CLI::IsMember({"logit", "gbt"}));
    flags.horizon_opt = cmd->add_option("--horizon", flags.horizon, "label horizon override")
                            ->check(CLI::PositiveNumber);
}

pipefail::RunConfig resolve_config(const SharedFlags& flags) {
    pipefail::RunConfig config = pipefail::load_run_config(flags.config_path);
    if (flags.out_opt->count() > 0) config.out_dir = flags.out_dir;
    if (flags.seed_opt->count() > 0) config.seed = flags.seed;
    if (flags.threads_opt->count() > 0) config.threads = flags.threads;
    if (flags.model_opt->count() > 0) config.model = flags.model;
    if (flags.horizon_opt->count() > 0) config.horizon_k = flags.horizon;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"failure prediction and survival analysis for water pipe networks"};
    app.require_subcommand(1);

    // Each subcommand owns its flag set so option counts stay per-command.
    std::vector<std::unique_ptr<SharedFlags>> flag_sets;
    auto make_command = [&](CLI::App* parent, const std::string& name, const std::string& help) {
        CLI::App* cmd = parent->add_subcommand(name, help);
        flag_sets.push_back(std::make_unique<SharedFlags>());
        add_shared_flags(cmd, *flag_sets.back());
        return std::make_pair(cmd, flag_sets.back().get());
    };

    auto [synth, synth_flags] =
        make_command(&app, "synth", "generate a synthetic panel with known truth");
    synth->callback([flags = synth_flags] { pipefail::cmd_synth(resolve_config(*flags)); });

    auto [cv, cv_flags] = make_command(
        &app, "cv", "rolling-origin cross-validation, threshold pick and held-out test");
    cv->callback([flags = cv_flags] { pipefail::cmd_cv(resolve_config(*flags)); });

    auto [train, train_flags] =
        make_command(&app, "train", "fit once and score the held-out test year");
    train->callback([flags = train_flags] { pipefail::cmd_train(resolve_config(*flags)); });

    auto [explain, explain_flags] =
        make_command(&app, "explain", "feature attributions for the stored model");
    explain->callback([flags = explain_flags] { pipefail::cmd_explain(resolve_config(*flags)); });

    CLI::App* survival = app.add_subcommand("survival", "proportional-hazards toolbox");
    survival->require_subcommand(1);
    for (const std::string action : {"fit", "eval", "screen", "curves", "materials"}) {
        const char* help = action == "fit"      ? "fit the elastic-net hazards model"
                           : action == "eval"   ? "held-out concordance and Brier grid"
                           : action == "screen" ? "single-feature risk screen"
                           : action == "curves" ? "per-pipe survival curves"
                                                : "per-material survival outlook";
        auto [sub, sub_flags] = make_command(survival, action, help);
        sub->callback([flags = sub_flags, action] {
            pipefail::cmd_survival(resolve_config(*flags), action);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const pipefail::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pipefail::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const pipefail::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
