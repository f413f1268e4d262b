// Command-line front end: batch pipeline commands over CSV/JSON artifacts.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "itseval/commands.hpp"
#include "itseval/config.hpp"
#include "itseval/error.hpp"

namespace {

itseval::config::RunConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return itseval::config::RunConfig::from_json_file(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-experimental safety evaluation: propensity matching, "
                 "segmented time-series regression, and counterfactual effects"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Run configuration JSON")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Override the configured seed");

    auto* match = app.add_subcommand("match", "Fit the propensity model and select controls");
    std::string sections_csv;
    std::string crashes_csv;
    match->add_option("--sections", sections_csv, "Sections CSV")->required();
    match->add_option("--crashes", crashes_csv,
                      "Crash CSV (enables the pre-intervention balance report)");

    auto* fit = app.add_subcommand("fit", "Fit segmented models per crash category");
    std::string fit_crashes, fit_sections, fit_schedule, fit_mode = "single";
    fit->add_option("--crashes", fit_crashes, "Crash CSV")->required();
    fit->add_option("--sections", fit_sections, "Sections CSV")->required();
    fit->add_option("--schedule", fit_schedule, "Intervention schedule CSV")->required();
    fit->add_option("--mode", fit_mode, "single or controlled")->capture_default_str();

    auto* evaluate = app.add_subcommand("evaluate", "Counterfactual effect evaluation");
    std::string eval_model;
    evaluate->add_option("--model", eval_model, "Model JSON from fit")->required();

    auto* diagnose = app.add_subcommand("diagnose", "Residual diagnostics of a model");
    std::string diag_model;
    diagnose->add_option("--model", diag_model, "Model JSON from fit")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic data");
    std::string scenario_json;
    int replications = 200;
    simulate->add_option("--scenario", scenario_json, "Scenario JSON")->required();
    simulate->add_option("--replications", replications,
                         "Recovery-study replications (0 disables)")
        ->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        itseval::config::RunConfig cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;

        if (match->parsed()) {
            std::optional<std::string> crashes;
            if (!crashes_csv.empty()) crashes = crashes_csv;
            return itseval::cli::cmd_match(sections_csv, crashes, cfg, out_dir, std::cerr);
        }
        if (fit->parsed()) {
            itseval::itsa::Mode mode;
            if (fit_mode == "single")
                mode = itseval::itsa::Mode::single;
            else if (fit_mode == "controlled")
                mode = itseval::itsa::Mode::controlled;
            else
                throw itseval::InputError("--mode must be single or controlled");
            return itseval::cli::cmd_fit(fit_crashes, fit_sections, fit_schedule, mode, cfg,
                                         out_dir, std::cerr);
        }
        if (evaluate->parsed())
            return itseval::cli::cmd_evaluate(eval_model, cfg, out_dir, std::cerr);
        if (diagnose->parsed())
            return itseval::cli::cmd_diagnose(diag_model, out_dir, std::cerr);
        if (simulate->parsed())
            return itseval::cli::cmd_simulate(scenario_json, cfg, replications, seed,
                                              out_dir, std::cerr);
    } catch (const itseval::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return itseval::cli::kExitInput;
    } catch (const itseval::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return itseval::cli::kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return itseval::cli::kExitInput;
    }
    return itseval::cli::kExitInput;
}
