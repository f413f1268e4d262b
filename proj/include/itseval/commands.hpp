#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "itseval/config.hpp"
#include "itseval/itsa.hpp"

namespace itseval::cli {

/// Exit-code contract shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some category failed, others emitted
inline constexpr int kExitInput = 2;    // bad input or configuration

/// A fitted segmented model plus the context needed to evaluate it later.
struct FittedModel {
    std::string category = "all";
    StudyWindow window;
    double scale = 100.0;
    itsa::ItsaModelSpec spec;
    bool ar_search_passed = true;
    // Per-month response series used to build the design (control only in
    // controlled mode).
    std::vector<double> y_treated;
    std::vector<double> y_control;
    itsa::ItsaVariables vars;
};

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);
FittedModel model_from_json_file(const std::string& path);

/// Propensity fit + matching + optional comparability report. The balance
/// report needs crash data; without it only the match artifacts are
/// written.
int cmd_match(const std::string& sections_csv, const std::optional<std::string>& crashes_csv,
              const config::RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Five per-category segmented fits (all, pdo, fi, pedestrian, bike) with
/// AR order selection and seasonality pruning; one model JSON each.
int cmd_fit(const std::string& crashes_csv, const std::string& sections_csv,
            const std::string& schedule_csv, itsa::Mode mode, const config::RunConfig& cfg,
            const std::string& out_dir, std::ostream& log);

/// Counterfactual evaluation of a fitted model: effect table plus
/// seasonality-excluded plot data.
int cmd_evaluate(const std::string& model_json, const config::RunConfig& cfg,
                 const std::string& out_dir, std::ostream& log);

/// Residual diagnostics of a fitted model.
int cmd_diagnose(const std::string& model_json, const std::string& out_dir,
                 std::ostream& log);

/// Synthetic data generation and, when replications > 0, a parameter
/// recovery study.
int cmd_simulate(const std::string& scenario_json, const config::RunConfig& cfg,
                 int replications, std::optional<std::uint64_t> seed_override,
                 const std::string& out_dir, std::ostream& log);

}  // namespace itseval::cli
