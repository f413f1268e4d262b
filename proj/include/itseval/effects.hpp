#pragma once

#include <span>
#include <string>
#include <vector>

#include "itseval/calendar.hpp"
#include "itseval/itsa.hpp"

namespace itseval::effects {

/// Monthly expected outcomes for the treated entity with the intervention
/// (lambda) and under the counterfactual without it (pi), each with a
/// seasonality-excluded variant for plotting.
struct CounterfactualPair {
    std::vector<double> lambda;
    std::vector<double> pi;
    std::vector<double> lambda_deseasoned;
    std::vector<double> pi_deseasoned;
};

struct YearEffect {
    int year = 0;
    double lambda_total = 0.0;
    double pi_total = 0.0;
    double delta = 0.0;   // lambda_total - pi_total
    double gamma = 0.0;   // delta / pi_total
    bool flagged = false; // pi_total <= 0: excluded from the CRF mean
};

struct EffectTable {
    std::vector<YearEffect> years;
    double overall_delta = 0.0;
    double overall_gamma = 0.0;
    double crf = 0.0;  // -(mean of unflagged yearly gamma)
    double cmf = 1.0;  // 1 - crf
};

/// Expected paths from a fitted segmented model. The single-group
/// counterfactual removes the level and trend contributions; the
/// controlled counterfactual removes only the treated-group interaction
/// contributions, keeping the control group's own post-intervention
/// changes.
CounterfactualPair predict_counterfactual(const itsa::ItsaModelSpec& spec);

/// Crash reduction factor from yearly relative changes (fractions).
double crf_from_gammas(std::span<const double> yearly_gamma);
inline double cmf_from_crf(double crf) { return 1.0 - crf; }

/// Aggregate monthly paths into calendar-year effects over eval_years.
EffectTable evaluate_effects(const CounterfactualPair& pair, const StudyWindow& window,
                             const std::vector<int>& eval_years);

/// Table export: one row per year plus overall/CRF/CMF footer rows.
std::string effect_table_csv(const EffectTable& table);

}  // namespace itseval::effects
