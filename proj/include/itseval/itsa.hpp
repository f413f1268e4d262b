#pragma once

#include <string>
#include <vector>

#include "itseval/calendar.hpp"
#include "itseval/csv.hpp"
#include "itseval/regress.hpp"

namespace itseval::itsa {

enum class Mode { single, controlled };
const char* to_string(Mode m);

/// How the post-intervention slope variable is coded. The default counts
/// months since the intervention scaled by the activation level; `literal`
/// multiplies the level by the absolute study month instead.
enum class TrendCoding { since_intervention, literal };
const char* to_string(TrendCoding c);
TrendCoding trend_coding_from_string(const std::string& s);

/// Cumulative intervention roll-out: activated units per month out of a
/// fixed total. Sparse steps are carried forward between entries.
class InterventionSchedule {
public:
    struct Step {
        CalendarMonth month;
        double cumulative = 0.0;
    };

    InterventionSchedule(std::vector<Step> steps, double total_units);

    static InterventionSchedule read_csv(const csv::Table& table);

    [[nodiscard]] double total_units() const { return total_; }
    [[nodiscard]] const std::vector<Step>& steps() const { return steps_; }

    /// Cumulative activated units at a calendar month.
    [[nodiscard]] double cumulative_at(CalendarMonth m) const;

private:
    std::vector<Step> steps_;  // sorted by month
    double total_ = 0.0;
};

/// Regressor series for a segmented design over one window.
struct ItsaVariables {
    std::vector<double> time;    // 1..n
    std::vector<double> level;   // activation fraction in [0,1]
    std::vector<double> trend;
    std::vector<int> month_of_index;  // calendar month-of-year per row
};

/// Named design matrix plus its response and per-row calendar months.
struct SegmentedDesign {
    regress::DesignMatrix design;
    Eigen::VectorXd y;
    std::vector<int> month_of_row;
    Mode mode = Mode::single;
    int n_months = 0;  // months per group; rows = n_months * groups
};

/// A fitted segmented model: the pruned design, the AR order, the fit,
/// and the decision trail that produced them.
struct ItsaModelSpec {
    SegmentedDesign design;
    std::vector<std::string> retained_dummies;
    int ar_order = 0;
    regress::ArFitResult fit;
    std::vector<std::string> trail;
};

/// Outcome of the AR order search.
struct ArOrderSelection {
    int p = 0;
    bool passed = true;  // false when p_max was exhausted
    std::vector<std::string> trail;
};

/// Activation fraction per month: cumulative / total, clamped to [0,1].
std::vector<double> build_level(const InterventionSchedule& schedule,
                                const StudyWindow& window);

/// Post-intervention slope variable; see TrendCoding.
std::vector<double> build_trend(const std::vector<double>& level, int intervention_month,
                                TrendCoding coding = TrendCoding::since_intervention);

ItsaVariables make_variables(const StudyWindow& window, const InterventionSchedule& schedule,
                             TrendCoding coding = TrendCoding::since_intervention);

/// Single-group design: [(Intercept), time, level, trend, M1..M11],
/// December as the dummy reference month.
SegmentedDesign build_single_design(const std::vector<double>& rates,
                                    const ItsaVariables& vars);

/// Controlled design: treated rows stacked above control rows with
/// columns [(Intercept), time, tsp, tsp_time, level, trend, tsp_level,
/// tsp_trend, M1..M11].
SegmentedDesign build_controlled_design(const std::vector<double>& rates_treated,
                                        const std::vector<double>& rates_control,
                                        const ItsaVariables& vars);

/// Names of the month dummy columns present in a design.
std::vector<std::string> month_dummy_names(const SegmentedDesign& design);

/// Backward elimination of month dummies at significance alpha under a
/// fixed AR order. Core variables are never dropped.
ItsaModelSpec prune_seasonality(const SegmentedDesign& design, const Eigen::VectorXd& y,
                                int p, double alpha);

/// Walk the AR order up from zero until the whitened residuals pass the
/// Durbin-Watson band and show no partial autocorrelation at the next
/// lag. The full PACF (lags 1..p_max) is recorded in the trail and its
/// smallest offending lag beyond the current order sets the step target.
/// The accepted order is validated against order-1 by likelihood ratio.
ArOrderSelection select_ar_order(const SegmentedDesign& design, const Eigen::VectorXd& y,
                                 int p_max = 12, double dw_low = 1.6,
                                 double dw_high = 2.4);

}  // namespace itseval::itsa
