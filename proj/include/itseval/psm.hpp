#pragma once

#include <map>
#include <string>
#include <vector>

#include "itseval/csv.hpp"
#include "itseval/panel.hpp"

namespace itseval::psm {

/// Covariates of one street section feeding the propensity model.
struct SectionProfile {
    std::string section_id;
    double aadt = 0.0;          // vehicles/day, pre-intervention mean
    int oneway = 0;             // 0/1
    int lanes = 1;
    double median_ratio = 0.0;  // fraction of the section with a median
    double bus_routes = 0.0;
    double major_freq = 0.0;      // buses/h
    double secondary_freq = 0.0;  // buses/h
    double signal_density = 0.0;  // signals/mi
    double length = 0.0;          // miles, exposure offset

    void validate() const;
};

/// Link convention for the selection probability. `standard` is the usual
/// logistic Pr = 1/(1+exp(-eta)); `literal` flips the sign inside the
/// exponent, Pr = 1/(1+exp(eta)).
enum class LinkSign { standard, literal };

/// Fitted selection model: intercept plus coefficients for the retained
/// covariates (AADT enters as its natural log), with ln(length) as a
/// fixed-coefficient exposure offset. Covariates that are constant across
/// the fitting sample are dropped.
struct PropensityModel {
    LinkSign link_sign = LinkSign::standard;
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> coefficients;
    bool converged = true;
    int iterations = 0;

    [[nodiscard]] double linear_predictor(const SectionProfile& p) const;
    [[nodiscard]] double score(const SectionProfile& p) const;
};

/// The full ordered covariate list in model order.
const std::vector<std::string>& covariate_names();

/// Value of one named covariate for a profile.
double covariate_value(const SectionProfile& p, const std::string& name);

struct Match {
    std::string control_id;
    double distance = 0.0;
};

struct MatchResult {
    // treated id -> k best matches ordered by (distance, control id)
    std::vector<std::pair<std::string, std::vector<Match>>> matches;
    std::map<std::string, int> times_matched;

    [[nodiscard]] int total_multiplicity() const;
};

struct BalanceRow {
    panel::Category category = panel::Category::all;
    double mean_or = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_pairs = 0;
    int n_skipped = 0;
};

using BalanceReport = std::vector<BalanceRow>;

/// True when a score is too close to 0 or 1 for the positivity assumption
/// to be credible.
bool positivity_violated(double score);

/// Read profiles from the sections CSV (shares the file with panel).
std::vector<SectionProfile> read_profiles(const csv::Table& table);

/// Fit the selection logit on the standard covariates with offset
/// ln(length). Throws FitError on perfect separation.
PropensityModel fit_propensity(const std::vector<SectionProfile>& profiles,
                               const std::vector<bool>& treated,
                               LinkSign link_sign = LinkSign::standard);

/// k-nearest-neighbor matching with replacement on score distance.
/// Ties break toward the lexicographically smaller control id.
MatchResult knn_match(const std::vector<std::pair<std::string, double>>& scores_treated,
                      const std::vector<std::pair<std::string, double>>& scores_control,
                      int k);

/// Pre-intervention comparability: consecutive-year-pair odds ratios of
/// annual counts between the groups, per category. Pairs touching a zero
/// count are skipped and flagged; a category with no usable pair throws.
BalanceReport odds_ratio_balance(const panel::MonthlyPanel& panel, int pre_years);

/// Match CSV exports: (treated_id, rank, control_id, score_distance) and
/// (control_id, times_matched).
std::string matches_csv(const MatchResult& result);
std::string times_matched_csv(const MatchResult& result);

}  // namespace itseval::psm
