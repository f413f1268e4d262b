#include "itseval/effects.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "itseval/csv.hpp"
#include "itseval/error.hpp"

namespace itseval::effects {

namespace {

bool is_month_dummy(const std::string& name) {
    return name.size() >= 2 && name[0] == 'M' &&
           std::all_of(name.begin() + 1, name.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

CounterfactualPair predict_counterfactual(const itsa::ItsaModelSpec& spec) {
    if (spec.fit.beta.size() == 0)
        throw InputError("predict_counterfactual: model has not been fitted");

    const auto& X = spec.design.design.X;
    const auto& names = spec.design.design.names;
    const auto n = static_cast<Eigen::Index>(spec.design.n_months);
    // Treated rows come first in a controlled design, and are all rows in
    // a single-group design.
    const Eigen::MatrixXd Xt = X.topRows(n);

    std::vector<std::string> removed_for_pi;
    if (spec.design.mode == itsa::Mode::single)
        removed_for_pi = {"level", "trend"};
    else
        removed_for_pi = {"tsp_level", "tsp_trend"};

    CounterfactualPair out;
    out.lambda.assign(static_cast<std::size_t>(n), 0.0);
    out.pi.assign(static_cast<std::size_t>(n), 0.0);
    out.lambda_deseasoned.assign(static_cast<std::size_t>(n), 0.0);
    out.pi_deseasoned.assign(static_cast<std::size_t>(n), 0.0);

    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const double b = spec.fit.beta(col);
        const bool dummy = is_month_dummy(names[j]);
        const bool intervention =
            std::find(removed_for_pi.begin(), removed_for_pi.end(), names[j]) !=
            removed_for_pi.end();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double c = b * Xt(t, col);
            const auto i = static_cast<std::size_t>(t);
            out.lambda[i] += c;
            if (!dummy) out.lambda_deseasoned[i] += c;
            if (!intervention) {
                out.pi[i] += c;
                if (!dummy) out.pi_deseasoned[i] += c;
            }
        }
    }
    return out;
}

double crf_from_gammas(std::span<const double> yearly_gamma) {
    if (yearly_gamma.empty())
        throw InputError("crf_from_gammas: no yearly values");
    double mean = 0.0;
    for (double g : yearly_gamma) mean += g;
    mean /= static_cast<double>(yearly_gamma.size());
    return -mean;
}

EffectTable evaluate_effects(const CounterfactualPair& pair, const StudyWindow& window,
                             const std::vector<int>& eval_years) {
    if (pair.lambda.size() != pair.pi.size())
        throw InputError("evaluate_effects: lambda and pi lengths differ");
    if (pair.lambda.size() != static_cast<std::size_t>(window.total_months()))
        throw InputError("evaluate_effects: path length does not match the window");
    if (eval_years.empty())
        throw InputError("evaluate_effects: no evaluation years given");

    EffectTable table;
    std::vector<double> gammas;
    for (int year : eval_years) {
        if (year < window.start().year || year > window.end().year)
            throw InputError("evaluate_effects: year " + std::to_string(year) +
                             " outside the study window");
        const int first = window.index_of({year, 1});
        const int last = window.index_of({year, 12});
        if (first + 1 < window.intervention_month())
            throw InputError("evaluate_effects: year " + std::to_string(year) +
                             " starts before the intervention");

        YearEffect ye;
        ye.year = year;
        for (int t = first; t <= last; ++t) {
            ye.lambda_total += pair.lambda[static_cast<std::size_t>(t)];
            ye.pi_total += pair.pi[static_cast<std::size_t>(t)];
        }
        ye.delta = ye.lambda_total - ye.pi_total;
        if (ye.pi_total > 0.0) {
            ye.gamma = ye.delta / ye.pi_total;
            gammas.push_back(ye.gamma);
        } else {
            ye.flagged = true;
            ye.gamma = 0.0;
        }
        table.overall_delta += ye.delta;
        table.years.push_back(ye);
    }

    double pi_sum = 0.0;
    for (const auto& ye : table.years) pi_sum += ye.pi_total;
    table.overall_gamma = pi_sum > 0.0 ? table.overall_delta / pi_sum : 0.0;
    if (gammas.empty())
        throw InputError("evaluate_effects: every year has a non-positive "
                         "counterfactual total");
    table.crf = crf_from_gammas(gammas);
    table.cmf = cmf_from_crf(table.crf);
    return table;
}

std::string effect_table_csv(const EffectTable& table) {
    csv::Writer w({"year", "lambda", "pi", "delta", "gamma_pct", "flagged"});
    for (const auto& ye : table.years)
        w.row({std::to_string(ye.year), csv::Writer::format(ye.lambda_total),
               csv::Writer::format(ye.pi_total), csv::Writer::format(ye.delta),
               csv::Writer::format(100.0 * ye.gamma), ye.flagged ? "1" : "0"});
    w.row({"overall", "", "", csv::Writer::format(table.overall_delta),
           csv::Writer::format(100.0 * table.overall_gamma), ""});
    w.row({"CRF", "", "", csv::Writer::format(table.crf), "", ""});
    w.row({"CMF", "", "", csv::Writer::format(table.cmf), "", ""});
    return w.text();
}

}  // namespace itseval::effects
