#include "itseval/psm.hpp"

#include <algorithm>
#include <cmath>

#include "itseval/dist.hpp"
#include "itseval/error.hpp"
#include "itseval/regress.hpp"

namespace itseval::psm {

namespace {

double clamp_probability(double p) {
    if (p <= 0.0) return std::numeric_limits<double>::min();
    if (p >= 1.0) return std::nextafter(1.0, 0.0);
    return p;
}

}  // namespace

void SectionProfile::validate() const {
    if (!(aadt > 0.0))
        throw InputError("section '" + section_id + "': aadt must be positive");
    if (!(length > 0.0))
        throw InputError("section '" + section_id + "': length must be positive");
    if (median_ratio < 0.0 || median_ratio > 1.0)
        throw InputError("section '" + section_id + "': median_ratio must lie in [0,1]");
    if (lanes < 1)
        throw InputError("section '" + section_id + "': lanes must be at least 1");
}

const std::vector<std::string>& covariate_names() {
    static const std::vector<std::string> names = {
        "ln_aadt",    "oneway",         "lanes",          "median_ratio",
        "bus_routes", "major_freq",     "secondary_freq", "signal_density"};
    return names;
}

double covariate_value(const SectionProfile& p, const std::string& name) {
    if (name == "ln_aadt") return std::log(p.aadt);
    if (name == "oneway") return static_cast<double>(p.oneway);
    if (name == "lanes") return static_cast<double>(p.lanes);
    if (name == "median_ratio") return p.median_ratio;
    if (name == "bus_routes") return p.bus_routes;
    if (name == "major_freq") return p.major_freq;
    if (name == "secondary_freq") return p.secondary_freq;
    if (name == "signal_density") return p.signal_density;
    throw Error("unknown covariate '" + name + "'");
}

double PropensityModel::linear_predictor(const SectionProfile& p) const {
    p.validate();
    double eta = intercept;
    for (const auto& [name, coef] : coefficients) eta += coef * covariate_value(p, name);
    eta += std::log(p.length);
    return eta;
}

double PropensityModel::score(const SectionProfile& p) const {
    const double eta = linear_predictor(p);
    const double sign = link_sign == LinkSign::standard ? 1.0 : -1.0;
    return clamp_probability(1.0 / (1.0 + std::exp(-sign * eta)));
}

bool positivity_violated(double score) {
    return score < 1e-6 || score > 1.0 - 1e-6;
}

std::vector<SectionProfile> read_profiles(const csv::Table& t) {
    std::vector<SectionProfile> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        SectionProfile p;
        p.section_id = t.cell(r, "section_id");
        p.aadt = t.number(r, "aadt");
        p.oneway = static_cast<int>(t.integer(r, "oneway"));
        p.lanes = static_cast<int>(t.integer(r, "lanes"));
        p.median_ratio = t.number(r, "median_ratio");
        p.bus_routes = t.number(r, "bus_routes");
        p.major_freq = t.number(r, "major_freq");
        p.secondary_freq = t.number(r, "secondary_freq");
        p.signal_density = t.number(r, "signal_density");
        p.length = t.number(r, "length_mi");
        try {
            p.validate();
        } catch (const InputError& e) {
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) + ": " +
                             e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

PropensityModel fit_propensity(const std::vector<SectionProfile>& profiles,
                               const std::vector<bool>& treated, LinkSign link_sign) {
    const std::size_t n = profiles.size();
    if (n != treated.size())
        throw InputError("fit_propensity: profiles and treated flags differ in length");
    if (n < 2) throw InputError("fit_propensity: need at least two sections");
    for (const auto& p : profiles) p.validate();

    // Drop covariates that are constant over the sample; with identical
    // covariates everywhere this degenerates to an intercept-only model.
    std::vector<std::string> active;
    for (const auto& name : covariate_names()) {
        const double first = covariate_value(profiles[0], name);
        bool varies = false;
        for (const auto& p : profiles)
            if (covariate_value(p, name) != first) {
                varies = true;
                break;
            }
        if (varies) active.push_back(name);
    }

    regress::DesignMatrix design;
    design.names.push_back("(Intercept)");
    for (const auto& name : active) design.names.push_back(name);
    design.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(active.size() + 1));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Eigen::VectorXd offset(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        design.X(r, 0) = 1.0;
        for (std::size_t j = 0; j < active.size(); ++j)
            design.X(r, static_cast<Eigen::Index>(j + 1)) =
                covariate_value(profiles[i], active[j]);
        y(r) = treated[i] ? 1.0 : 0.0;
        // Under the literal link the bracketed predictor keeps +ln(length),
        // which is -ln(length) in the standard parametrization.
        offset(r) = (link_sign == LinkSign::standard ? 1.0 : -1.0) *
                    std::log(profiles[i].length);
    }

    const regress::LogitFitResult fit = regress::fit_logit(design, y, offset);

    PropensityModel model;
    model.link_sign = link_sign;
    model.converged = fit.converged;
    model.iterations = fit.iterations;
    const double flip = link_sign == LinkSign::standard ? 1.0 : -1.0;
    model.intercept = flip * fit.beta(0);
    for (std::size_t j = 0; j < active.size(); ++j)
        model.coefficients.emplace_back(active[j],
                                        flip * fit.beta(static_cast<Eigen::Index>(j + 1)));
    return model;
}

int MatchResult::total_multiplicity() const {
    int total = 0;
    for (const auto& [id, count] : times_matched) total += count;
    return total;
}

MatchResult knn_match(const std::vector<std::pair<std::string, double>>& scores_treated,
                      const std::vector<std::pair<std::string, double>>& scores_control,
                      int k) {
    if (k < 1) throw InputError("knn_match: k must be at least 1");
    if (scores_control.size() < static_cast<std::size_t>(k))
        throw InputError("knn_match: only " + std::to_string(scores_control.size()) +
                         " candidate controls for k = " + std::to_string(k));

    MatchResult result;
    for (const auto& [tid, ts] : scores_treated) {
        std::vector<Match> ranked;
        ranked.reserve(scores_control.size());
        for (const auto& [cid, cs] : scores_control)
            ranked.push_back({cid, std::fabs(ts - cs)});
        std::sort(ranked.begin(), ranked.end(), [](const Match& a, const Match& b) {
            if (a.distance != b.distance) return a.distance < b.distance;
            return a.control_id < b.control_id;
        });
        ranked.resize(static_cast<std::size_t>(k));
        for (const auto& m : ranked) ++result.times_matched[m.control_id];
        result.matches.emplace_back(tid, std::move(ranked));
    }
    return result;
}

BalanceReport odds_ratio_balance(const panel::MonthlyPanel& pnl, int pre_years) {
    if (pre_years < 2)
        throw InputError("odds_ratio_balance: need at least two pre-intervention years");
    const auto all_years = pnl.window().years();
    if (static_cast<std::size_t>(pre_years) > all_years.size())
        throw InputError("odds_ratio_balance: pre-intervention years exceed the window");

    BalanceReport report;
    for (panel::Category cat : panel::kCategories) {
        const auto treated =
            panel::annual_totals(pnl.counts(panel::Group::treated, cat), pnl.window());
        const auto control = panel::annual_totals(
            pnl.counts(panel::Group::candidate_control, cat), pnl.window());

        std::vector<double> ors;
        int skipped = 0;
        for (int y = 0; y + 1 < pre_years; ++y) {
            const double t0 = treated[static_cast<std::size_t>(y)];
            const double t1 = treated[static_cast<std::size_t>(y + 1)];
            const double c0 = control[static_cast<std::size_t>(y)];
            const double c1 = control[static_cast<std::size_t>(y + 1)];
            if (t0 <= 0.0 || t1 <= 0.0 || c0 <= 0.0 || c1 <= 0.0) {
                ++skipped;
                continue;
            }
            ors.push_back((t0 / t1) / (c0 / c1));
        }
        if (ors.empty())
            throw InputError(std::string("odds_ratio_balance: no usable year pair for "
                                         "category '") +
                             panel::to_string(cat) + "' (zero annual counts)");

        BalanceRow row;
        row.category = cat;
        row.n_pairs = static_cast<int>(ors.size());
        row.n_skipped = skipped;
        double mean = 0.0;
        for (double v : ors) mean += v;
        mean /= static_cast<double>(ors.size());
        row.mean_or = mean;
        if (ors.size() > 1) {
            double ss = 0.0;
            for (double v : ors) ss += (v - mean) * (v - mean);
            const double sd = std::sqrt(ss / static_cast<double>(ors.size() - 1));
            row.se = sd / std::sqrt(static_cast<double>(ors.size()));
        }
        const double z = dist::normal_quantile(0.975);
        row.ci_low = row.mean_or - z * row.se;
        row.ci_high = row.mean_or + z * row.se;
        report.push_back(row);
    }
    return report;
}

std::string matches_csv(const MatchResult& result) {
    csv::Writer w({"treated_id", "rank", "control_id", "score_distance"});
    for (const auto& [tid, ms] : result.matches)
        for (std::size_t r = 0; r < ms.size(); ++r)
            w.row({tid, std::to_string(r + 1), ms[r].control_id,
                   csv::Writer::format(ms[r].distance)});
    return w.text();
}

std::string times_matched_csv(const MatchResult& result) {
    csv::Writer w({"control_id", "times_matched"});
    for (const auto& [cid, count] : result.times_matched)
        w.row({cid, std::to_string(count)});
    return w.text();
}

}  // namespace itseval::psm
