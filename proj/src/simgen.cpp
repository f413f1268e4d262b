#include "itseval/simgen.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "itseval/effects.hpp"
#include "itseval/error.hpp"

using nlohmann::ordered_json;

namespace itseval::simgen {

namespace {

void require_keys(const ordered_json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw InputError(context + ": unknown key '" + key + "'");
    }
}

bool stationary(const std::vector<double>& phi) {
    if (phi.empty()) return true;
    const auto p = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        companion(0, j) = phi[static_cast<std::size_t>(j)];
    if (p > 1)
        companion.block(1, 0, p - 1, p - 1).setIdentity();
    const auto eigs = companion.eigenvalues();
    for (Eigen::Index i = 0; i < p; ++i)
        if (std::abs(eigs(i)) >= 1.0 - 1e-12) return false;
    return true;
}

std::vector<int> post_intervention_years(const StudyWindow& w) {
    std::vector<int> years;
    for (int y = w.start().year; y <= w.end().year; ++y) {
        if (CalendarMonth{y, 1} < w.start() || CalendarMonth{y, 12} > w.end()) continue;
        if (w.index_of({y, 1}) + 1 >= w.intervention_month()) years.push_back(y);
    }
    return years;
}

}  // namespace

double NormalRng::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on uniforms in (0,1].
    const double inv = 1.0 / (static_cast<double>(engine_.max()) + 1.0);
    double u1 = 0.0;
    do {
        u1 = (static_cast<double>(engine_()) + 1.0) * inv;
    } while (u1 <= 0.0);
    const double u2 = (static_cast<double>(engine_()) + 1.0) * inv;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

void ScenarioSpec::validate() const {
    const std::size_t expected = mode == itsa::Mode::single ? 4 : 8;
    if (beta.size() != expected)
        throw InputError("scenario '" + name + "': expected " + std::to_string(expected) +
                         " beta coefficients, got " + std::to_string(beta.size()));
    if (sigma < 0.0)
        throw InputError("scenario '" + name + "': sigma must be non-negative");
    if (!stationary(phi))
        throw InputError("scenario '" + name + "': AR parameters are not stationary");
    if (schedule_steps.empty())
        throw InputError("scenario '" + name + "': intervention schedule is empty");
}

itsa::InterventionSchedule ScenarioSpec::schedule() const {
    return itsa::InterventionSchedule(schedule_steps, schedule_total);
}

std::string ScenarioSpec::to_json() const {
    ordered_json j;
    j["name"] = name;
    j["mode"] = itsa::to_string(mode);
    j["window"] = {{"start", window.start().to_string()},
                   {"end", window.end().to_string()},
                   {"intervention_month", window.intervention_month()}};
    j["beta"] = beta;
    j["month_effects"] = month_effects;
    j["phi"] = phi;
    j["sigma"] = sigma;
    j["trend_coding"] = itsa::to_string(trend_coding);
    ordered_json steps = ordered_json::array();
    for (const auto& s : schedule_steps)
        steps.push_back({{"month", s.month.to_string()}, {"cumulative", s.cumulative}});
    j["schedule"] = {{"total_units", schedule_total}, {"steps", steps}};
    j["seed"] = seed;
    j["round_counts"] = round_counts;
    return j.dump(2) + "\n";
}

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw InputError(std::string("scenario: invalid JSON: ") + e.what());
    }
    require_keys(j, {"name", "mode", "window", "beta", "month_effects", "phi", "sigma",
                     "trend_coding", "schedule", "seed", "round_counts"},
                 "scenario");

    ScenarioSpec s;
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "single")
        s.mode = itsa::Mode::single;
    else if (mode == "controlled")
        s.mode = itsa::Mode::controlled;
    else
        throw InputError("scenario: unknown mode '" + mode + "'");

    const auto& w = j.at("window");
    require_keys(w, {"start", "end", "intervention_month"}, "scenario.window");
    s.window = StudyWindow(CalendarMonth::parse(w.at("start").get<std::string>()),
                           CalendarMonth::parse(w.at("end").get<std::string>()),
                           w.at("intervention_month").get<int>());

    s.beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("month_effects")) {
        const auto me = j["month_effects"].get<std::vector<double>>();
        if (me.size() != 11)
            throw InputError("scenario: month_effects must list 11 values (M1..M11)");
        std::copy(me.begin(), me.end(), s.month_effects.begin());
    }
    if (j.contains("phi")) s.phi = j["phi"].get<std::vector<double>>();
    s.sigma = j.at("sigma").get<double>();
    if (j.contains("trend_coding"))
        s.trend_coding = itsa::trend_coding_from_string(j["trend_coding"].get<std::string>());

    const auto& sched = j.at("schedule");
    require_keys(sched, {"total_units", "steps"}, "scenario.schedule");
    s.schedule_total = sched.at("total_units").get<double>();
    for (const auto& step : sched.at("steps")) {
        require_keys(step, {"month", "cumulative"}, "scenario.schedule.steps");
        s.schedule_steps.push_back(
            {CalendarMonth::parse(step.at("month").get<std::string>()),
             step.at("cumulative").get<double>()});
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("round_counts")) s.round_counts = j["round_counts"].get<bool>();
    s.validate();
    return s;
}

ScenarioSpec ScenarioSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

namespace {

// AR(p) error series of length n with 10*p burn-in steps.
std::vector<double> ar_errors(const std::vector<double>& phi, double sigma, int n,
                              NormalRng& rng) {
    const auto p = static_cast<int>(phi.size());
    const int burn = 10 * p;
    std::vector<double> e(static_cast<std::size_t>(burn + n), 0.0);
    for (int t = 0; t < burn + n; ++t) {
        double value = sigma * rng.next();
        for (int j = 1; j <= p; ++j)
            if (t - j >= 0)
                value += phi[static_cast<std::size_t>(j - 1)] *
                         e[static_cast<std::size_t>(t - j)];
        e[static_cast<std::size_t>(t)] = value;
    }
    return {e.begin() + burn, e.end()};
}

}  // namespace

Generated generate(const ScenarioSpec& spec) {
    spec.validate();
    const int n = spec.window.total_months();

    Generated g;
    g.vars = itsa::make_variables(spec.window, spec.schedule(), spec.trend_coding);

    NormalRng rng(spec.seed);
    auto seasonal = [&spec](int month_of_year) {
        return month_of_year <= 11 ? spec.month_effects[static_cast<std::size_t>(
                                         month_of_year - 1)]
                                   : 0.0;
    };
    auto finish = [&spec](double v) {
        return spec.round_counts ? std::max(0.0, std::round(v)) : v;
    };

    if (spec.mode == itsa::Mode::single) {
        const auto e = ar_errors(spec.phi, spec.sigma, n, rng);
        g.treated.resize(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            const auto i = static_cast<std::size_t>(t);
            const double mean = spec.beta[0] + spec.beta[1] * g.vars.time[i] +
                                spec.beta[2] * g.vars.level[i] +
                                spec.beta[3] * g.vars.trend[i] +
                                seasonal(g.vars.month_of_index[i]);
            g.treated[i] = finish(mean + e[i]);
        }
    } else {
        // Control innovations are drawn first, then treated, so both
        // streams are reproducible from the single seed.
        const auto ec = ar_errors(spec.phi, spec.sigma, n, rng);
        const auto et = ar_errors(spec.phi, spec.sigma, n, rng);
        g.control.resize(static_cast<std::size_t>(n));
        g.treated.resize(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            const auto i = static_cast<std::size_t>(t);
            const double shared = spec.beta[0] + spec.beta[1] * g.vars.time[i] +
                                  spec.beta[2] * g.vars.level[i] +
                                  spec.beta[3] * g.vars.trend[i] +
                                  seasonal(g.vars.month_of_index[i]);
            const double treated_part = spec.beta[4] + spec.beta[5] * g.vars.time[i] +
                                        spec.beta[6] * g.vars.level[i] +
                                        spec.beta[7] * g.vars.trend[i];
            g.control[i] = finish(shared + ec[i]);
            g.treated[i] = finish(shared + treated_part + et[i]);
        }
    }
    return g;
}

const ParamRecovery& RecoveryStudy::param(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return p;
    throw Error("recovery study has no parameter '" + name + "'");
}

std::string RecoveryStudy::to_csv() const {
    csv::Writer w({"parameter", "truth", "mean_estimate", "bias", "rmse", "ci_coverage"});
    for (const auto& p : params)
        w.row({p.name, csv::Writer::format(p.truth), csv::Writer::format(p.mean_estimate),
               csv::Writer::format(p.bias), csv::Writer::format(p.rmse),
               csv::Writer::format(p.ci_coverage)});
    w.row({"replications", std::to_string(replications), "", "", "", ""});
    w.row({"failures", std::to_string(failures), "", "", "", ""});
    if (has_delta) {
        w.row({"overall_delta_mean", csv::Writer::format(delta_mean), "", "", "", ""});
        w.row({"overall_delta_se", csv::Writer::format(delta_se), "", "", "", ""});
    }
    return w.text();
}

RecoveryStudy recovery_study(const ScenarioSpec& spec, int replications) {
    if (replications < 1)
        throw InputError("recovery_study: need at least one replication");
    spec.validate();

    const bool seasonal =
        std::any_of(spec.month_effects.begin(), spec.month_effects.end(),
                    [](double a) { return a != 0.0; });
    const auto p = static_cast<int>(spec.phi.size());

    // Truth per design column, in design order.
    std::vector<std::pair<std::string, double>> truth;
    if (spec.mode == itsa::Mode::single)
        truth = {{"(Intercept)", spec.beta[0]},
                 {"time", spec.beta[1]},
                 {"level", spec.beta[2]},
                 {"trend", spec.beta[3]}};
    else
        truth = {{"(Intercept)", spec.beta[0]}, {"time", spec.beta[1]},
                 {"tsp", spec.beta[4]},         {"tsp_time", spec.beta[5]},
                 {"level", spec.beta[2]},       {"trend", spec.beta[3]},
                 {"tsp_level", spec.beta[6]},   {"tsp_trend", spec.beta[7]}};
    if (seasonal)
        for (int m = 1; m <= 11; ++m)
            truth.emplace_back("M" + std::to_string(m),
                               spec.month_effects[static_cast<std::size_t>(m - 1)]);

    struct Accum {
        double sum = 0.0;
        double sum_sq_err = 0.0;
        int covered = 0;
    };
    std::vector<Accum> acc(truth.size());
    std::vector<double> deltas;
    int failures = 0;
    int successes = 0;

    const auto eval_years = post_intervention_years(spec.window);

    for (int r = 0; r < replications; ++r) {
        ScenarioSpec rep = spec;
        rep.seed = spec.seed + static_cast<std::uint64_t>(r);
        try {
            const Generated g = generate(rep);
            itsa::SegmentedDesign design =
                spec.mode == itsa::Mode::single
                    ? itsa::build_single_design(g.treated, g.vars)
                    : itsa::build_controlled_design(g.treated, g.control, g.vars);
            if (!seasonal)
                design.design =
                    design.design.without_columns(itsa::month_dummy_names(design));
            const auto fit = regress::fit_ar(design.design, design.y, p);
            const auto table = fit.coefficient_table();

            for (std::size_t i = 0; i < truth.size(); ++i) {
                const auto& row = *std::find_if(
                    table.begin(), table.end(),
                    [&](const regress::CoefficientReport& c) {
                        return c.name == truth[i].first;
                    });
                acc[i].sum += row.estimate;
                const double err = row.estimate - truth[i].second;
                acc[i].sum_sq_err += err * err;
                if (row.ci_low <= truth[i].second && truth[i].second <= row.ci_high)
                    ++acc[i].covered;
            }

            if (spec.mode == itsa::Mode::controlled && !eval_years.empty()) {
                itsa::ItsaModelSpec ms;
                ms.design = design;
                ms.ar_order = p;
                ms.fit = fit;
                const auto pair = effects::predict_counterfactual(ms);
                const auto et = effects::evaluate_effects(pair, spec.window, eval_years);
                deltas.push_back(et.overall_delta);
            }
            ++successes;
        } catch (const FitError&) {
            ++failures;
        }
    }

    RecoveryStudy study;
    study.replications = replications;
    study.failures = failures;
    if (successes > 0) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            ParamRecovery pr;
            pr.name = truth[i].first;
            pr.truth = truth[i].second;
            pr.mean_estimate = acc[i].sum / successes;
            pr.bias = pr.mean_estimate - pr.truth;
            pr.rmse = std::sqrt(acc[i].sum_sq_err / successes);
            pr.ci_coverage = static_cast<double>(acc[i].covered) / successes;
            study.params.push_back(pr);
        }
    }
    if (!deltas.empty()) {
        study.has_delta = true;
        double mean = 0.0;
        for (double d : deltas) mean += d;
        mean /= static_cast<double>(deltas.size());
        study.delta_mean = mean;
        double ss = 0.0;
        for (double d : deltas) ss += (d - mean) * (d - mean);
        if (deltas.size() > 1)
            study.delta_se = std::sqrt(ss / (static_cast<double>(deltas.size()) - 1.0)) /
                             std::sqrt(static_cast<double>(deltas.size()));
    }
    return study;
}

}  // namespace itseval::simgen
