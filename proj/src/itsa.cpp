#include "itseval/itsa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "itseval/diagnostics.hpp"
#include "itseval/error.hpp"

namespace itseval::itsa {

namespace {

constexpr int kDummyCount = 11;  // January..November; December is the reference

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::single ? "single" : "controlled"; }

const char* to_string(TrendCoding c) {
    return c == TrendCoding::since_intervention ? "since_intervention" : "literal";
}

TrendCoding trend_coding_from_string(const std::string& s) {
    if (s == "since_intervention") return TrendCoding::since_intervention;
    if (s == "literal") return TrendCoding::literal;
    throw InputError("unknown trend_coding '" + s + "'");
}

InterventionSchedule::InterventionSchedule(std::vector<Step> steps, double total_units)
    : steps_(std::move(steps)), total_(total_units) {
    if (!(total_ > 0.0))
        throw InputError("intervention schedule: total units must be positive");
    std::sort(steps_.begin(), steps_.end(),
              [](const Step& a, const Step& b) { return a.month < b.month; });
    double prev = 0.0;
    for (const auto& s : steps_) {
        if (s.cumulative < prev)
            throw InputError("intervention schedule: cumulative count decreases at " +
                             s.month.to_string());
        prev = s.cumulative;
    }
}

InterventionSchedule InterventionSchedule::read_csv(const csv::Table& t) {
    std::vector<Step> steps;
    double total = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        Step s;
        s.month = CalendarMonth::parse(t.cell(r, "month"));
        s.cumulative = t.number(r, "cumulative_activated");
        const double row_total = t.number(r, "total_units");
        if (r == 0)
            total = row_total;
        else if (row_total != total)
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) +
                             ": total_units differs between rows");
        steps.push_back(s);
    }
    if (steps.empty())
        throw InputError(t.origin() + ": schedule file has no rows");
    return InterventionSchedule(std::move(steps), total);
}

double InterventionSchedule::cumulative_at(CalendarMonth m) const {
    double value = 0.0;
    for (const auto& s : steps_) {
        if (s.month > m) break;
        value = s.cumulative;
    }
    return value;
}

std::vector<double> build_level(const InterventionSchedule& schedule,
                                const StudyWindow& window) {
    const int n = window.total_months();
    std::vector<double> level(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) {
        const double frac = schedule.cumulative_at(window.month_at(t)) / schedule.total_units();
        level[static_cast<std::size_t>(t)] = std::clamp(frac, 0.0, 1.0);
    }
    return level;
}

std::vector<double> build_trend(const std::vector<double>& level, int intervention_month,
                                TrendCoding coding) {
    std::vector<double> trend(level.size(), 0.0);
    for (std::size_t i = 0; i < level.size(); ++i) {
        const int t = static_cast<int>(i) + 1;  // 1-based study month
        if (t < intervention_month) continue;
        if (coding == TrendCoding::since_intervention)
            trend[i] = level[i] * static_cast<double>(t - intervention_month + 1);
        else
            trend[i] = level[i] * static_cast<double>(t);
    }
    return trend;
}

ItsaVariables make_variables(const StudyWindow& window, const InterventionSchedule& schedule,
                             TrendCoding coding) {
    const int n = window.total_months();
    ItsaVariables v;
    v.time.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) v.time[static_cast<std::size_t>(t)] = t + 1;
    v.level = build_level(schedule, window);
    v.trend = build_trend(v.level, window.intervention_month(), coding);
    v.month_of_index.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        v.month_of_index[static_cast<std::size_t>(t)] = window.month_of_year_at(t);
    return v;
}

SegmentedDesign build_single_design(const std::vector<double>& rates,
                                    const ItsaVariables& vars) {
    const std::size_t n = rates.size();
    if (n != vars.time.size() || n != vars.level.size() || n != vars.trend.size() ||
        n != vars.month_of_index.size())
        throw InputError("build_single_design: series lengths do not match");

    SegmentedDesign d;
    d.mode = Mode::single;
    d.n_months = static_cast<int>(n);
    d.design.names = {"(Intercept)", "time", "level", "trend"};
    for (int m = 1; m <= kDummyCount; ++m) d.design.names.push_back("M" + std::to_string(m));
    d.design.X.setZero(static_cast<Eigen::Index>(n), 4 + kDummyCount);
    d.y.resize(static_cast<Eigen::Index>(n));
    d.month_of_row = vars.month_of_index;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        d.design.X(r, 0) = 1.0;
        d.design.X(r, 1) = vars.time[i];
        d.design.X(r, 2) = vars.level[i];
        d.design.X(r, 3) = vars.trend[i];
        const int m = vars.month_of_index[i];
        if (m >= 1 && m <= kDummyCount) d.design.X(r, 3 + m) = 1.0;
        d.y(r) = rates[i];
    }
    return d;
}

SegmentedDesign build_controlled_design(const std::vector<double>& rates_treated,
                                        const std::vector<double>& rates_control,
                                        const ItsaVariables& vars) {
    const std::size_t n = vars.time.size();
    if (rates_treated.size() != n || rates_control.size() != n)
        throw InputError("build_controlled_design: group series lengths do not match "
                         "the window");

    SegmentedDesign d;
    d.mode = Mode::controlled;
    d.n_months = static_cast<int>(n);
    d.design.names = {"(Intercept)", "time",  "tsp",       "tsp_time",
                      "level",       "trend", "tsp_level", "tsp_trend"};
    for (int m = 1; m <= kDummyCount; ++m) d.design.names.push_back("M" + std::to_string(m));
    const auto rows = static_cast<Eigen::Index>(2 * n);
    d.design.X.setZero(rows, 8 + kDummyCount);
    d.y.resize(rows);
    d.month_of_row.resize(2 * n);

    for (std::size_t g = 0; g < 2; ++g) {       // 0: treated rows, 1: control rows
        const double tsp = g == 0 ? 1.0 : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(g * n + i);
            d.design.X(r, 0) = 1.0;
            d.design.X(r, 1) = vars.time[i];
            d.design.X(r, 2) = tsp;
            d.design.X(r, 3) = tsp * vars.time[i];
            d.design.X(r, 4) = vars.level[i];
            d.design.X(r, 5) = vars.trend[i];
            d.design.X(r, 6) = tsp * vars.level[i];
            d.design.X(r, 7) = tsp * vars.trend[i];
            const int m = vars.month_of_index[i];
            if (m >= 1 && m <= kDummyCount) d.design.X(r, 7 + m) = 1.0;
            d.y(r) = g == 0 ? rates_treated[i] : rates_control[i];
            d.month_of_row[g * n + i] = m;
        }
    }
    return d;
}

std::vector<std::string> month_dummy_names(const SegmentedDesign& design) {
    std::vector<std::string> out;
    for (const auto& name : design.design.names)
        if (name.size() >= 2 && name[0] == 'M' &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            out.push_back(name);
    return out;
}

ItsaModelSpec prune_seasonality(const SegmentedDesign& design, const Eigen::VectorXd& y,
                                int p, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InputError("prune_seasonality: alpha must lie in (0,1]");

    ItsaModelSpec spec;
    spec.design = design;
    spec.ar_order = p;

    while (true) {
        spec.fit = regress::fit_ar(spec.design.design, y, p);
        const auto table = spec.fit.coefficient_table();
        const auto dummies = month_dummy_names(spec.design);

        std::string worst;
        double worst_p = alpha;
        for (const auto& row : table) {
            if (std::find(dummies.begin(), dummies.end(), row.name) == dummies.end())
                continue;
            if (row.p_value > worst_p) {
                worst_p = row.p_value;
                worst = row.name;
            }
        }
        if (worst.empty()) break;
        spec.trail.push_back("drop " + worst + " (p=" + fmt(worst_p) + " > alpha=" +
                             fmt(alpha) + ")");
        spec.design.design = spec.design.design.without_columns({worst});
    }

    spec.retained_dummies = month_dummy_names(spec.design);
    std::string kept = "retained dummies:";
    if (spec.retained_dummies.empty()) kept += " none";
    for (const auto& d : spec.retained_dummies) kept += " " + d;
    spec.trail.push_back(kept);
    return spec;
}

ArOrderSelection select_ar_order(const SegmentedDesign& design, const Eigen::VectorXd& y,
                                 int p_max, double dw_low, double dw_high) {
    if (p_max < 0) throw InputError("select_ar_order: p_max must be non-negative");

    ArOrderSelection sel;
    int p = 0;
    while (true) {
        const regress::ArFitResult fit = regress::fit_ar(design.design, y, p);
        const auto& w = fit.residuals_whitened;
        std::vector<double> res(w.data(), w.data() + w.size());
        const double dw = diagnostics::durbin_watson(res);
        const int max_lag = std::min<int>(p_max, static_cast<int>(res.size()) - 1);
        const auto pv = diagnostics::pacf(res, max_lag);
        const double band = 2.0 / std::sqrt(static_cast<double>(res.size()));

        std::vector<int> offending;
        for (int lag = 1; lag <= max_lag; ++lag)
            if (std::fabs(pv[static_cast<std::size_t>(lag - 1)]) > band)
                offending.push_back(lag);

        std::string entry = "p=" + std::to_string(p) + " dw=" + fmt(dw) + " band=" +
                            fmt(band) + " pacf_out:";
        if (offending.empty()) entry += " none";
        for (int lag : offending)
            entry += " " + std::to_string(lag) + "(" +
                     fmt(pv[static_cast<std::size_t>(lag - 1)]) + ")";
        sel.trail.push_back(entry);

        const bool dw_ok = dw >= dw_low && dw <= dw_high;
        const bool adjacent_out =
            p + 1 <= max_lag && std::fabs(pv[static_cast<std::size_t>(p)]) > band;
        // Two consecutive elevated values right after the current order
        // read as structure on a plot even when neither alone crosses the
        // band; isolated deeper crossings are expected noise.
        bool paired_out = false;
        if (!adjacent_out && p + 2 <= max_lag &&
            std::fabs(pv[static_cast<std::size_t>(p)]) > 0.65 * band &&
            std::fabs(pv[static_cast<std::size_t>(p + 1)]) > 0.65 * band) {
            paired_out = true;
            sel.trail.push_back("consecutive pacf elevation at lags " +
                                std::to_string(p + 1) + "," + std::to_string(p + 2));
        }

        if (dw_ok && !adjacent_out && !paired_out) {
            sel.p = p;
            sel.passed = true;
            sel.trail.push_back("accept p=" + std::to_string(p));
            break;
        }

        int target = p + 1;
        if (!adjacent_out && !paired_out) {
            // Durbin-Watson alone triggered; jump to the smallest spiking
            // lag beyond the current order when there is one.
            for (int lag : offending)
                if (lag > p) {
                    target = lag;
                    break;
                }
        }
        if (target > p_max ||
            design.design.rows() <= design.design.cols() + target) {
            sel.p = p;
            sel.passed = false;
            sel.trail.push_back("stop at p=" + std::to_string(p) +
                                " (search exhausted at p_max=" + std::to_string(p_max) +
                                ")");
            break;
        }
        sel.trail.push_back("raise p to " + std::to_string(target));
        p = target;
    }

    if (sel.p >= 1) {
        const auto below = regress::fit_ar(design.design, y, sel.p - 1);
        const auto at = regress::fit_ar(design.design, y, sel.p);
        const auto lr = regress::anova_compare(below, at);
        sel.trail.push_back("anova p=" + std::to_string(sel.p - 1) + " vs p=" +
                            std::to_string(sel.p) + ": lr=" + fmt(lr.statistic) +
                            " dof=" + std::to_string(lr.dof) + " pval=" +
                            fmt(lr.p_value));
    }
    return sel;
}

}  // namespace itseval::itsa
