#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "itseval/error.hpp"
#include "itseval/psm.hpp"
#include "oracles.hpp"

using namespace itseval;

namespace {

using Scores = std::vector<std::pair<std::string, double>>;

// Exhaustive reference matcher: sort every candidate per treated entity.
psm::MatchResult brute_force(const Scores& treated, const Scores& control, int k) {
    psm::MatchResult out;
    for (const auto& [tid, ts] : treated) {
        std::vector<psm::Match> all;
        for (const auto& [cid, cs] : control) all.push_back({cid, std::fabs(ts - cs)});
        std::stable_sort(all.begin(), all.end(),
                         [](const psm::Match& a, const psm::Match& b) {
                             if (a.distance != b.distance) return a.distance < b.distance;
                             return a.control_id < b.control_id;
                         });
        all.resize(static_cast<std::size_t>(k));
        for (const auto& m : all) ++out.times_matched[m.control_id];
        out.matches.emplace_back(tid, all);
    }
    return out;
}

bool same_result(const psm::MatchResult& a, const psm::MatchResult& b) {
    if (a.times_matched != b.times_matched) return false;
    if (a.matches.size() != b.matches.size()) return false;
    for (std::size_t i = 0; i < a.matches.size(); ++i) {
        if (a.matches[i].first != b.matches[i].first) return false;
        const auto& ma = a.matches[i].second;
        const auto& mb = b.matches[i].second;
        if (ma.size() != mb.size()) return false;
        for (std::size_t j = 0; j < ma.size(); ++j)
            if (ma[j].control_id != mb[j].control_id) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("score arithmetic on a stated coefficient vector") {
    psm::PropensityModel m;
    m.intercept = -0.5;
    m.coefficients = {{"median_ratio", 1.0}, {"bus_routes", 2.0}};
    psm::SectionProfile p;
    p.section_id = "S";
    p.aadt = 1000.0;
    p.lanes = 2;
    p.median_ratio = 0.3;
    p.bus_routes = -0.1;
    p.length = 1.0;
    // eta = -0.5 + 1*0.3 + 2*(-0.1) + ln(1) = -0.4
    CHECK(m.linear_predictor(p) == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(m.score(p) == doctest::Approx(1.0 / (1.0 + std::exp(0.4))).epsilon(1e-12));
    CHECK(m.score(p) == doctest::Approx(0.4013).epsilon(1e-4));
}

TEST_CASE("eta of zero scores one half") {
    psm::PropensityModel m;  // no coefficients, zero intercept
    psm::SectionProfile p;
    p.section_id = "S";
    p.aadt = 500.0;
    p.length = 1.0;
    CHECK(m.score(p) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("doubling the length doubles the odds through the offset") {
    psm::PropensityModel m;
    m.intercept = -1.3;
    psm::SectionProfile p;
    p.section_id = "S";
    p.aadt = 500.0;
    p.length = 0.7;
    const double s1 = m.score(p);
    p.length = 1.4;
    const double s2 = m.score(p);
    const double odds1 = s1 / (1.0 - s1);
    const double odds2 = s2 / (1.0 - s2);
    CHECK(odds2 / odds1 == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("scores stay strictly inside the unit interval") {
    psm::PropensityModel m;
    psm::SectionProfile p;
    p.section_id = "S";
    p.aadt = 100.0;
    p.length = 1.0;
    for (double eta : {-700.0, -40.0, -1.0, 0.0, 1.0, 40.0, 700.0}) {
        m.intercept = eta;
        const double s = m.score(p);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK(psm::positivity_violated(1e-8));
    CHECK(psm::positivity_violated(1.0 - 1e-8));
    CHECK_FALSE(psm::positivity_violated(0.3));
}

TEST_CASE("identical covariates collapse to an intercept-only model") {
    std::vector<psm::SectionProfile> profiles;
    std::vector<bool> treated;
    for (int i = 0; i < 12; ++i) {
        psm::SectionProfile p;
        p.section_id = "S" + std::to_string(i);
        p.aadt = 15000.0;
        p.lanes = 3;
        p.median_ratio = 0.2;
        p.bus_routes = 2;
        p.major_freq = 6;
        p.secondary_freq = 1;
        p.signal_density = 4.0;
        p.length = 1.1;
        profiles.push_back(p);
        treated.push_back(i < 5);
    }
    const auto model = psm::fit_propensity(profiles, treated);
    CHECK(model.coefficients.empty());
    const double s0 = model.score(profiles[0]);
    for (const auto& p : profiles)
        CHECK(model.score(p) == doctest::Approx(s0).epsilon(1e-12));
}

TEST_CASE("fit_propensity matches the Newton oracle on a 40-section sample") {
    std::mt19937 rng(321);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<psm::SectionProfile> profiles;
    std::vector<bool> treated;
    oracle::Matrix x;
    std::vector<double> y, off;
    for (int i = 0; i < 40; ++i) {
        psm::SectionProfile p;
        p.section_id = "S" + std::to_string(100 + i);
        p.aadt = 8000.0 + 22000.0 * u(rng);
        p.oneway = u(rng) < 0.25 ? 1 : 0;
        p.lanes = 2 + (i % 3);
        p.median_ratio = 0.5 * u(rng);
        p.bus_routes = 1 + (i % 4);
        p.major_freq = 4.0 + 6.0 * u(rng);
        p.secondary_freq = 2.0 * u(rng);
        p.signal_density = 2.0 + 5.0 * u(rng);
        p.length = 0.3 + 2.0 * u(rng);

        const double eta = -1.0 + 0.8 * (std::log(p.aadt) - std::log(18000.0)) +
                           0.3 * p.median_ratio + std::log(p.length);
        const bool t = u(rng) < 1.0 / (1.0 + std::exp(-eta));
        profiles.push_back(p);
        treated.push_back(t);

        x.push_back({1.0, std::log(p.aadt), static_cast<double>(p.oneway),
                     static_cast<double>(p.lanes), p.median_ratio, p.bus_routes,
                     p.major_freq, p.secondary_freq, p.signal_density});
        y.push_back(t ? 1.0 : 0.0);
        off.push_back(std::log(p.length));
    }

    const auto model = psm::fit_propensity(profiles, treated);
    const auto expect = oracle::newton_logit(x, y, off);
    REQUIRE(model.coefficients.size() == 8);
    CHECK(model.intercept == doctest::Approx(expect[0]).epsilon(1e-8));
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(model.coefficients[j].first == psm::covariate_names()[j]);
        CHECK(model.coefficients[j].second ==
              doctest::Approx(expect[j + 1]).epsilon(1e-8));
    }
}

TEST_CASE("literal link: equal lengths reduce to a reparametrization") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<psm::SectionProfile> profiles;
    std::vector<bool> treated;
    for (int i = 0; i < 30; ++i) {
        psm::SectionProfile p;
        p.section_id = "S" + std::to_string(i);
        p.aadt = 9000.0 + 20000.0 * u(rng);
        p.lanes = 2 + (i % 3);
        p.median_ratio = u(rng) * 0.4;
        p.length = 0.8;  // constant offset: the link flip is pure reparametrization
        profiles.push_back(p);
        treated.push_back(u(rng) < 0.5);
    }
    const auto std_model = psm::fit_propensity(profiles, treated, psm::LinkSign::standard);
    const auto lit_model = psm::fit_propensity(profiles, treated, psm::LinkSign::literal);
    for (const auto& p : profiles)
        CHECK(std_model.score(p) == doctest::Approx(lit_model.score(p)).epsilon(1e-6));
    CHECK(std_model.coefficients[0].second ==
          doctest::Approx(-lit_model.coefficients[0].second).epsilon(1e-6));
}

TEST_CASE("literal link satisfies its own score equations with an offset") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<psm::SectionProfile> profiles;
    std::vector<bool> treated;
    for (int i = 0; i < 36; ++i) {
        psm::SectionProfile p;
        p.section_id = "S" + std::to_string(i);
        p.aadt = 9000.0 + 20000.0 * u(rng);
        p.lanes = 2 + (i % 3);
        p.median_ratio = u(rng) * 0.4;
        p.length = 0.4 + u(rng);
        profiles.push_back(p);
        treated.push_back(u(rng) < 0.5);
    }
    const auto model = psm::fit_propensity(profiles, treated, psm::LinkSign::literal);
    // At the optimum the residuals y - p are orthogonal to every retained
    // covariate and to the intercept.
    double s0 = 0.0;
    std::vector<double> s(model.coefficients.size(), 0.0);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const double resid = (treated[i] ? 1.0 : 0.0) - model.score(profiles[i]);
        s0 += resid;
        for (std::size_t j = 0; j < model.coefficients.size(); ++j)
            s[j] += resid * psm::covariate_value(profiles[i], model.coefficients[j].first);
    }
    // The literal link reverses the gradient sign; magnitude is what matters.
    CHECK(std::fabs(s0) < 1e-6);
    for (double v : s) CHECK(std::fabs(v) < 1e-4);
}

TEST_CASE("thirteen treated with five neighbors yields multiplicity 65") {
    Scores treated, control;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int i = 0; i < 13; ++i)
        treated.emplace_back("T" + std::to_string(10 + i), u(rng));
    for (int i = 0; i < 10; ++i)
        control.emplace_back("C" + std::to_string(10 + i), u(rng));
    const auto res = psm::knn_match(treated, control, 5);
    CHECK(res.total_multiplicity() == 65);
    CHECK(res.times_matched.size() <= 10);
    for (const auto& [tid, ms] : res.matches) CHECK(ms.size() == 5);
}

TEST_CASE("nearest single neighbor") {
    const Scores treated = {{"T", 0.52}};
    const Scores control = {{"A", 0.3}, {"B", 0.5}};
    const auto res = psm::knn_match(treated, control, 1);
    CHECK(res.matches[0].second[0].control_id == "B");
    CHECK(res.matches[0].second[0].distance == doctest::Approx(0.02));
}

TEST_CASE("ties break toward the smaller control id") {
    const Scores treated = {{"T", 0.5}};
    const Scores control = {{"B", 0.6}, {"A", 0.4}};
    const auto res = psm::knn_match(treated, control, 1);
    CHECK(res.matches[0].second[0].control_id == "A");
}

TEST_CASE("matching equals brute force on random instances") {
    std::mt19937 rng(2718);
    std::uniform_int_distribution<int> nt(1, 15);
    std::uniform_int_distribution<int> nc(1, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int t_count = nt(rng);
        const int c_count = nc(rng);
        Scores treated, control;
        for (int i = 0; i < t_count; ++i)
            treated.emplace_back("T" + std::to_string(i), u(rng));
        for (int i = 0; i < c_count; ++i)
            control.emplace_back("C" + std::to_string(i), u(rng));
        std::uniform_int_distribution<int> kk(1, c_count);
        const int k = kk(rng);
        const auto fast = psm::knn_match(treated, control, k);
        const auto slow = brute_force(treated, control, k);
        CHECK(same_result(fast, slow));
        CHECK(fast.total_multiplicity() == k * t_count);
    }
}

TEST_CASE("affine transform of all scores preserves the matching") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scores treated, control;
    for (int i = 0; i < 8; ++i) treated.emplace_back("T" + std::to_string(i), u(rng));
    for (int i = 0; i < 9; ++i) control.emplace_back("C" + std::to_string(i), u(rng));
    const auto base = psm::knn_match(treated, control, 3);

    Scores t2 = treated, c2 = control;
    for (auto& [id, s] : t2) s = 0.4 * s + 0.2;
    for (auto& [id, s] : c2) s = 0.4 * s + 0.2;
    const auto mapped = psm::knn_match(t2, c2, 3);
    CHECK(base.times_matched == mapped.times_matched);
    for (std::size_t i = 0; i < base.matches.size(); ++i)
        for (std::size_t j = 0; j < base.matches[i].second.size(); ++j)
            CHECK(base.matches[i].second[j].control_id ==
                  mapped.matches[i].second[j].control_id);
}

TEST_CASE("removing a non-matched candidate changes nothing") {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scores treated, control;
    for (int i = 0; i < 6; ++i) treated.emplace_back("T" + std::to_string(i), u(rng));
    for (int i = 0; i < 10; ++i) control.emplace_back("C" + std::to_string(i), u(rng));
    const auto base = psm::knn_match(treated, control, 2);

    Scores pruned;
    for (const auto& [id, s] : control)
        if (base.times_matched.find(id) != base.times_matched.end())
            pruned.emplace_back(id, s);
    if (pruned.size() >= 2) {
        const auto again = psm::knn_match(treated, pruned, 2);
        CHECK(same_result(base, again));
    }
}

TEST_CASE("too few candidates is an error") {
    const Scores treated = {{"T", 0.5}};
    const Scores control = {{"A", 0.4}};
    CHECK_THROWS_AS(psm::knn_match(treated, control, 2), InputError);
}

namespace {

const StudyWindow kWindow{{1995, 1}, {2001, 12}, 84};

// One synthetic crash row covering every category cyclically, duplicated
// `factor` times into the control section so per-category proportionality
// is exact.
panel::MonthlyPanel proportional_panel(int factor) {
    std::ostringstream rows;
    int i = 0;
    for (int year = 1995; year <= 2001; ++year) {
        const int per_month = 5 + (year - 1995);
        for (int month = 1; month <= 12; ++month) {
            for (int k = 0; k < per_month; ++k, ++i) {
                const char* sev = i % 2 == 0 ? "PDO" : "FI";
                const int ped = i % 3 == 0 ? 1 : 0;
                const int bike = i % 5 == 0 ? 1 : 0;
                std::ostringstream line;
                line << year << "-" << (month < 10 ? "0" : "") << month << "-08,%s,"
                     << sev << "," << ped << "," << bike << "\n";
                std::string tmpl = line.str();
                rows << tmpl.replace(tmpl.find("%s"), 2, "T");
                for (int c = 0; c < factor; ++c) {
                    std::string again = line.str();
                    rows << again.replace(again.find("%s"), 2, "C");
                }
            }
        }
    }
    const std::vector<panel::SectionRecord> sections = {
        {"T", panel::Group::treated, 2, 1.0, 1},
        {"C", panel::Group::candidate_control, 2, 1.0, 1}};
    return panel::ingest_crashes(
        csv::Table::read_string("date,section_id,severity,pedestrian,bike\n" + rows.str()),
        sections, kWindow);
}

}  // namespace

TEST_CASE("proportional groups give unit odds ratios with zero spread") {
    const auto pnl = proportional_panel(2);
    const auto report = psm::odds_ratio_balance(pnl, 7);
    REQUIRE(report.size() == 5);
    for (const auto& row : report) {
        CHECK(row.n_pairs == 6);  // seven pre years -> six consecutive pairs
        CHECK(row.mean_or == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(row.se == doctest::Approx(0.0));
        CHECK(row.ci_low <= row.mean_or);
        CHECK(row.ci_high >= row.mean_or);
    }
}

TEST_CASE("zero-count categories abort the balance report") {
    // All-PDO data leaves the FI series empty, so no pair is usable there.
    std::ostringstream rows;
    for (int year = 1995; year <= 2001; ++year)
        for (int month = 1; month <= 12; ++month)
            rows << year << "-" << (month < 10 ? "0" : "") << month
                 << "-08,T,PDO,1,1\n"
                 << year << "-" << (month < 10 ? "0" : "") << month << "-09,C,PDO,1,1\n";
    const std::vector<panel::SectionRecord> sections = {
        {"T", panel::Group::treated, 2, 1.0, 1},
        {"C", panel::Group::candidate_control, 2, 1.0, 1}};
    const auto pnl = panel::ingest_crashes(
        csv::Table::read_string("date,section_id,severity,pedestrian,bike\n" + rows.str()),
        sections, kWindow);
    CHECK_THROWS_WITH_AS(psm::odds_ratio_balance(pnl, 7), doctest::Contains("fi"),
                         InputError);
}

TEST_CASE("balanced Poisson counts keep the mean odds ratio near one") {
    std::mt19937 rng(314);
    for (int rep = 0; rep < 10; ++rep) {
        std::ostringstream rows;
        int i = 0;
        for (int year = 1995; year <= 2001; ++year) {
            for (int month = 1; month <= 12; ++month) {
                const int t_count = oracle::poisson_draw(1000.0 / 12.0, rng);
                const int c_count = oracle::poisson_draw(800.0 / 12.0, rng);
                for (int k = 0; k < t_count; ++k, ++i)
                    rows << year << "-" << (month < 10 ? "0" : "") << month << "-08,T,"
                         << (i % 2 ? "PDO" : "FI") << "," << (i % 3 == 0) << ","
                         << (i % 5 == 0) << "\n";
                for (int k = 0; k < c_count; ++k, ++i)
                    rows << year << "-" << (month < 10 ? "0" : "") << month << "-09,C,"
                         << (i % 2 ? "PDO" : "FI") << "," << (i % 3 == 0) << ","
                         << (i % 5 == 0) << "\n";
            }
        }
        const std::vector<panel::SectionRecord> sections = {
            {"T", panel::Group::treated, 2, 1.0, 1},
            {"C", panel::Group::candidate_control, 2, 1.0, 1}};
        const auto pnl = panel::ingest_crashes(
            csv::Table::read_string("date,section_id,severity,pedestrian,bike\n" +
                                    rows.str()),
            sections, kWindow);
        const auto report = psm::odds_ratio_balance(pnl, 7);
        for (const auto& row : report) {
            if (row.category != panel::Category::all) continue;
            CHECK(row.mean_or >= 0.9);
            CHECK(row.mean_or <= 1.1);
        }
    }
}

TEST_CASE("match result export formats") {
    const Scores treated = {{"T1", 0.5}, {"T2", 0.6}};
    const Scores control = {{"C1", 0.55}, {"C2", 0.1}};
    const auto res = psm::knn_match(treated, control, 1);
    const std::string mcsv = psm::matches_csv(res);
    CHECK(mcsv.find("treated_id,rank,control_id,score_distance") == 0);
    CHECK(mcsv.find("T1,1,C1,") != std::string::npos);
    const std::string tcsv = psm::times_matched_csv(res);
    CHECK(tcsv.find("control_id,times_matched") == 0);
    CHECK(tcsv.find("C1,2") != std::string::npos);
}
