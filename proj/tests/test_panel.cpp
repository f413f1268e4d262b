#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "itseval/error.hpp"
#include "itseval/panel.hpp"

using namespace itseval;
using panel::Category;
using panel::Group;

namespace {

const StudyWindow kWindow{{1995, 1}, {2010, 12}, 90};

std::vector<panel::SectionRecord> fixture_sections() {
    return panel::read_sections(csv::Table::read_string(fixtures::sections_csv()));
}

csv::Table crash_table(const std::string& rows) {
    return csv::Table::read_string("date,section_id,severity,pedestrian,bike\n" + rows);
}

}  // namespace

TEST_CASE("study window spans 192 months with the intervention at month 90") {
    CHECK(kWindow.total_months() == 192);
    // June 2002 is the 90th month of the window (index 89).
    CHECK(kWindow.index_of({2002, 6}) == 89);
    CHECK(kWindow.month_at(89) == CalendarMonth{2002, 6});
    CHECK(kWindow.month_of_year_at(0) == 1);
    CHECK(kWindow.month_of_year_at(191) == 12);
    CHECK_THROWS_AS(StudyWindow({2010, 1}, {1995, 1}, 1), InputError);
    CHECK_THROWS_AS(StudyWindow({1995, 1}, {2010, 12}, 193), InputError);
    CHECK_THROWS_AS(StudyWindow({1995, 1}, {2010, 12}, 0), InputError);
}

TEST_CASE("lane miles over the corridor table") {
    const auto sections = fixture_sections();
    // Hand-computed weighted sums over the 13 treated and 10 control rows.
    CHECK(panel::lane_miles(sections, Group::treated) == doctest::Approx(81.13).epsilon(1e-9));
    CHECK(panel::lane_miles(sections, Group::candidate_control) ==
          doctest::Approx(103.78).epsilon(1e-9));

    const std::vector<panel::SectionRecord> single = {{"S", Group::treated, 1, 1.0, 1}};
    CHECK(panel::lane_miles(single, Group::treated) == doctest::Approx(1.0));
    CHECK_THROWS_AS(panel::lane_miles(single, Group::candidate_control), InputError);
}

TEST_CASE("a single crash lands in the 90th month") {
    const auto sections = fixture_sections();
    const auto panel = panel::ingest_crashes(
        crash_table("2002-06-15,T01,PDO,0,0\n"), sections, kWindow);
    const auto& all = panel.counts(Group::treated, Category::all);
    const auto& pdo = panel.counts(Group::treated, Category::pdo);
    REQUIRE(all.size() == 192);
    CHECK(all[89] == 1.0);
    CHECK(pdo[89] == 1.0);
    double total = 0.0;
    for (double v : all) total += v;
    CHECK(total == 1.0);
    CHECK(panel.counts(Group::treated, Category::fi)[89] == 0.0);
}

TEST_CASE("empty crash file gives all-zero series of full length") {
    const auto panel =
        panel::ingest_crashes(crash_table(""), fixture_sections(), kWindow);
    for (Group g : {Group::treated, Group::candidate_control})
        for (Category c : panel::kCategories) {
            const auto& s = panel.counts(g, c);
            REQUIRE(s.size() == 192);
            for (double v : s) CHECK(v == 0.0);
        }
}

TEST_CASE("control counts carry the match weight") {
    const auto sections = fixture_sections();  // C01 has weight 12
    const auto panel = panel::ingest_crashes(
        crash_table("1997-03-01,C01,FI,0,0\n"
                    "1997-03-02,C01,FI,0,0\n"
                    "1997-03-21,C01,FI,1,0\n"),
        sections, kWindow);
    const auto idx = static_cast<std::size_t>(kWindow.index_of({1997, 3}));
    CHECK(panel.counts(Group::candidate_control, Category::fi)[idx] == 36.0);
    CHECK(panel.counts(Group::candidate_control, Category::all)[idx] == 36.0);
    CHECK(panel.counts(Group::candidate_control, Category::pedestrian)[idx] == 12.0);

    // Weighted-sum oracle over the raw records.
    const double expected = 3 * 12.0;
    double got = 0.0;
    for (double v : panel.counts(Group::candidate_control, Category::fi)) got += v;
    CHECK(got == expected);
}

TEST_CASE("ingest errors carry the offending row") {
    const auto sections = fixture_sections();
    CHECK_THROWS_WITH_AS(
        panel::ingest_crashes(crash_table("2002-06-15,NOPE,PDO,0,0\n"), sections, kWindow),
        doctest::Contains("unknown section_id"), InputError);
    CHECK_THROWS_WITH_AS(
        panel::ingest_crashes(crash_table("2002-13-15,T01,PDO,0,0\n"), sections, kWindow),
        doctest::Contains(":2"), InputError);
    CHECK_THROWS_AS(
        panel::ingest_crashes(crash_table("2002-06-15,T01,BAD,0,0\n"), sections, kWindow),
        InputError);
    // Outside-window records are dropped and counted, not errors.
    const auto panel = panel::ingest_crashes(
        crash_table("1990-01-01,T01,PDO,0,0\n2002-06-15,T01,FI,0,0\n"), sections, kWindow);
    CHECK(panel.dropped_outside_window() == 1);
}

TEST_CASE("rates scale counts per 100 lane-miles") {
    const std::vector<panel::SectionRecord> one = {{"S", Group::treated, 1, 1.0, 1}};
    const auto panel = panel::ingest_crashes(
        csv::Table::read_string("date,section_id,severity,pedestrian,bike\n"
                                "1995-01-15,S,PDO,0,0\n"),
        one, kWindow);
    const auto rates = panel::to_rate_series(panel, Group::treated, Category::all);
    CHECK(rates[0] == doctest::Approx(100.0));  // 100 * 1 / 1.0 lane-miles
    for (std::size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] == 0.0);
}

TEST_CASE("rate of 128 crashes against the treated exposure") {
    const auto sections = fixture_sections();
    std::ostringstream rows;
    for (int i = 0; i < 128; ++i) rows << "2001-05-10,T04,PDO,0,0\n";
    const auto panel = panel::ingest_crashes(crash_table(rows.str()), sections, kWindow);
    const auto rates = panel::to_rate_series(panel, Group::treated, Category::all);
    const auto idx = static_cast<std::size_t>(kWindow.index_of({2001, 5}));
    CHECK(rates[idx] == doctest::Approx(157.77).epsilon(1e-4));
}

TEST_CASE("annual totals") {
    std::vector<double> ones(192, 1.0);
    const auto sums = panel::annual_totals(ones, kWindow);
    REQUIRE(sums.size() == 16);
    for (double s : sums) CHECK(s == 12.0);

    std::vector<double> spike(192, 0.0);
    spike[89] = 1.0;  // June 2002
    const auto sums2 = panel::annual_totals(spike, kWindow);
    for (std::size_t y = 0; y < sums2.size(); ++y)
        CHECK(sums2[y] == (y == 7 ? 1.0 : 0.0));

    CHECK_THROWS_AS(panel::annual_totals({}, kWindow), InputError);
    CHECK_THROWS_AS(panel::annual_totals(std::vector<double>(191, 0.0), kWindow),
                    InputError);
}

TEST_CASE("category additivity and zero fill on random data") {
    const auto sections = fixture_sections();
    std::mt19937 rng(7101);
    std::uniform_int_distribution<int> month(0, 191);
    std::uniform_int_distribution<int> sec(0, 22);
    std::uniform_int_distribution<int> coin(0, 1);
    std::ostringstream rows;
    for (int i = 0; i < 800; ++i) {
        const auto m = kWindow.month_at(month(rng));
        const auto& s = sections[static_cast<std::size_t>(sec(rng))];
        rows << m.to_string() << "-10," << s.section_id << ","
             << (coin(rng) ? "PDO" : "FI") << "," << coin(rng) << "," << coin(rng) << "\n";
    }
    const auto panel = panel::ingest_crashes(crash_table(rows.str()), sections, kWindow);
    for (Group g : {Group::treated, Group::candidate_control}) {
        const auto& all = panel.counts(g, Category::all);
        const auto& pdo = panel.counts(g, Category::pdo);
        const auto& fi = panel.counts(g, Category::fi);
        REQUIRE(all.size() == 192);
        for (std::size_t t = 0; t < all.size(); ++t)
            CHECK(all[t] == pdo[t] + fi[t]);
        // Round trip: annual totals recover the grand total.
        const auto sums = panel::annual_totals(all, kWindow);
        double annual = 0.0, grand = 0.0;
        for (double v : sums) annual += v;
        for (double v : all) grand += v;
        CHECK(annual == doctest::Approx(grand).epsilon(1e-12));
    }
}

TEST_CASE("doubling all match weights leaves rates unchanged") {
    auto sections = fixture_sections();
    std::ostringstream rows;
    rows << "1998-04-03,C02,PDO,0,0\n1998-04-04,C05,FI,0,1\n2004-09-09,C07,PDO,1,0\n";
    const auto base = panel::ingest_crashes(crash_table(rows.str()), sections, kWindow);

    auto doubled = sections;
    for (auto& s : doubled)
        if (s.group == Group::candidate_control) s.match_weight *= 2;
    const auto twice = panel::ingest_crashes(crash_table(rows.str()), doubled, kWindow);

    CHECK(twice.lane_miles(Group::candidate_control) ==
          doctest::Approx(2.0 * base.lane_miles(Group::candidate_control)));
    const auto& c1 = base.counts(Group::candidate_control, Category::all);
    const auto& c2 = twice.counts(Group::candidate_control, Category::all);
    for (std::size_t t = 0; t < c1.size(); ++t) CHECK(c2[t] == 2.0 * c1[t]);

    const auto r1 = panel::to_rate_series(base, Group::candidate_control, Category::all);
    const auto r2 = panel::to_rate_series(twice, Group::candidate_control, Category::all);
    for (std::size_t t = 0; t < r1.size(); ++t)
        CHECK(r2[t] == doctest::Approx(r1[t]).epsilon(1e-12));
}

TEST_CASE("sections file validation") {
    CHECK_THROWS_AS(panel::read_sections(csv::Table::read_string(
                        "section_id,group,lanes,length_mi,match_weight\nA,treated,0,1.0,1\n")),
                    InputError);
    CHECK_THROWS_AS(panel::read_sections(csv::Table::read_string(
                        "section_id,group,lanes,length_mi,match_weight\nA,treated,1,0,1\n")),
                    InputError);
    CHECK_THROWS_AS(panel::read_sections(csv::Table::read_string(
                        "section_id,group,lanes,length_mi,match_weight\nA,weird,1,1.0,1\n")),
                    InputError);
    // match_weight is optional and defaults to 1.
    const auto s = panel::read_sections(
        csv::Table::read_string("section_id,group,lanes,length_mi\nA,treated,2,1.5\n"));
    CHECK(s[0].match_weight == 1);
}
