#include "itseval/panel.hpp"

#include <algorithm>
#include <unordered_map>

#include "itseval/error.hpp"

namespace itseval::panel {

namespace {

std::size_t index_of_category(Category c) { return static_cast<std::size_t>(c); }

bool parse_flag(const csv::Table& t, std::size_t row, const std::string& col) {
    const std::string& s = t.cell(row, col);
    if (s == "0") return false;
    if (s == "1") return true;
    throw InputError(t.origin() + ":" + std::to_string(t.file_line(row)) + ": field '" +
                     col + "' must be 0 or 1, got '" + s + "'");
}

}  // namespace

const char* to_string(Group g) {
    return g == Group::treated ? "treated" : "control";
}

const char* to_string(Category c) {
    switch (c) {
        case Category::all: return "all";
        case Category::pdo: return "pdo";
        case Category::fi: return "fi";
        case Category::pedestrian: return "pedestrian";
        case Category::bike: return "bike";
    }
    return "?";
}

Category category_from_string(const std::string& s) {
    for (Category c : kCategories)
        if (s == to_string(c)) return c;
    throw InputError("unknown crash category '" + s + "'");
}

MonthlyPanel::MonthlyPanel(StudyWindow window, double scale)
    : window_(window), scale_(scale) {
    const auto n = static_cast<std::size_t>(window_.total_months());
    for (Group g : {Group::treated, Group::candidate_control}) {
        auto& arr = series_[g];
        for (auto& s : arr) s.assign(n, 0.0);
        lane_miles_[g] = 0.0;
    }
}

const std::vector<double>& MonthlyPanel::counts(Group g, Category c) const {
    return series_.at(g)[index_of_category(c)];
}

double MonthlyPanel::lane_miles(Group g) const { return lane_miles_.at(g); }

std::vector<double> MonthlyPanel::rates(Group g, Category c) const {
    return to_rate_series(*this, g, c);
}

std::vector<SectionRecord> read_sections(const csv::Table& t) {
    std::vector<SectionRecord> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        SectionRecord s;
        s.section_id = t.cell(r, "section_id");
        const std::string& g = t.cell(r, "group");
        if (g == "treated")
            s.group = Group::treated;
        else if (g == "control" || g == "candidate_control")
            s.group = Group::candidate_control;
        else
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) +
                             ": unknown group '" + g + "'");
        s.lanes = static_cast<int>(t.integer(r, "lanes"));
        s.length = t.number(r, "length_mi");
        s.match_weight = t.has_column("match_weight")
                             ? static_cast<int>(t.integer(r, "match_weight"))
                             : 1;
        if (s.lanes < 1)
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) +
                             ": lanes must be at least 1");
        if (!(s.length > 0.0))
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) +
                             ": length_mi must be positive");
        if (s.match_weight < 1)
            throw InputError(t.origin() + ":" + std::to_string(t.file_line(r)) +
                             ": match_weight must be at least 1");
        out.push_back(std::move(s));
    }
    return out;
}

CrashRecord parse_crash_row(const csv::Table& t, std::size_t row) {
    CrashRecord c;
    try {
        c.date = Date::parse(t.cell(row, "date"));
    } catch (const InputError& e) {
        throw InputError(t.origin() + ":" + std::to_string(t.file_line(row)) + ": " +
                         e.what());
    }
    c.section_id = t.cell(row, "section_id");
    const std::string& sev = t.cell(row, "severity");
    if (sev == "PDO")
        c.severity = Severity::pdo;
    else if (sev == "FI")
        c.severity = Severity::fi;
    else
        throw InputError(t.origin() + ":" + std::to_string(t.file_line(row)) +
                         ": severity must be PDO or FI, got '" + sev + "'");
    c.pedestrian_involved = parse_flag(t, row, "pedestrian");
    c.bike_involved = parse_flag(t, row, "bike");
    return c;
}

double lane_miles(const std::vector<SectionRecord>& sections, Group group) {
    double total = 0.0;
    bool any = false;
    for (const auto& s : sections) {
        if (s.group != group) continue;
        any = true;
        total += static_cast<double>(s.match_weight) * s.lanes * s.length;
    }
    if (!any)
        throw InputError(std::string("lane_miles: no sections in group '") +
                         to_string(group) + "'");
    return total;
}

MonthlyPanel ingest_crashes(const csv::Table& crashes,
                            const std::vector<SectionRecord>& sections,
                            const StudyWindow& window, double scale) {
    if (window.total_months() <= 0)
        throw InputError("ingest_crashes: empty study window");

    std::unordered_map<std::string, const SectionRecord*> by_id;
    for (const auto& s : sections) by_id[s.section_id] = &s;

    MonthlyPanel panel(window, scale);
    for (Group g : {Group::treated, Group::candidate_control}) {
        bool any = std::any_of(sections.begin(), sections.end(),
                               [g](const SectionRecord& s) { return s.group == g; });
        if (any) panel.lane_miles_[g] = lane_miles(sections, g);
    }

    for (std::size_t r = 0; r < crashes.rows(); ++r) {
        const CrashRecord rec = parse_crash_row(crashes, r);
        auto it = by_id.find(rec.section_id);
        if (it == by_id.end())
            throw InputError(crashes.origin() + ":" +
                             std::to_string(crashes.file_line(r)) +
                             ": unknown section_id '" + rec.section_id + "'");
        const SectionRecord& sec = *it->second;
        const CalendarMonth m = rec.date.calendar_month();
        if (!window.contains(m)) {
            ++panel.dropped_;
            continue;
        }
        const auto idx = static_cast<std::size_t>(window.index_of(m));
        const auto w = static_cast<double>(sec.match_weight);
        auto& arr = panel.series_[sec.group];
        arr[index_of_category(Category::all)][idx] += w;
        arr[index_of_category(rec.severity == Severity::pdo ? Category::pdo
                                                            : Category::fi)][idx] += w;
        if (rec.pedestrian_involved)
            arr[index_of_category(Category::pedestrian)][idx] += w;
        if (rec.bike_involved)
            arr[index_of_category(Category::bike)][idx] += w;
    }
    return panel;
}

std::vector<double> to_rate_series(const MonthlyPanel& panel, Group g, Category c) {
    const double lm = panel.lane_miles(g);
    if (!(lm > 0.0))
        throw InputError(std::string("to_rate_series: group '") + to_string(g) +
                         "' has zero lane-miles");
    const auto& counts = panel.counts(g, c);
    std::vector<double> rates(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        rates[i] = panel.scale() * counts[i] / lm;
    return rates;
}

std::vector<double> annual_totals(const std::vector<double>& series,
                                  const StudyWindow& window) {
    if (series.empty()) throw InputError("annual_totals: empty series");
    if (series.size() != static_cast<std::size_t>(window.total_months()))
        throw InputError("annual_totals: series length " + std::to_string(series.size()) +
                         " does not match window of " +
                         std::to_string(window.total_months()) + " months");
    if (!window.whole_years())
        throw InputError("annual_totals: window does not cover whole calendar years");

    const auto years = window.years();
    std::vector<double> sums(years.size(), 0.0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const int y = window.month_at(static_cast<int>(i)).year;
        sums[static_cast<std::size_t>(y - years.front())] += series[i];
    }
    return sums;
}

}  // namespace itseval::panel
