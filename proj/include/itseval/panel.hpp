#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "itseval/calendar.hpp"
#include "itseval/csv.hpp"

namespace itseval::panel {

enum class Group { treated, candidate_control };
enum class Severity { pdo, fi };

/// Outcome categories reported side by side. Pedestrian and bike flags are
/// orthogonal to severity: a crash can appear in either or both flag
/// categories in addition to its severity class.
enum class Category { all, pdo, fi, pedestrian, bike };
inline constexpr std::array<Category, 5> kCategories = {
    Category::all, Category::pdo, Category::fi, Category::pedestrian, Category::bike};

const char* to_string(Group g);
const char* to_string(Category c);
Category category_from_string(const std::string& s);

struct CrashRecord {
    Date date;
    std::string section_id;
    Severity severity = Severity::pdo;
    bool pedestrian_involved = false;
    bool bike_involved = false;
};

struct SectionRecord {
    std::string section_id;
    Group group = Group::treated;
    int lanes = 1;
    double length = 0.0;   // miles
    int match_weight = 1;  // matching multiplicity, 1 unless matched with replacement
};

/// Exposure-normalized monthly outcome series for both groups over a fixed
/// window. Control counts and exposure carry the matching multiplicity.
/// Immutable once built; safe to share across threads.
class MonthlyPanel {
public:
    MonthlyPanel(StudyWindow window, double scale);

    [[nodiscard]] const StudyWindow& window() const { return window_; }
    [[nodiscard]] double scale() const { return scale_; }

    [[nodiscard]] const std::vector<double>& counts(Group g, Category c) const;
    [[nodiscard]] double lane_miles(Group g) const;
    [[nodiscard]] std::size_t dropped_outside_window() const { return dropped_; }

    /// Monthly counts rescaled to outcomes per `scale` lane-miles.
    [[nodiscard]] std::vector<double> rates(Group g, Category c) const;

private:
    friend MonthlyPanel ingest_crashes(const csv::Table&, const std::vector<SectionRecord>&,
                                       const StudyWindow&, double);
    StudyWindow window_;
    double scale_;
    std::size_t dropped_ = 0;
    std::map<Group, std::array<std::vector<double>, 5>> series_;
    std::map<Group, double> lane_miles_;
};

/// Parse the sections CSV (section_id, group, lanes, length_mi, match_weight
/// plus the covariate columns used by the propensity model).
std::vector<SectionRecord> read_sections(const csv::Table& table);

/// Parse and validate one crash row; `row` indexes into the table.
CrashRecord parse_crash_row(const csv::Table& table, std::size_t row);

/// Total weighted exposure of a group: sum of weight * lanes * length.
double lane_miles(const std::vector<SectionRecord>& sections, Group group);

/// Build the five category series per group from a crash CSV. Records
/// outside the window are dropped and counted; unknown section ids and
/// malformed fields raise InputError with the file row number.
MonthlyPanel ingest_crashes(const csv::Table& crashes,
                            const std::vector<SectionRecord>& sections,
                            const StudyWindow& window, double scale = 100.0);

/// Monthly rates per `scale` lane-miles for one group/category.
std::vector<double> to_rate_series(const MonthlyPanel& panel, Group g, Category c);

/// Calendar-year sums of a monthly series. The window must cover whole
/// years and the series length must match the window.
std::vector<double> annual_totals(const std::vector<double>& series,
                                  const StudyWindow& window);

}  // namespace itseval::panel
