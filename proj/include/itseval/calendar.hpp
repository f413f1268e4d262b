#pragma once

#include <compare>
#include <string>
#include <vector>

namespace itseval {

/// A calendar month (year + month-of-year, 1..12).
struct CalendarMonth {
    int year = 0;
    int month = 1;  // 1 = January .. 12 = December

    auto operator<=>(const CalendarMonth&) const = default;

    /// Serial month count since year 0; differences give month spans.
    [[nodiscard]] int serial() const { return year * 12 + (month - 1); }

    [[nodiscard]] CalendarMonth plus_months(int m) const;

    /// Parse "YYYY-MM". Throws InputError on malformed input.
    static CalendarMonth parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

/// A calendar date. Only validity and month membership matter here.
struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    [[nodiscard]] CalendarMonth calendar_month() const { return {year, month}; }

    /// Parse ISO "YYYY-MM-DD". Throws InputError on malformed input.
    static Date parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

/// The fixed observation window of a study, in whole months, plus the
/// 1-based index of the month in which the intervention begins.
class StudyWindow {
public:
    StudyWindow() = default;
    StudyWindow(CalendarMonth start, CalendarMonth end, int intervention_month);

    [[nodiscard]] CalendarMonth start() const { return start_; }
    [[nodiscard]] CalendarMonth end() const { return end_; }

    /// Number of months in the window, inclusive of both ends.
    [[nodiscard]] int total_months() const;

    /// 1-based index of the first intervention month.
    [[nodiscard]] int intervention_month() const { return intervention_month_; }

    [[nodiscard]] bool contains(CalendarMonth m) const { return start_ <= m && m <= end_; }

    /// 0-based series index of a month inside the window.
    [[nodiscard]] int index_of(CalendarMonth m) const;

    /// Month at a 0-based series index.
    [[nodiscard]] CalendarMonth month_at(int index) const;

    /// Month-of-year (1..12) at a 0-based series index.
    [[nodiscard]] int month_of_year_at(int index) const;

    /// True when the window covers whole calendar years (Jan..Dec).
    [[nodiscard]] bool whole_years() const {
        return start_.month == 1 && end_.month == 12;
    }

    /// Calendar years covered by the window, in order.
    [[nodiscard]] std::vector<int> years() const;

private:
    CalendarMonth start_{1995, 1};
    CalendarMonth end_{2010, 12};
    int intervention_month_ = 1;
};

}  // namespace itseval
