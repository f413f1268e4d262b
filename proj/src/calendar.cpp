#include "itseval/calendar.hpp"

#include <cctype>
#include <cstdio>

#include "itseval/error.hpp"

namespace itseval {

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
    if (to > s.size()) return false;
    for (std::size_t i = from; i < to; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

int days_in_month(int year, int month) {
    static const int base[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return (month == 2 && leap) ? 29 : base[month - 1];
}

}  // namespace

CalendarMonth CalendarMonth::plus_months(int m) const {
    int s = serial() + m;
    int y = s / 12;
    int r = s % 12;
    if (r < 0) {
        r += 12;
        --y;
    }
    return {y, r + 1};
}

CalendarMonth CalendarMonth::parse(const std::string& text) {
    if (text.size() != 7 || text[4] != '-' || !all_digits(text, 0, 4) ||
        !all_digits(text, 5, 7))
        throw InputError("invalid month '" + text + "', expected YYYY-MM");
    CalendarMonth m{std::stoi(text.substr(0, 4)), std::stoi(text.substr(5, 2))};
    if (m.month < 1 || m.month > 12)
        throw InputError("invalid month '" + text + "': month out of range");
    return m;
}

std::string CalendarMonth::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

Date Date::parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        !all_digits(text, 0, 4) || !all_digits(text, 5, 7) || !all_digits(text, 8, 10))
        throw InputError("invalid date '" + text + "', expected YYYY-MM-DD");
    Date d{std::stoi(text.substr(0, 4)), std::stoi(text.substr(5, 2)),
           std::stoi(text.substr(8, 2))};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw InputError("invalid date '" + text + "': out of range");
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

StudyWindow::StudyWindow(CalendarMonth start, CalendarMonth end, int intervention_month)
    : start_(start), end_(end), intervention_month_(intervention_month) {
    if (end_ < start_)
        throw InputError("study window end " + end_.to_string() + " precedes start " +
                         start_.to_string());
    if (intervention_month_ < 1 || intervention_month_ > total_months())
        throw InputError("intervention month index " + std::to_string(intervention_month_) +
                         " outside window of " + std::to_string(total_months()) + " months");
}

int StudyWindow::total_months() const { return end_.serial() - start_.serial() + 1; }

int StudyWindow::index_of(CalendarMonth m) const {
    if (!contains(m))
        throw InputError("month " + m.to_string() + " outside study window");
    return m.serial() - start_.serial();
}

CalendarMonth StudyWindow::month_at(int index) const {
    if (index < 0 || index >= total_months())
        throw InputError("month index " + std::to_string(index) + " outside study window");
    return start_.plus_months(index);
}

int StudyWindow::month_of_year_at(int index) const { return month_at(index).month; }

std::vector<int> StudyWindow::years() const {
    std::vector<int> ys;
    for (int y = start_.year; y <= end_.year; ++y) ys.push_back(y);
    return ys;
}

}  // namespace itseval
