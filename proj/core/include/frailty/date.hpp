#pragma once

#include <compare>
#include <string>

namespace frailty {

/// Calendar date, ISO 8601 text form (YYYY-MM-DD).
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& text); // throws DataError on bad input
    std::string to_string() const;

    static Date first_of_year(int y) { return {y, 1, 1}; }
    static Date last_of_year(int y) { return {y, 12, 31}; }
};

/// Completed years between birth and an as-of date.
int age_in_years(const Date& birth, const Date& as_of);

} // namespace frailty
