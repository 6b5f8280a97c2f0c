#include "frailty/date.hpp"

#include "frailty/errors.hpp"

#include <fmt/format.h>

#include <cctype>

namespace frailty {

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

int days_in_month(int year, int month) {
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return kDays[month - 1];
}

} // namespace

Date Date::parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        !all_digits(text, 0, 4) || !all_digits(text, 5, 7) || !all_digits(text, 8, 10)) {
        throw DataError(fmt::format("bad date '{}', expected YYYY-MM-DD", text));
    }
    Date d;
    d.year = std::stoi(text.substr(0, 4));
    d.month = std::stoi(text.substr(5, 2));
    d.day = std::stoi(text.substr(8, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw DataError(fmt::format("date '{}' out of range", text));
    }
    return d;
}

std::string Date::to_string() const {
    return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day);
}

int age_in_years(const Date& birth, const Date& as_of) {
    int age = as_of.year - birth.year;
    if (as_of.month < birth.month || (as_of.month == birth.month && as_of.day < birth.day)) --age;
    return age;
}

} // namespace frailty
