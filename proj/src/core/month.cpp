#include "robustcurve/core/month.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace robustcurve::core {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::invalid_argument("invalid date '" + std::string(whole) + "'");
    }
    return value;
}

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return month == 2 && is_leap(year) ? 29 : days[month - 1];
}

}  // namespace

Month Month::parse(std::string_view text) {
    if (text.size() != 7 && text.size() != 10) {
        throw std::invalid_argument("invalid date '" + std::string(text) + "'");
    }
    if (text[4] != '-' || (text.size() == 10 && text[7] != '-')) {
        throw std::invalid_argument("invalid date '" + std::string(text) + "'");
    }
    Month m{parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text)};
    if (m.month < 1 || m.month > 12) {
        throw std::invalid_argument("invalid month in date '" + std::string(text) + "'");
    }
    if (text.size() == 10) {
        const int day = parse_int(text.substr(8, 2), text);
        if (day < 1 || day > days_in_month(m.year, m.month)) {
            throw std::invalid_argument("invalid day in date '" + std::string(text) + "'");
        }
    }
    return m;
}

std::string Month::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, days_in_month(year, month));
    return buf;
}

}  // namespace robustcurve::core
