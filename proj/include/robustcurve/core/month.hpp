#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace robustcurve::core {

/// Month-end tag. Observations carry no intra-month time; two dates are equal
/// iff they fall in the same calendar month.
struct Month {
    int year = 1970;
    int month = 1;  // 1..12

    /// Months since January of year 0.
    [[nodiscard]] constexpr int ordinal() const { return year * 12 + (month - 1); }

    [[nodiscard]] static constexpr Month from_ordinal(int ord) {
        int y = ord / 12;
        int m = ord % 12;
        if (m < 0) {
            m += 12;
            --y;
        }
        return Month{y, m + 1};
    }

    [[nodiscard]] constexpr Month plus(int months) const { return from_ordinal(ordinal() + months); }

    constexpr auto operator<=>(const Month& other) const { return ordinal() <=> other.ordinal(); }
    constexpr bool operator==(const Month& other) const { return ordinal() == other.ordinal(); }

    /// Accepts `YYYY-MM` or `YYYY-MM-DD` (the day is ignored).
    static Month parse(std::string_view text);

    /// Last calendar day of the month, `YYYY-MM-DD`.
    [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] constexpr int months_between(const Month& from, const Month& to) {
    return to.ordinal() - from.ordinal();
}

}  // namespace robustcurve::core
