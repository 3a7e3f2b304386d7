#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace spreadscope {

/// Calendar month, the time index of every series in the pipeline.
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    /// Accepts `YYYY-MM` or `YYYY-MM-DD`; throws std::invalid_argument otherwise.
    static YearMonth parse(std::string_view text);
    static YearMonth from_ordinal(int ordinal);

    /// Months since year 0; consecutive months differ by exactly 1.
    int ordinal() const { return year * 12 + (month - 1); }
    YearMonth next() const { return from_ordinal(ordinal() + 1); }
    std::string str() const;

    friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

/// Inclusive month range.
struct MonthWindow {
    YearMonth first;
    YearMonth last;

    bool contains(YearMonth m) const { return first <= m && m <= last; }
    int length() const { return last.ordinal() - first.ordinal() + 1; }
};

}  // namespace spreadscope
