#include "spreadscope/month.hpp"

#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

namespace spreadscope {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

}  // namespace

YearMonth YearMonth::parse(std::string_view text) {
    const bool short_form = text.size() == 7;
    const bool long_form = text.size() == 10;
    if (!(short_form || long_form) || text[4] != '-' || (long_form && text[7] != '-')) {
        throw std::invalid_argument(fmt::format("malformed date '{}'", text));
    }
    const auto y = text.substr(0, 4);
    const auto m = text.substr(5, 2);
    if (!all_digits(y) || !all_digits(m)) {
        throw std::invalid_argument(fmt::format("malformed date '{}'", text));
    }
    YearMonth out{to_int(y), to_int(m)};
    if (out.month < 1 || out.month > 12) {
        throw std::invalid_argument(fmt::format("month out of range in '{}'", text));
    }
    if (long_form) {
        const auto d = text.substr(8, 2);
        if (!all_digits(d) || to_int(d) < 1 || to_int(d) > 31) {
            throw std::invalid_argument(fmt::format("malformed day in '{}'", text));
        }
    }
    return out;
}

YearMonth YearMonth::from_ordinal(int ordinal) {
    return YearMonth{ordinal / 12, ordinal % 12 + 1};
}

std::string YearMonth::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

}  // namespace spreadscope
