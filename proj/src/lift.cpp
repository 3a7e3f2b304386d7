#include "spreadscope/lift.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

double lift(std::span<const std::uint8_t> mask, std::span<const int> target) {
    if (mask.size() != target.size()) {
        throw LiftError(fmt::format("mask has {} rows, target {}", mask.size(), target.size()));
    }
    std::size_t selected = 0, positives = 0, hits = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        positives += target[i] == 1;
        if (mask[i]) {
            ++selected;
            hits += target[i] == 1;
        }
    }
    if (selected == 0) throw LiftError("lift undefined: condition selects no rows");
    if (positives == 0) throw LiftError("lift undefined: target has no positives");
    const double n = static_cast<double>(mask.size());
    return static_cast<double>(hits) * n /
           (static_cast<double>(selected) * static_cast<double>(positives));
}

std::vector<int> decile_assignment(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t base = n / 10, extra = n % 10;
    std::vector<int> bin(n);
    std::size_t pos = 0;
    for (int d = 0; d < 10; ++d) {
        const std::size_t size = base + (static_cast<std::size_t>(d) < extra ? 1 : 0);
        for (std::size_t k = 0; k < size; ++k) bin[order[pos++]] = d;
    }
    return bin;
}

LiftTable decile_lift(std::span<const double> values, std::span<const int> target,
                      std::string feature) {
    if (values.size() != target.size()) {
        throw LiftError(fmt::format("{} values for {} targets", values.size(), target.size()));
    }
    if (values.size() < 10) throw LiftError("decile lift needs at least 10 rows");
    const auto bins = decile_assignment(values);
    LiftTable table;
    table.feature = std::move(feature);
    for (auto& d : table.deciles) {
        d.lo = std::numeric_limits<double>::infinity();
        d.hi = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto& d = table.deciles[bins[i]];
        ++d.count;
        d.positives += target[i] == 1;
        d.lo = std::min(d.lo, values[i]);
        d.hi = std::max(d.hi, values[i]);
    }
    Mask mask(values.size());
    for (int d = 0; d < 10; ++d) {
        auto& bin = table.deciles[d];
        if (bin.positives == 0) {
            // still validates the base rate
            if (std::find(target.begin(), target.end(), 1) == target.end()) {
                throw LiftError("lift undefined: target has no positives");
            }
            bin.lift = 0.0;
            continue;
        }
        for (std::size_t i = 0; i < values.size(); ++i) mask[i] = bins[i] == d;
        bin.lift = lift(mask, target);
    }
    return table;
}

void write_lift_csv(std::ostream& out, std::span<const LiftTable> tables) {
    out << "feature,decile,interval_lo,interval_hi,count,lift\n";
    for (const auto& t : tables) {
        for (int d = 0; d < 10; ++d) {
            const auto& b = t.deciles[d];
            out << t.feature << ',' << d + 1 << ',' << text::fixed(b.lo, 4) << ','
                << text::fixed(b.hi, 4) << ',' << b.count << ',' << text::fixed(b.lift, 6) << '\n';
        }
    }
}

}  // namespace spreadscope
