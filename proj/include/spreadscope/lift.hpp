#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace spreadscope {

/// Row selector; nonzero entries are selected.
using Mask = std::vector<std::uint8_t>;

/// P(A and B) / (P(A) P(B)) with A the masked rows and B the positive
/// target: the positive rate inside the mask over the overall positive rate.
/// Throws LiftError when the mask is empty or the target has no positives.
double lift(std::span<const std::uint8_t> mask, std::span<const int> target);

struct DecileBin {
    double lo = 0;  // smallest value in the bin
    double hi = 0;  // largest value in the bin
    std::size_t count = 0;
    std::size_t positives = 0;
    double lift = 0;
};

struct LiftTable {
    std::string feature;
    std::array<DecileBin, 10> deciles{};
};

/// Rank-based deciles (ties keep row order); the first n mod 10 bins hold
/// one extra row. A bin without positives has lift 0.
LiftTable decile_lift(std::span<const double> values, std::span<const int> target,
                      std::string feature = {});

/// Decile of each row (0..9) under the same assignment as decile_lift.
std::vector<int> decile_assignment(std::span<const double> values);

void write_lift_csv(std::ostream& out, std::span<const LiftTable> tables);

}  // namespace spreadscope
