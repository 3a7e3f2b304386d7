#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spreadscope {

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// A rate with a zero denominator is left empty.
struct ClassMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> specificity;
};

struct MetricsReport {
    Confusion confusion;
    std::array<ClassMetrics, 2> per_class;  // index = class; class 0 swaps the roles of the labels
    double threshold = 0.5;

    double accuracy() const;
};

/// Throws Error on length mismatch, empty input or labels outside {0, 1}.
MetricsReport evaluate(std::span<const int> labels, std::span<const int> truth, double threshold = 0.5);

struct NamedReport {
    std::string model;
    MetricsReport report;
};

/// model,class,precision,recall,specificity,tp,fp,tn,fn ; undefined rates print as "—".
void write_metrics_csv(std::ostream& out, std::span<const NamedReport> reports);
/// Aligned text table, two decimals.
std::string metrics_table(std::span<const NamedReport> reports);

}  // namespace spreadscope
