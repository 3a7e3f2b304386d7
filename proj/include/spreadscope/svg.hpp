#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spreadscope::svg {

/// Horizontal bars, first label on top.
std::string bar_chart(const std::string& title, std::span<const std::string> labels, std::span<const double> values);

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> shade;  // optional, in [0, 1]; light to dark
};

/// Points, plus an optional polyline drawn over them.
std::string scatter_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const Series& points, std::span<const std::pair<double, double>> line = {});

struct StripPoint {
    std::size_t row = 0;
    double value = 0;
    double shade = 0;
};

/// One horizontal strip of points per label, first label on top.
std::string strip_plot(const std::string& title, std::span<const std::string> labels,
                       std::span<const StripPoint> points);

}  // namespace spreadscope::svg
