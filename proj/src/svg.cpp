#include "spreadscope/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace spreadscope::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kLeft = 110;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0, hi = 1;

    static Range of(std::span<const double> v, bool with_zero = false) {
        Range r{with_zero ? 0.0 : INFINITY, with_zero ? 0.0 : -INFINITY};
        for (double x : v) {
            if (!std::isfinite(x)) continue;
            r.lo = std::min(r.lo, x);
            r.hi = std::max(r.hi, x);
        }
        if (!std::isfinite(r.lo)) return {0, 1};
        if (r.hi - r.lo < 1e-12) {
            r.lo -= 0.5;
            r.hi += 0.5;
        }
        return r;
    }
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string header(double height, const std::string& title) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
        kWidth, height, kWidth / 2, escape(title));
}

std::string shade_color(double t) {
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    const auto channel = [t](double light, double dark) { return static_cast<int>(std::lround(light + t * (dark - light))); };
    return fmt::format("#{:02x}{:02x}{:02x}", channel(173, 8), channel(216, 48), channel(230, 107));
}

std::string x_axis(const Range& r, double y, const std::string& label) {
    std::string s = fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", kLeft, y,
                                kWidth - kRight, y);
    for (int k = 0; k <= 4; ++k) {
        const double v = r.lo + (r.hi - r.lo) * k / 4.0;
        const double px = r.map(v, kLeft, kWidth - kRight);
        s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px, y + 14, v);
    }
    if (!label.empty()) {
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (kLeft + kWidth - kRight) / 2,
                         y + 32, escape(label));
    }
    return s;
}

}  // namespace

std::string bar_chart(const std::string& title, std::span<const std::string> labels, std::span<const double> values) {
    const double row = 18;
    const double height = kTop + row * static_cast<double>(labels.size()) + kBottom;
    const Range r = Range::of(values, true);
    std::string s = header(height, title);
    for (std::size_t k = 0; k < labels.size() && k < values.size(); ++k) {
        const double y = kTop + row * static_cast<double>(k);
        const double x0 = r.map(0, kLeft, kWidth - kRight);
        const double x1 = r.map(values[k], kLeft, kWidth - kRight);
        s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{}\" fill=\"#1f77b4\"/>\n",
                         std::min(x0, x1), y + 2, std::abs(x1 - x0), row - 4);
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + row - 6,
                         escape(labels[k]));
    }
    s += x_axis(r, height - kBottom + 4, "");
    return s + "</svg>\n";
}

std::string scatter_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const Series& points, std::span<const std::pair<double, double>> line) {
    const double height = 420;
    const Range rx = Range::of(points.x);
    const Range ry = Range::of(points.y);
    std::string s = header(height, title);
    for (std::size_t k = 0; k < points.x.size() && k < points.y.size(); ++k) {
        const double shade = k < points.shade.size() ? points.shade[k] : 1.0;
        s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"{}\"/>\n",
                         rx.map(points.x[k], kLeft, kWidth - kRight), ry.map(points.y[k], height - kBottom, kTop),
                         shade_color(shade));
    }
    if (!line.empty()) {
        s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : line) {
            s += fmt::format("{:.1f},{:.1f} ", rx.map(x, kLeft, kWidth - kRight), ry.map(y, height - kBottom, kTop));
        }
        s += "\"/>\n";
    }
    s += x_axis(rx, height - kBottom, x_label);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     height - kBottom);
    for (int k = 0; k <= 4; ++k) {
        const double v = ry.lo + (ry.hi - ry.lo) * k / 4.0;
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6,
                         ry.map(v, height - kBottom, kTop) + 4, v);
    }
    s += fmt::format("<text x=\"16\" y=\"{0}\" transform=\"rotate(-90 16 {0})\" text-anchor=\"middle\">{1}</text>\n",
                     (kTop + height - kBottom) / 2, escape(y_label));
    return s + "</svg>\n";
}

std::string strip_plot(const std::string& title, std::span<const std::string> labels,
                       std::span<const StripPoint> points) {
    const double row = 22;
    const double height = kTop + row * static_cast<double>(labels.size()) + kBottom;
    std::vector<double> values;
    for (const auto& p : points) values.push_back(p.value);
    const Range r = Range::of(values, true);
    std::string s = header(height, title);
    for (std::size_t k = 0; k < labels.size(); ++k) {
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6,
                         kTop + row * static_cast<double>(k) + row / 2 + 4, escape(labels[k]));
    }
    std::vector<std::size_t> seen(labels.size(), 0);
    for (const auto& p : points) {
        if (p.row >= labels.size()) continue;
        // deterministic vertical spread so overlapping points stay visible
        const double offset = (static_cast<double>(seen[p.row]++ % 7) - 3.0) * 2.0;
        s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2\" fill=\"{}\"/>\n",
                         r.map(p.value, kLeft, kWidth - kRight),
                         kTop + row * static_cast<double>(p.row) + row / 2 + offset, shade_color(p.shade));
    }
    s += x_axis(r, height - kBottom + 4, "SHAP value");
    return s + "</svg>\n";
}

}  // namespace spreadscope::svg
