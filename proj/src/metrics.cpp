#include "spreadscope/metrics.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

namespace {

constexpr const char* kUndefined = "—";

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics rates(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
    return {ratio(tp, tp + fp), ratio(tp, tp + fn), ratio(tn, tn + fp)};
}

std::string show(const std::optional<double>& v, int decimals) {
    if (!v) return kUndefined;
    return decimals < 0 ? text::number(*v) : text::fixed(*v, decimals);
}

}  // namespace

double MetricsReport::accuracy() const {
    return static_cast<double>(confusion.tp + confusion.tn) / static_cast<double>(confusion.total());
}

MetricsReport evaluate(std::span<const int> labels, std::span<const int> truth, double threshold) {
    if (labels.size() != truth.size()) {
        throw Error(fmt::format("labels ({}) and truth ({}) differ in length", labels.size(), truth.size()));
    }
    if (labels.empty()) throw Error("cannot evaluate an empty prediction set");
    MetricsReport r;
    r.threshold = threshold;
    auto& c = r.confusion;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = labels[i], t = truth[i];
        if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw Error(fmt::format("row {}: labels must be 0 or 1", i));
        if (p == 1) {
            (t == 1 ? c.tp : c.fp)++;
        } else {
            (t == 1 ? c.fn : c.tn)++;
        }
    }
    r.per_class[1] = rates(c.tp, c.fp, c.tn, c.fn);
    r.per_class[0] = rates(c.tn, c.fn, c.tp, c.fp);
    return r;
}

void write_metrics_csv(std::ostream& out, std::span<const NamedReport> reports) {
    out << "model,class,precision,recall,specificity,tp,fp,tn,fn\n";
    for (const auto& [model, r] : reports) {
        for (int cls = 0; cls < 2; ++cls) {
            const auto& m = r.per_class[static_cast<std::size_t>(cls)];
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", model, cls, show(m.precision, 6),
                               show(m.recall, 6), show(m.specificity, 6), r.confusion.tp, r.confusion.fp,
                               r.confusion.tn, r.confusion.fn);
        }
    }
}

std::string metrics_table(std::span<const NamedReport> reports) {
    std::size_t width = 5;
    for (const auto& r : reports) width = std::max(width, r.model.size());
    std::string s = fmt::format("{:<{}}  {:>5}  {:>9}  {:>6}  {:>11}\n", "Model", width, "Class", "Precision",
                                "Recall", "Specificity");
    for (const auto& [model, r] : reports) {
        for (int cls = 0; cls < 2; ++cls) {
            const auto& m = r.per_class[static_cast<std::size_t>(cls)];
            // "—" is three bytes but one column wide, so pad by hand
            auto cell = [](const std::optional<double>& v, std::size_t w) {
                if (!v) return std::string(w - 1, ' ') + kUndefined;
                return fmt::format("{:>{}}", text::fixed(*v, 2), w);
            };
            s += fmt::format("{:<{}}  {:>5}  {}  {}  {}\n", model, width, cls, cell(m.precision, 9),
                             cell(m.recall, 6), cell(m.specificity, 11));
        }
    }
    return s;
}

}  // namespace spreadscope
