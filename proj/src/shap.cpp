#include "spreadscope/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/parallel.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

namespace {

double descend(const Tree& tree, int id, std::span<const double> x, std::span<const std::uint8_t> in_s) {
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) return n.prediction;
    const auto f = static_cast<std::size_t>(n.feature);
    if (in_s[f]) {
        if (!std::isfinite(x[f])) throw PredictError(fmt::format("feature {} is not finite", f));
        return descend(tree, x[f] <= n.threshold ? n.left : n.right, x, in_s);
    }
    const TreeNode& l = tree.node(n.left);
    const TreeNode& r = tree.node(n.right);
    if (!(n.cover > 0)) throw ExplainError(fmt::format("node {} has no training cover", id));
    return (l.cover * descend(tree, n.left, x, in_s) + r.cover * descend(tree, n.right, x, in_s)) / n.cover;
}

double tree_expectation(const Tree& tree) {
    const std::vector<std::uint8_t> none(static_cast<std::size_t>(tree.max_feature() + 1), 0);
    return descend(tree, 0, {}, none);
}

void check_width(const Tree& tree, std::size_t width, std::size_t n_features) {
    if (tree.max_feature() >= 0 && static_cast<std::size_t>(tree.max_feature()) >= std::min(width, n_features)) {
        throw ExplainError(fmt::format("tree splits on feature {} but only {} features are available",
                                       tree.max_feature(), std::min(width, n_features)));
    }
}

// Path-dependent recursion. Each path element carries the fraction of
// "feature absent" flow (zero), whether x follows this branch (one) and the
// permutation weight of the subsets of the path so far.
struct PathElement {
    int feature = -1;
    double zero = 0;
    double one = 0;
    double weight = 0;
};

void extend_path(PathElement* path, int depth, double zero, double one, int feature) {
    path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].weight += one * path[i].weight * (i + 1) / (depth + 1.0);
        path[i].weight = zero * path[i].weight * (depth - i) / (depth + 1.0);
    }
}

void unwind_path(PathElement* path, int depth, int index) {
    const double one = path[index].one;
    const double zero = path[index].zero;
    double next = path[depth].weight;
    for (int i = depth - 1; i >= 0; --i) {
        if (one != 0) {
            const double tmp = path[i].weight;
            path[i].weight = next * (depth + 1) / ((i + 1) * one);
            next = tmp - path[i].weight * zero * (depth - i) / (depth + 1.0);
        } else {
            path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
    const double one = path[index].one;
    const double zero = path[index].zero;
    double next = path[depth].weight;
    double total = 0;
    for (int i = depth - 1; i >= 0; --i) {
        if (one != 0) {
            const double tmp = next * (depth + 1) / ((i + 1) * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) / (depth + 1.0);
        } else {
            total += path[i].weight / zero / ((depth - i) / (depth + 1.0));
        }
    }
    return total;
}

struct PathWalker {
    const Tree& tree;
    std::span<const double> x;
    std::vector<double>& phi;

    void walk(int id, PathElement* parent, int depth, double zero, double one, int feature) {
        PathElement* path = parent + depth + 1;
        std::copy(parent, parent + depth + 1, path);
        extend_path(path, depth, zero, one, feature);

        const TreeNode& n = tree.node(id);
        if (n.is_leaf()) {
            for (int i = 1; i <= depth; ++i) {
                const double w = unwound_path_sum(path, depth, i);
                phi[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one - path[i].zero) * n.prediction;
            }
            return;
        }
        const double v = x[static_cast<std::size_t>(n.feature)];
        if (!std::isfinite(v)) throw PredictError(fmt::format("feature {} is not finite", n.feature));
        if (!(n.cover > 0)) throw ExplainError(fmt::format("node {} has no training cover", id));
        const int hot = v <= n.threshold ? n.left : n.right;
        const int cold = hot == n.left ? n.right : n.left;

        double incoming_zero = 1, incoming_one = 1;
        int k = 1;
        while (k <= depth && path[k].feature != n.feature) ++k;
        if (k <= depth) {
            incoming_zero = path[k].zero;
            incoming_one = path[k].one;
            unwind_path(path, depth, k);
            --depth;
        }
        walk(hot, path, depth + 1, incoming_zero * tree.node(hot).cover / n.cover, incoming_one, n.feature);
        walk(cold, path, depth + 1, incoming_zero * tree.node(cold).cover / n.cover, 0.0, n.feature);
    }
};

std::vector<double> path_dependent(const Tree& tree, std::span<const double> x, std::size_t n_features) {
    std::vector<double> phi(n_features, 0.0);
    const auto d = static_cast<std::size_t>(tree.depth()) + 3;
    std::vector<PathElement> buffer(d * d);
    PathWalker{tree, x, phi}.walk(0, buffer.data(), 0, 1.0, 1.0, -1);
    return phi;
}

std::vector<double> enumerate(const Tree& tree, std::span<const double> x, std::size_t n_features, int cap) {
    std::vector<double> phi(n_features, 0.0);
    const auto used = tree.used_features();
    const std::size_t k = used.size();
    if (k > static_cast<std::size_t>(std::max(cap, 0))) {
        throw ExplainError(fmt::format(
            "tree uses {} distinct features, above the enumeration cap of {}; use shallower trees or raise the cap", k,
            cap));
    }
    if (k == 0) return phi;

    std::vector<std::uint8_t> in_s(n_features, 0);
    std::vector<double> value(std::size_t{1} << k);
    for (std::size_t mask = 0; mask < value.size(); ++mask) {
        for (std::size_t b = 0; b < k; ++b) in_s[static_cast<std::size_t>(used[b])] = (mask >> b) & 1U;
        value[mask] = descend(tree, 0, x, in_s);
    }
    // |S|! (k - |S| - 1)! / k!  =  1 / (k * C(k - 1, |S|))
    std::vector<double> weight(k);
    double binom = 1;
    for (std::size_t s = 0; s < k; ++s) {
        weight[s] = 1.0 / (static_cast<double>(k) * binom);
        binom = binom * static_cast<double>(k - 1 - s) / static_cast<double>(s + 1);
    }
    for (std::size_t b = 0; b < k; ++b) {
        const std::size_t bit = std::size_t{1} << b;
        double total = 0;
        for (std::size_t mask = 0; mask < value.size(); ++mask) {
            if (mask & bit) continue;
            total += weight[static_cast<std::size_t>(std::popcount(mask))] * (value[mask | bit] - value[mask]);
        }
        phi[static_cast<std::size_t>(used[b])] = total;
    }
    return phi;
}

std::string date_or_row(const ShapMatrix& shap, std::size_t i) {
    return i < shap.dates.size() ? shap.dates[i].str() : std::to_string(i);
}

}  // namespace

double conditional_expectation(const Tree& tree, std::span<const double> x, std::span<const std::uint8_t> in_s) {
    if (tree.max_feature() >= 0) {
        const auto need = static_cast<std::size_t>(tree.max_feature()) + 1;
        if (in_s.size() < need || x.size() < need) throw PredictError("input is shorter than the features the tree uses");
    }
    return descend(tree, 0, x, in_s);
}

std::vector<double> tree_shap(const Tree& tree, std::span<const double> x, std::size_t n_features,
                              const ShapOptions& options) {
    check_width(tree, x.size(), n_features);
    return options.engine == ShapEngine::Enumeration ? enumerate(tree, x, n_features, options.enumeration_cap)
                                                     : path_dependent(tree, x, n_features);
}

ShapMatrix shap_values(const EnsembleView& model, const Dataset& ds, const ShapOptions& options) {
    const std::size_t n = ds.size();
    const std::size_t p = ds.features.cols();
    if (model.trees.empty()) throw ExplainError("model has no trees");

    ShapMatrix out;
    out.values = Matrix(n, p, 0.0);
    out.dates = ds.dates;
    out.feature_names = ds.feature_names;
    out.unit = model.unit;
    out.base_value = model.offset;
    for (const auto& t : model.trees) {
        check_width(*t.tree, p, p);
        out.base_value += t.scale * tree_expectation(*t.tree);
    }
    if (options.engine == ShapEngine::Enumeration) {
        for (std::size_t i = 0; i < model.trees.size(); ++i) {
            const auto k = model.trees[i].tree->used_features().size();
            if (k > static_cast<std::size_t>(std::max(options.enumeration_cap, 0))) {
                throw ExplainError(fmt::format("tree {} uses {} distinct features, above the enumeration cap of {}; "
                                               "use shallower trees or raise the cap",
                                               i, k, options.enumeration_cap));
            }
        }
    }
    parallel_for(n, options.n_threads, [&](std::size_t i) {
        const auto x = ds.features.row(i);
        auto row = out.values.row(i);
        for (const auto& t : model.trees) {
            const auto phi = tree_shap(*t.tree, x, p, options);
            for (std::size_t j = 0; j < p; ++j) row[j] += t.scale * phi[j];
        }
    });
    return out;
}

ShapMatrix shap_values(const AnyModel& model, const Dataset& ds, const ShapOptions& options) {
    const auto& names = feature_names(model);
    if (!names.empty() && names.size() != ds.features.cols()) {
        throw ExplainError(
            fmt::format("model expects {} features, dataset has {}", names.size(), ds.features.cols()));
    }
    return shap_values(ensemble_view(model), ds, options);
}

std::vector<ImportanceEntry> importance(const ShapMatrix& shap) {
    const std::size_t n = shap.values.rows();
    const std::size_t p = shap.values.cols();
    if (n == 0) throw ExplainError("importance needs at least one instance");
    std::vector<ImportanceEntry> out(p);
    for (std::size_t j = 0; j < p; ++j) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) total += std::abs(shap.values(i, j));
        out[j].feature = j;
        out[j].name = j < shap.feature_names.size() ? shap.feature_names[j] : fmt::format("x{}", j);
        out[j].mean_abs = total / static_cast<double>(n);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
        return a.name < b.name;
    });
    for (std::size_t r = 0; r < p; ++r) out[r].rank = static_cast<int>(r + 1);
    return out;
}

std::vector<std::pair<double, double>> loess(std::span<const double> x, std::span<const double> y, double span) {
    if (x.size() != y.size()) throw Error("loess: x and y differ in length");
    if (!(span > 0.0 && span <= 1.0)) throw Error("loess: span must lie in (0, 1]");
    const std::size_t n = x.size();
    std::vector<std::pair<double, double>> out;
    if (n == 0) return out;

    std::vector<double> grid(x.begin(), x.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const auto q = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))), 1, n);
    std::vector<double> dist(n);
    for (double x0 : grid) {
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(x[i] - x0);
        std::vector<double> sorted = dist;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted.end());
        const double h = sorted[q - 1];

        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double w;
            if (h > 0) {
                const double u = dist[i] / h;
                w = u < 1 ? std::pow(1 - u * u * u, 3) : 0.0;
            } else {
                w = dist[i] == 0 ? 1.0 : 0.0;
            }
            if (w == 0) continue;
            const double dx = x[i] - x0;
            sw += w;
            sx += w * dx;
            sy += w * y[i];
            sxx += w * dx * dx;
            sxy += w * dx * y[i];
        }
        const double denom = sw * sxx - sx * sx;
        double fitted = sy / sw;
        if (denom > 1e-12 * sw * sxx) fitted = (sy * sxx - sx * sxy) / denom;
        out.emplace_back(x0, fitted);
    }
    return out;
}

DependencePoints dependence(const ShapMatrix& shap, const Dataset& ds, std::size_t feature, const CorrMatrix& corr,
                            double span) {
    const std::size_t p = shap.values.cols();
    if (feature >= p || feature >= ds.features.cols()) throw ExplainError(fmt::format("no feature {}", feature));
    if (ds.size() != shap.values.rows()) throw ExplainError("attributions and dataset differ in row count");
    if (feature >= corr.most_correlated.size()) throw ExplainError("correlation table does not cover the feature");

    DependencePoints dep;
    dep.feature = feature;
    dep.name = ds.feature_names.at(feature);
    dep.partner = corr.most_correlated[feature].index;
    dep.partner_name = ds.feature_names.at(dep.partner);
    dep.dates = ds.dates;
    dep.x = ds.features.column(feature);
    dep.partner_values = ds.features.column(dep.partner);
    dep.phi = shap.values.column(feature);
    dep.smooth = loess(dep.x, dep.phi, span);
    return dep;
}

std::vector<double> rank_quantiles(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<double> q(n, 0.0);
    if (n < 2) return q;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && values[order[hi + 1]] == values[order[lo]]) ++hi;
        const double mid = 0.5 * static_cast<double>(lo + hi) / static_cast<double>(n - 1);
        for (std::size_t k = lo; k <= hi; ++k) q[order[k]] = mid;
        lo = hi + 1;
    }
    return q;
}

std::vector<SummaryPoint> contribution_summary(const ShapMatrix& shap, const Dataset& ds) {
    if (ds.size() != shap.values.rows()) throw ExplainError("attributions and dataset differ in row count");
    std::vector<SummaryPoint> out;
    for (const auto& entry : importance(shap)) {
        const auto column = ds.features.column(entry.feature);
        const auto q = rank_quantiles(column);
        for (std::size_t i = 0; i < column.size(); ++i) {
            out.push_back({entry.feature, entry.rank, ds.dates.at(i), shap.values(i, entry.feature), column[i], q[i]});
        }
    }
    return out;
}

void write_shap_long_csv(std::ostream& out, const ShapMatrix& shap) {
    out << "date,feature,value\n";
    for (std::size_t i = 0; i < shap.values.rows(); ++i) {
        for (std::size_t j = 0; j < shap.values.cols(); ++j) {
            out << date_or_row(shap, i) << ',' << shap.feature_names.at(j) << ',' << text::number(shap.values(i, j))
                << '\n';
        }
    }
}

void write_shap_wide_csv(std::ostream& out, const ShapMatrix& shap) {
    out << "DATE";
    for (const auto& name : shap.feature_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < shap.values.rows(); ++i) {
        out << date_or_row(shap, i);
        for (std::size_t j = 0; j < shap.values.cols(); ++j) out << ',' << text::number(shap.values(i, j));
        out << '\n';
    }
}

void write_importance_csv(std::ostream& out, std::span<const ImportanceEntry> train,
                          std::span<const ImportanceEntry> test) {
    if (train.size() != test.size()) throw ExplainError("train and test rankings differ in length");
    std::vector<const ImportanceEntry*> by_feature(train.size(), nullptr);
    for (const auto& e : train) {
        if (e.feature >= by_feature.size()) throw ExplainError("train ranking has an out-of-range feature");
        by_feature[e.feature] = &e;
    }
    out << "feature,mean_abs_shap_train,rank_train,mean_abs_shap_test,rank_test\n";
    for (const auto& e : test) {
        const auto* tr = e.feature < by_feature.size() ? by_feature[e.feature] : nullptr;
        if (tr == nullptr) throw ExplainError(fmt::format("feature {} missing from the train ranking", e.name));
        out << e.name << ',' << text::fixed(tr->mean_abs, 6) << ',' << tr->rank << ',' << text::fixed(e.mean_abs, 6)
            << ',' << e.rank << '\n';
    }
}

void write_dependence_csv(std::ostream& out, const DependencePoints& dep) {
    out << "date,feature,value,shap,partner,partner_value\n";
    for (std::size_t i = 0; i < dep.x.size(); ++i) {
        out << (i < dep.dates.size() ? dep.dates[i].str() : std::to_string(i)) << ',' << dep.name << ','
            << text::number(dep.x[i]) << ',' << text::number(dep.phi[i]) << ',' << dep.partner_name << ','
            << text::number(dep.partner_values[i]) << '\n';
    }
}

void write_smooth_csv(std::ostream& out, const DependencePoints& dep) {
    out << "feature,value,fitted\n";
    for (const auto& [x, y] : dep.smooth) out << dep.name << ',' << text::number(x) << ',' << text::number(y) << '\n';
}

void write_summary_csv(std::ostream& out, const ShapMatrix& shap, std::span<const SummaryPoint> points) {
    out << "feature,rank,date,shap,value,quantile\n";
    for (const auto& pt : points) {
        out << shap.feature_names.at(pt.feature) << ',' << pt.rank << ',' << pt.date.str() << ','
            << text::number(pt.phi) << ',' << text::number(pt.value) << ',' << text::fixed(pt.quantile, 6) << '\n';
    }
}

}  // namespace spreadscope
