#include "spreadscope/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "spreadscope/error.hpp"

namespace spreadscope {

namespace {

struct NodeStats {
    double weight = 0;
    double sum = 0;         // sum w*y
    double class_w[2] = {0, 0};

    void add(double w, double y) {
        weight += w;
        sum += w * y;
        class_w[y > 0.5 ? 1 : 0] += w;
    }
};

/// Criterion term whose increase measures the improvement of a split:
/// sum_c w_c^2 / W for Gini, S^2 / W for variance.
double purity(const NodeStats& s, SplitCriterion c) {
    if (s.weight <= 0) return 0.0;
    if (c == SplitCriterion::Gini) {
        return (s.class_w[0] * s.class_w[0] + s.class_w[1] * s.class_w[1]) / s.weight;
    }
    return s.sum * s.sum / s.weight;
}

struct Candidate {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

class Builder {
public:
    Builder(const Matrix& X, std::span<const double> y, std::span<const double> w,
            const TreeParams& params, Rng& rng)
        : X_(X), y_(y), w_(w), params_(params), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t>& rows, int depth) {
        NodeStats stats;
        for (auto r : rows) stats.add(w_[r], y_[r]);

        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        {
            TreeNode& node = nodes_.back();
            node.n_train = static_cast<int>(rows.size());
            node.cover = stats.weight;
            if (params_.criterion == SplitCriterion::Gini) {
                node.prediction = stats.class_w[1] / stats.weight;
                node.class_counts = {std::llround(stats.class_w[0]), std::llround(stats.class_w[1])};
            } else {
                node.prediction = stats.sum / stats.weight;
            }
        }

        const double impurity = node_impurity(rows, stats);
        if (depth >= params_.max_depth || impurity <= 0.0 ||
            rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf)) {
            return id;
        }

        const Candidate best = best_split(rows, stats);
        if (best.feature < 0 || !(best.gain > 1e-12 * impurity)) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            (X_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        const int l = grow(left, depth + 1);
        nodes_[id].left = l;
        const int r = grow(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    double node_impurity(const std::vector<std::size_t>& rows, const NodeStats& stats) const {
        if (params_.criterion == SplitCriterion::Gini) {
            if (stats.class_w[0] <= 0 || stats.class_w[1] <= 0) return 0.0;
            return stats.weight - purity(stats, SplitCriterion::Gini);
        }
        const double mean = stats.sum / stats.weight;
        double sse = 0;
        for (auto r : rows) sse += w_[r] * (y_[r] - mean) * (y_[r] - mean);
        return sse;
    }

    std::vector<int> draw_features() {
        const int p = static_cast<int>(X_.cols());
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        if (params_.mtry >= p) return all;
        const int m = std::max(1, params_.mtry);
        for (int i = 0; i < m; ++i) {
            const auto j = static_cast<std::size_t>(i) + uniform_index(rng_, static_cast<std::size_t>(p - i));
            std::swap(all[static_cast<std::size_t>(i)], all[j]);
        }
        all.resize(static_cast<std::size_t>(m));
        std::sort(all.begin(), all.end());
        return all;
    }

    Candidate best_split(const std::vector<std::size_t>& rows, const NodeStats& total) {
        const double parent = purity(total, params_.criterion);
        const std::size_t n = rows.size();
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        Candidate best;
        std::vector<std::pair<double, std::size_t>> sorted(n);
        for (int f : draw_features()) {
            for (std::size_t i = 0; i < n; ++i) {
                sorted[i] = {X_(rows[i], static_cast<std::size_t>(f)), rows[i]};
            }
            std::sort(sorted.begin(), sorted.end());
            NodeStats left;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const auto r = sorted[k].second;
                left.add(w_[r], y_[r]);
                const double v = sorted[k].first;
                const double next = sorted[k + 1].first;
                if (v == next) continue;
                if (k + 1 < min_leaf || n - k - 1 < min_leaf) continue;
                NodeStats right;
                right.weight = total.weight - left.weight;
                right.sum = total.sum - left.sum;
                right.class_w[0] = total.class_w[0] - left.class_w[0];
                right.class_w[1] = total.class_w[1] - left.class_w[1];
                const double gain =
                    purity(left, params_.criterion) + purity(right, params_.criterion) - parent;
                if (gain > best.gain) {
                    double threshold = v + (next - v) / 2;
                    if (!(threshold < next)) threshold = v;
                    best = {f, threshold, gain};
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const double> y_;
    std::span<const double> w_;
    const TreeParams& params_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

Tree::Tree() : nodes_(1) {}

Tree::Tree(std::vector<TreeNode> nodes, TreeParams params)
    : nodes_(std::move(nodes)), params_(params) {
    if (nodes_.empty()) throw ModelFormatError("tree has no nodes");
    const int n = static_cast<int>(nodes_.size());
    std::vector<int> parents(nodes_.size(), 0);
    for (int i = 0; i < n; ++i) {
        const auto& node = nodes_[static_cast<std::size_t>(i)];
        if (node.is_leaf()) {
            if (node.left != -1 || node.right != -1) throw ModelFormatError("leaf with children");
            continue;
        }
        // children are numbered after their parent
        if (node.left <= i || node.right <= i || node.left >= n || node.right >= n ||
            node.left == node.right) {
            throw ModelFormatError("internal node with invalid children");
        }
        if (!std::isfinite(node.threshold)) throw ModelFormatError("non-finite threshold");
        ++parents[static_cast<std::size_t>(node.left)];
        ++parents[static_cast<std::size_t>(node.right)];
        max_feature_ = std::max(max_feature_, node.feature);
    }
    for (std::size_t i = 1; i < parents.size(); ++i) {
        if (parents[i] != 1) throw ModelFormatError(fmt::format("node {} has {} parents", i, parents[i]));
    }
}

Tree Tree::leaf(double prediction, double cover, int n_train) {
    TreeNode node;
    node.prediction = prediction;
    node.cover = cover;
    node.n_train = n_train;
    return Tree({node}, TreeParams{});
}

int Tree::leaf_index(std::span<const double> x) const {
    if (static_cast<int>(x.size()) <= max_feature_) {
        throw PredictError(fmt::format("feature vector has {} entries, tree uses index {}", x.size(),
                                       max_feature_));
    }
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
        const auto& node = nodes_[static_cast<std::size_t>(id)];
        const double v = x[static_cast<std::size_t>(node.feature)];
        if (!std::isfinite(v)) {
            throw PredictError(fmt::format("feature {} is not finite", node.feature));
        }
        id = v <= node.threshold ? node.left : node.right;
    }
    return id;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& node = nodes_[i];
        best = std::max(best, depth[i]);
        if (!node.is_leaf()) {
            depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
        }
    }
    return best;
}

std::vector<int> Tree::used_features() const {
    std::vector<int> out;
    for (const auto& node : nodes_) {
        if (!node.is_leaf()) out.push_back(node.feature);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double Tree::expected_value() const {
    double total = 0, weighted = 0;
    for (const auto& node : nodes_) {
        if (!node.is_leaf()) continue;
        total += node.cover;
        weighted += node.cover * node.prediction;
    }
    return total > 0 ? weighted / total : nodes_.front().prediction;
}

Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const double> weights,
              const TreeParams& params, Rng& rng) {
    if (X.rows() == 0 || X.cols() == 0) throw FitError("cannot fit a tree on empty input");
    if (y.size() != X.rows() || weights.size() != X.rows()) {
        throw FitError(fmt::format("{} rows, {} targets, {} weights", X.rows(), y.size(), weights.size()));
    }
    if (params.max_depth < 1 || params.min_samples_leaf < 1 || params.mtry < 1) {
        throw FitError("tree params need max_depth, min_samples_leaf and mtry >= 1");
    }
    std::vector<std::size_t> rows;
    double total = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        if (!(weights[i] >= 0) || !std::isfinite(weights[i])) throw FitError("weights must be finite and >= 0");
        if (!std::isfinite(y[i])) throw FitError(fmt::format("target {} is not finite", i));
        if (weights[i] > 0) {
            rows.push_back(i);
            total += weights[i];
        }
    }
    if (rows.empty() || !(total > 0)) throw FitError("weights sum to zero");
    for (auto r : rows) {
        for (double v : X.row(r)) {
            if (!std::isfinite(v)) throw FitError(fmt::format("row {} has a non-finite feature", r));
        }
    }
    Builder builder(X, y, weights, params, rng);
    return Tree(builder.build(std::move(rows)), params);
}

nlohmann::json to_json(const TreeParams& params) {
    return {{"max_depth", params.max_depth},
            {"min_samples_leaf", params.min_samples_leaf},
            {"mtry", params.mtry},
            {"criterion", params.criterion == SplitCriterion::Gini ? "gini" : "variance"}};
}

TreeParams tree_params_from_json(const nlohmann::json& j) {
    try {
        TreeParams p;
        p.max_depth = j.at("max_depth").get<int>();
        p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
        p.mtry = j.at("mtry").get<int>();
        const auto c = j.at("criterion").get<std::string>();
        if (c == "gini") p.criterion = SplitCriterion::Gini;
        else if (c == "variance") p.criterion = SplitCriterion::VarianceReduction;
        else throw ModelFormatError(fmt::format("unknown criterion '{}'", c));
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("tree params: ") + e.what());
    }
}

nlohmann::json to_json(const Tree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
        const auto& n = tree.nodes()[i];
        nlohmann::json node = {{"id", i},
                               {"kind", n.is_leaf() ? "leaf" : "split"},
                               {"feature", n.feature},
                               {"threshold", n.threshold},
                               {"left", n.left},
                               {"right", n.right},
                               {"prediction", n.prediction},
                               {"n_train", n.n_train},
                               {"cover", n.cover}};
        if (tree.params().criterion == SplitCriterion::Gini) {
            node["class_counts"] = {n.class_counts[0], n.class_counts[1]};
        }
        nodes.push_back(std::move(node));
    }
    return {{"params", to_json(tree.params())}, {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const nlohmann::json& j) {
    try {
        const TreeParams params = tree_params_from_json(j.at("params"));
        std::vector<TreeNode> nodes;
        for (const auto& item : j.at("nodes")) {
            if (item.at("id").get<std::size_t>() != nodes.size()) {
                throw ModelFormatError("tree nodes must be listed in id order");
            }
            TreeNode n;
            const auto kind = item.at("kind").get<std::string>();
            n.prediction = item.at("prediction").get<double>();
            n.n_train = item.at("n_train").get<int>();
            n.cover = item.at("cover").get<double>();
            if (item.contains("class_counts")) {
                n.class_counts = {item["class_counts"][0].get<std::int64_t>(),
                                  item["class_counts"][1].get<std::int64_t>()};
            }
            if (kind == "split") {
                n.feature = item.at("feature").get<int>();
                n.threshold = item.at("threshold").get<double>();
                n.left = item.at("left").get<int>();
                n.right = item.at("right").get<int>();
                if (n.feature < 0) throw ModelFormatError("split node with negative feature");
            } else if (kind != "leaf") {
                throw ModelFormatError(fmt::format("unknown node kind '{}'", kind));
            }
            nodes.push_back(n);
        }
        return Tree(std::move(nodes), params);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("tree: ") + e.what());
    }
}

}  // namespace spreadscope
