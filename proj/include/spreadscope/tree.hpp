#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "spreadscope/matrix.hpp"
#include "spreadscope/rng.hpp"

namespace spreadscope {

enum class SplitCriterion { Gini, VarianceReduction };

struct TreeParams {
    int max_depth = 6;
    int min_samples_leaf = 5;
    int mtry = 36;  // features drawn per node; >= column count disables sampling
    SplitCriterion criterion = SplitCriterion::VarianceReduction;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Internal nodes route `x[feature] <= threshold` to `left`, else `right`.
/// Every node keeps its training statistics; `prediction` of an internal
/// node is the value it would predict as a leaf.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;
    int n_train = 0;      // distinct training rows reaching the node
    double cover = 0.0;   // sum of training weights reaching the node
    std::array<std::int64_t, 2> class_counts{};  // Gini trees only

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Immutable binary tree; node 0 is the root.
class Tree {
public:
    Tree();  // single leaf predicting 0
    /// Validates that the nodes form one tree rooted at 0 (throws ModelFormatError).
    Tree(std::vector<TreeNode> nodes, TreeParams params);

    static Tree leaf(double prediction, double cover = 1.0, int n_train = 1);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const TreeParams& params() const { return params_; }

    /// Throws PredictError when x is too short or a routed value is not finite.
    int leaf_index(std::span<const double> x) const;
    double predict(std::span<const double> x) const { return node(leaf_index(x)).prediction; }

    std::size_t leaf_count() const;
    int depth() const;
    /// Sorted distinct split features.
    std::vector<int> used_features() const;
    /// Largest referenced feature index, or -1 for a stump-free tree.
    int max_feature() const { return max_feature_; }
    /// Cover-weighted mean of the leaf predictions.
    double expected_value() const;

    friend bool operator==(const Tree& a, const Tree& b) {
        return a.nodes_ == b.nodes_ && a.params_ == b.params_;
    }

private:
    std::vector<TreeNode> nodes_;
    TreeParams params_;
    int max_feature_ = -1;
};

/// Greedy CART growth. At each node `mtry` features are drawn without
/// replacement from `rng`; every midpoint between consecutive distinct
/// values is scored and the best improvement wins, ties going to the lower
/// feature index and then the lower threshold. Rows with zero weight are
/// ignored. Leaves predict the weighted positive share (Gini) or the
/// weighted mean of y (variance reduction).
Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const double> weights,
              const TreeParams& params, Rng& rng);

nlohmann::json to_json(const TreeParams& params);
TreeParams tree_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);

}  // namespace spreadscope
