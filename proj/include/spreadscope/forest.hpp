#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spreadscope/data.hpp"
#include "spreadscope/tree.hpp"

namespace spreadscope {

struct ForestOptions {
    int n_trees = 500;
    int mtry = 6;
    TreeParams tree{12, 5, 6, SplitCriterion::Gini};
    std::uint64_t seed = 0;
    bool bootstrap = true;  // false fits every tree on the full sample
    int n_threads = 1;
};

struct ForestModel {
    std::vector<Tree> trees;
    int mtry = 6;
    std::uint64_t seed = 0;
    bool bootstrap = true;
    TreeParams params;
    std::vector<std::string> feature_names;

    std::size_t size() const { return trees.size(); }
};

enum class Voting { MeanProbability, HardVote };

struct ClassPrediction {
    double score = 0;
    int label = 0;
};

/// Bagged Gini trees. Tree i draws its bootstrap sample and its per-node
/// feature subsets from stream child_seed(seed, i), so the model does not
/// depend on the number of threads.
ForestModel fit_forest(const Matrix& X, std::span<const int> y, std::vector<std::string> feature_names,
                       const ForestOptions& options);
ForestModel fit_forest(const Dataset& train, const ForestOptions& options);

/// Mean of the per-tree leaf probabilities (or the share of trees voting 1
/// under HardVote); label is 1 iff score >= threshold.
ClassPrediction predict_forest(const ForestModel& model, std::span<const double> x,
                               double threshold = 0.5, Voting voting = Voting::MeanProbability);

nlohmann::json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace spreadscope
