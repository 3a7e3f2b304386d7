#include "spreadscope/forest.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/parallel.hpp"

namespace spreadscope {

namespace {

Tree fit_member(const Matrix& X, std::span<const double> y, const ForestOptions& options,
                std::uint64_t index) {
    Rng rng(child_seed(options.seed, index));
    std::vector<double> weights(X.rows(), options.bootstrap ? 0.0 : 1.0);
    if (options.bootstrap) {
        for (std::size_t k = 0; k < X.rows(); ++k) weights[uniform_index(rng, X.rows())] += 1.0;
    }
    return fit_tree(X, y, weights, options.tree, rng);
}

}  // namespace

ForestModel fit_forest(const Matrix& X, std::span<const int> y, std::vector<std::string> feature_names,
                       const ForestOptions& options) {
    if (options.n_trees < 1) throw FitError("forest needs at least one tree");
    if (X.rows() == 0 || y.size() != X.rows()) throw FitError("forest training data is empty or misaligned");
    const auto positives = std::count(y.begin(), y.end(), 1);
    if (positives == 0 || positives == static_cast<long>(y.size())) {
        throw FitError("forest training target has a single class");
    }
    std::vector<double> yd(y.begin(), y.end());

    ForestOptions opts = options;
    opts.tree.criterion = SplitCriterion::Gini;
    opts.tree.mtry = options.mtry;

    std::vector<Tree> trees(static_cast<std::size_t>(opts.n_trees));
    parallel_for(trees.size(), opts.n_threads,
                 [&](std::size_t i) { trees[i] = fit_member(X, yd, opts, static_cast<std::uint64_t>(i)); });

    ForestModel model;
    model.trees = std::move(trees);
    model.mtry = opts.mtry;
    model.seed = opts.seed;
    model.bootstrap = opts.bootstrap;
    model.params = opts.tree;
    model.feature_names = std::move(feature_names);
    return model;
}

ForestModel fit_forest(const Dataset& train, const ForestOptions& options) {
    return fit_forest(train.features, train.target, train.feature_names, options);
}

ClassPrediction predict_forest(const ForestModel& model, std::span<const double> x, double threshold,
                               Voting voting) {
    if (model.trees.empty()) throw PredictError("forest has no trees");
    if (!model.feature_names.empty() && x.size() != model.feature_names.size()) {
        throw PredictError(fmt::format("expected {} features, got {}", model.feature_names.size(), x.size()));
    }
    double sum = 0;
    for (const auto& tree : model.trees) {
        const double p = tree.predict(x);
        sum += voting == Voting::HardVote ? (p >= 0.5 ? 1.0 : 0.0) : p;
    }
    ClassPrediction out;
    out.score = sum / static_cast<double>(model.trees.size());
    out.label = out.score >= threshold ? 1 : 0;
    return out;
}

nlohmann::json to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(to_json(t));
    return {{"kind", "forest"},
            {"seed", model.seed},
            {"B", model.trees.size()},
            {"mtry", model.mtry},
            {"bootstrap", model.bootstrap},
            {"params", to_json(model.params)},
            {"feature_names", model.feature_names},
            {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "forest") throw ModelFormatError("model kind is not forest");
        ForestModel m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.mtry = j.at("mtry").get<int>();
        m.bootstrap = j.value("bootstrap", true);
        m.params = tree_params_from_json(j.at("params"));
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        if (m.trees.size() != j.at("B").get<std::size_t>()) {
            throw ModelFormatError("forest B does not match the number of trees");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("forest: ") + e.what());
    }
}

}  // namespace spreadscope
