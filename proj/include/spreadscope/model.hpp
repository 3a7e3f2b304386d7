#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "spreadscope/boosting.hpp"
#include "spreadscope/forest.hpp"

namespace spreadscope {

using AnyModel = std::variant<ForestModel, GbmModel>;

struct ScaledTree {
    const Tree* tree = nullptr;
    double scale = 1.0;
};

/// The model as offset + sum(scale * tree(x)). For a forest this is the mean
/// leaf probability; for boosting it is the margin.
struct EnsembleView {
    std::vector<ScaledTree> trees;
    double offset = 0.0;
    std::string unit;  // "probability" or "margin"

    double output(std::span<const double> x) const;
};

/// The view points into `model`, which must outlive it.
EnsembleView ensemble_view(const AnyModel& model);

const std::vector<std::string>& feature_names(const AnyModel& model);
/// "rf" or "gbm".
std::string model_kind(const AnyModel& model);

nlohmann::json to_json(const AnyModel& model);
/// Dispatches on the envelope's "kind".
AnyModel model_from_json(const nlohmann::json& j);
/// Throws ModelFormatError on malformed JSON.
AnyModel read_model(std::istream& in);
void write_model(std::ostream& out, const AnyModel& model);

}  // namespace spreadscope
