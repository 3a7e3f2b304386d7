#include "spreadscope/model.hpp"

#include <istream>
#include <ostream>

#include "spreadscope/error.hpp"

namespace spreadscope {

double EnsembleView::output(std::span<const double> x) const {
    double total = offset;
    for (const auto& t : trees) total += t.scale * t.tree->predict(x);
    return total;
}

EnsembleView ensemble_view(const AnyModel& model) {
    EnsembleView view;
    if (const auto* rf = std::get_if<ForestModel>(&model)) {
        view.unit = "probability";
        const double scale = 1.0 / static_cast<double>(rf->trees.size());
        for (const auto& t : rf->trees) view.trees.push_back({&t, scale});
    } else {
        const auto& gbm = std::get<GbmModel>(model);
        view.unit = "margin";
        view.offset = gbm.f0;
        for (const auto& s : gbm.stages) view.trees.push_back({&s.tree, gbm.shrinkage * s.rho});
    }
    return view;
}

const std::vector<std::string>& feature_names(const AnyModel& model) {
    return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.feature_names; }, model);
}

std::string model_kind(const AnyModel& model) { return std::holds_alternative<ForestModel>(model) ? "rf" : "gbm"; }

nlohmann::json to_json(const AnyModel& model) {
    return std::visit([](const auto& m) { return to_json(m); }, model);
}

AnyModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ModelFormatError("model file has no \"kind\"");
    const auto kind = j.at("kind");
    if (kind == "forest") return forest_from_json(j);
    if (kind == "gbm") return gbm_from_json(j);
    throw ModelFormatError("unknown model kind " + kind.dump());
}

AnyModel read_model(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

void write_model(std::ostream& out, const AnyModel& model) { out << to_json(model).dump(1) << '\n'; }

}  // namespace spreadscope
