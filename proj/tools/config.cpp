#include "config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace spreadscope::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void only_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
    }
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}.{} has the wrong type", where, key));
    }
}

template <class T>
void read(const json& obj, const std::string& key, const std::string& where, T& target) {
    if (obj.contains(key)) target = get<T>(obj, key, where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

MonthWindow window(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) {
        throw ConfigError(fmt::format("{} must be [\"YYYY-MM\", \"YYYY-MM\"]", where));
    }
    try {
        return {YearMonth::parse(v[0].get<std::string>()), YearMonth::parse(v[1].get<std::string>())};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
}

void check_tenor(const std::string& name, const std::string& where) {
    if (!tenor_from_series(name)) throw ConfigError(fmt::format("{}: \"{}\" is not a tenor", where, name));
}

void read_tree(const json& obj, const std::string& where, TreeParams& tree) {
    read(obj, "max_depth", where, tree.max_depth);
    read(obj, "min_samples_leaf", where, tree.min_samples_leaf);
    if (tree.max_depth < 1) throw ConfigError(where + ".max_depth must be >= 1");
    if (tree.min_samples_leaf < 1) throw ConfigError(where + ".min_samples_leaf must be >= 1");
}

}  // namespace

std::string kind_name(ModelKind kind) { return kind == ModelKind::Forest ? "rf" : "gbm"; }

ModelKind parse_kind(const std::string& text) {
    if (text == "rf" || text == "forest") return ModelKind::Forest;
    if (text == "gbm" || text == "xgb") return ModelKind::Gbm;
    throw ConfigError(fmt::format("unknown model kind \"{}\" (expected rf or gbm)", text));
}

RunConfig parse_config(const json& doc, const fs::path& base) {
    RunConfig c;
    only_keys(doc, "config", {"data", "split", "model", "seed", "threads", "threshold", "out", "model_file",
                              "explain", "rules", "lift"});

    if (doc.contains("data")) {
        const auto& d = doc["data"];
        only_keys(d, "data", {"yields", "series", "recession", "dataset", "fetch"});
        if (d.contains("yields")) c.data.yields = resolve(base, get<std::string>(d, "yields", "data"));
        if (d.contains("recession")) c.data.recession = resolve(base, get<std::string>(d, "recession", "data"));
        if (d.contains("dataset")) c.data.dataset = resolve(base, get<std::string>(d, "dataset", "data"));
        if (d.contains("series")) {
            for (const auto& [tenor, path] : get<std::map<std::string, std::string>>(d, "series", "data")) {
                check_tenor(tenor, "data.series");
                c.data.series[tenor] = resolve(base, path);
            }
        }
        if (d.contains("fetch")) {
            const auto& f = d["fetch"];
            only_keys(f, "data.fetch", {"enabled", "series", "recession_series", "endpoint", "cache_dir"});
            read(f, "enabled", "data.fetch", c.data.fetch);
            read(f, "recession_series", "data.fetch", c.data.recession_series);
            read(f, "endpoint", "data.fetch", c.data.endpoint);
            if (f.contains("cache_dir")) c.data.cache_dir = resolve(base, get<std::string>(f, "cache_dir", "data.fetch"));
            if (f.contains("series")) {
                c.data.fetch_series = get<std::map<std::string, std::string>>(f, "series", "data.fetch");
                for (const auto& [tenor, _] : c.data.fetch_series) check_tenor(tenor, "data.fetch.series");
            }
        }
    }

    if (doc.contains("split")) {
        const auto& s = doc["split"];
        only_keys(s, "split", {"train", "test"});
        if (s.contains("train")) c.train = window(s["train"], "split.train");
        if (s.contains("test")) c.test = window(s["test"], "split.test");
    }

    if (doc.contains("model")) {
        const auto& m = doc["model"];
        only_keys(m, "model", {"kind", "gbm", "rf"});
        if (m.contains("kind")) c.kind = parse_kind(get<std::string>(m, "kind", "model"));
        if (m.contains("gbm")) {
            const auto& g = m["gbm"];
            only_keys(g, "model.gbm", {"n_iter", "shrinkage", "max_depth", "min_samples_leaf", "mtry", "step", "lambda"});
            read(g, "n_iter", "model.gbm", c.gbm.n_iter);
            read(g, "shrinkage", "model.gbm", c.gbm.shrinkage);
            read(g, "mtry", "model.gbm", c.gbm.tree.mtry);
            read(g, "lambda", "model.gbm", c.gbm.lambda);
            read_tree(g, "model.gbm", c.gbm.tree);
            if (g.contains("step")) {
                const auto step = get<std::string>(g, "step", "model.gbm");
                if (step == "line_search") c.gbm.step = StepMode::LineSearch;
                else if (step == "newton") c.gbm.step = StepMode::Newton;
                else throw ConfigError("model.gbm.step must be line_search or newton");
            }
            if (c.gbm.n_iter < 0) throw ConfigError("model.gbm.n_iter must be >= 0");
            if (!(c.gbm.shrinkage > 0 && c.gbm.shrinkage <= 1)) throw ConfigError("model.gbm.shrinkage must lie in (0, 1]");
        }
        if (m.contains("rf")) {
            const auto& r = m["rf"];
            only_keys(r, "model.rf", {"n_trees", "mtry", "max_depth", "min_samples_leaf", "bootstrap"});
            read(r, "n_trees", "model.rf", c.forest.n_trees);
            read(r, "mtry", "model.rf", c.forest.mtry);
            read(r, "bootstrap", "model.rf", c.forest.bootstrap);
            read_tree(r, "model.rf", c.forest.tree);
            if (c.forest.n_trees < 1) throw ConfigError("model.rf.n_trees must be >= 1");
        }
    }

    if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed", "config");
    read(doc, "threads", "config", c.threads);
    read(doc, "threshold", "config", c.threshold);
    if (doc.contains("out")) c.out = resolve(base, get<std::string>(doc, "out", "config"));
    if (doc.contains("model_file")) c.model_file = resolve(base, get<std::string>(doc, "model_file", "config"));

    if (doc.contains("explain")) {
        const auto& e = doc["explain"];
        only_keys(e, "explain", {"top_k", "span", "svg", "engine", "enumeration_cap"});
        read(e, "top_k", "explain", c.explain.top_k);
        read(e, "span", "explain", c.explain.span);
        read(e, "svg", "explain", c.explain.svg);
        read(e, "enumeration_cap", "explain", c.explain.shap.enumeration_cap);
        if (e.contains("engine")) {
            const auto engine = get<std::string>(e, "engine", "explain");
            if (engine == "path") c.explain.shap.engine = ShapEngine::PathDependent;
            else if (engine == "enumerate") c.explain.shap.engine = ShapEngine::Enumeration;
            else throw ConfigError("explain.engine must be path or enumerate");
        }
        if (!(c.explain.span > 0 && c.explain.span <= 1)) throw ConfigError("explain.span must lie in (0, 1]");
    }
    if (doc.contains("rules")) {
        const auto& r = doc["rules"];
        only_keys(r, "rules", {"top_k", "shap_filter", "filter_top"});
        read(r, "top_k", "rules", c.rules.top_k);
        read(r, "shap_filter", "rules", c.rules.shap_filter);
        read(r, "filter_top", "rules", c.rules.filter_top);
    }
    if (doc.contains("lift")) {
        const auto& l = doc["lift"];
        only_keys(l, "lift", {"features", "use_model", "population"});
        read(l, "features", "lift", c.lift.features);
        read(l, "use_model", "lift", c.lift.use_model);
        read(l, "population", "lift", c.lift.population);
        if (c.lift.population != "full" && c.lift.population != "train" && c.lift.population != "test") {
            throw ConfigError("lift.population must be full, train or test");
        }
        for (const auto& f : c.lift.features) {
            if (!spread_index(f)) throw ConfigError(fmt::format("lift.features: unknown spread \"{}\"", f));
        }
    }
    if (c.threads < 1) throw ConfigError("threads must be >= 1");
    if (!(c.threshold > 0 && c.threshold < 1)) throw ConfigError("threshold must lie in (0, 1)");
    return c;
}

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", file.string()));
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config file {} is not valid JSON: {}", file.string(), e.what()));
    }
    return parse_config(doc, file.parent_path());
}

}  // namespace spreadscope::cli
