#include "spreadscope/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

namespace {

/// log(1 + e^f) without overflow.
double softplus(double f) { return std::max(f, 0.0) + std::log1p(std::exp(-std::abs(f))); }

double stage_loss(std::span<const int> y, std::span<const double> margin, std::span<const double> h,
                  double rho) {
    double total = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double f = margin[i] + rho * h[i];
        total += softplus(f) - y[i] * f;
    }
    return total;
}

Tree with_newton_leaves(const Tree& tree, const Matrix& X, std::span<const double> grad,
                        std::span<const double> hess, double lambda) {
    std::vector<double> g(tree.nodes().size(), 0.0), h(tree.nodes().size(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto leaf = static_cast<std::size_t>(tree.leaf_index(X.row(i)));
        g[leaf] += grad[i];
        h[leaf] += hess[i];
    }
    auto nodes = tree.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].is_leaf()) nodes[k].prediction = g[k] / (h[k] + lambda);
    }
    return Tree(std::move(nodes), tree.params());
}

const char* step_name(StepMode m) { return m == StepMode::Newton ? "newton" : "line_search"; }

}  // namespace

double sigmoid(double margin) {
    if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

double binomial_deviance(std::span<const int> y, std::span<const double> margin) {
    double total = 0;
    for (std::size_t i = 0; i < y.size(); ++i) total += softplus(margin[i]) - y[i] * margin[i];
    return 2.0 * total;
}

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double best = lo;
    double best_value = f(lo);
    for (double x : {0.5 * (a + b), hi}) {
        const double v = f(x);
        if (v < best_value) {
            best = x;
            best_value = v;
        }
    }
    return best;
}

GbmFit fit_gbm(const Matrix& X, std::span<const int> y, std::vector<std::string> feature_names,
               const GbmOptions& options) {
    if (options.n_iter < 0) throw FitError("iteration count must be >= 0");
    if (!(options.shrinkage > 0.0 && options.shrinkage <= 1.0)) throw FitError("shrinkage must lie in (0, 1]");
    if (X.rows() == 0 || y.size() != X.rows()) throw FitError("boosting training data is empty or misaligned");
    const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (positives == 0 || positives == y.size()) throw FitError("boosting training target has a single class");

    const std::size_t n = X.rows();
    const double base_rate = static_cast<double>(positives) / static_cast<double>(n);

    GbmFit fit;
    GbmModel& model = fit.model;
    model.f0 = std::log(base_rate / (1.0 - base_rate));
    model.shrinkage = options.shrinkage;
    model.seed = options.seed;
    model.step = options.step;
    model.lambda = options.lambda;
    model.feature_names = std::move(feature_names);

    TreeParams params = options.tree;
    params.criterion = SplitCriterion::VarianceReduction;

    std::vector<double> margin(n, model.f0), grad(n), hess(n), h(n);
    const std::vector<double> ones(n, 1.0);
    fit.trace.deviance.push_back(binomial_deviance(y, margin));

    for (int t = 1; t <= options.n_iter; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = y[i] - p;
            hess[i] = p * (1.0 - p);
        }
        Rng rng(child_seed(options.seed, static_cast<std::uint64_t>(t)));
        Tree tree = fit_tree(X, grad, ones, params, rng);

        double rho = 1.0;
        if (options.step == StepMode::Newton) {
            tree = with_newton_leaves(tree, X, grad, hess, options.lambda);
            for (std::size_t i = 0; i < n; ++i) h[i] = tree.predict(X.row(i));
        } else {
            for (std::size_t i = 0; i < n; ++i) h[i] = tree.predict(X.row(i));
            rho = golden_section_minimize(
                [&](double r) { return stage_loss(y, margin, h, r); }, 0.0, options.rho_max,
                options.line_search_tol);
        }
        if (!std::isfinite(rho)) throw NumericError(fmt::format("iteration {}: step size is not finite", t));

        const double scale = options.shrinkage * rho;
        for (std::size_t i = 0; i < n; ++i) margin[i] += scale * h[i];
        const double dev = binomial_deviance(y, margin);
        if (!std::isfinite(dev)) throw NumericError(fmt::format("iteration {}: deviance is not finite", t));
        fit.trace.deviance.push_back(dev);
        model.stages.push_back({std::move(tree), rho});
    }
    return fit;
}

GbmFit fit_gbm(const Dataset& train, const GbmOptions& options) {
    return fit_gbm(train.features, train.target, train.feature_names, options);
}

MarginPrediction predict_gbm(const GbmModel& model, std::span<const double> x, double threshold) {
    if (!model.feature_names.empty() && x.size() != model.feature_names.size()) {
        throw PredictError(fmt::format("expected {} features, got {}", model.feature_names.size(), x.size()));
    }
    MarginPrediction out;
    out.margin = model.f0;
    for (const auto& stage : model.stages) {
        out.margin += model.shrinkage * stage.rho * stage.tree.predict(x);
    }
    out.score = sigmoid(out.margin);
    out.label = out.score >= threshold ? 1 : 0;
    return out;
}

nlohmann::json to_json(const GbmModel& model) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : model.stages) stages.push_back({{"rho", s.rho}, {"tree", to_json(s.tree)}});
    return {{"kind", "gbm"},
            {"f0", model.f0},
            {"nu", model.shrinkage},
            {"M", model.stages.size()},
            {"loss", "logistic_deviance"},
            {"step", step_name(model.step)},
            {"lambda", model.lambda},
            {"seed", model.seed},
            {"feature_names", model.feature_names},
            {"stages", std::move(stages)}};
}

GbmModel gbm_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "gbm") throw ModelFormatError("model kind is not gbm");
        if (j.at("loss").get<std::string>() != "logistic_deviance") {
            throw ModelFormatError("unsupported loss");
        }
        GbmModel m;
        m.f0 = j.at("f0").get<double>();
        m.shrinkage = j.at("nu").get<double>();
        m.seed = j.value("seed", std::uint64_t{0});
        m.lambda = j.value("lambda", 1.0);
        m.step = j.value("step", std::string("line_search")) == "newton" ? StepMode::Newton : StepMode::LineSearch;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& s : j.at("stages")) {
            m.stages.push_back({tree_from_json(s.at("tree")), s.at("rho").get<double>()});
        }
        if (m.stages.size() != j.at("M").get<std::size_t>()) {
            throw ModelFormatError("gbm M does not match the number of stages");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("gbm: ") + e.what());
    }
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
    out << "iteration,deviance\n";
    for (std::size_t t = 0; t < trace.deviance.size(); ++t) {
        out << t << ',' << text::number(trace.deviance[t]) << '\n';
    }
}

}  // namespace spreadscope
