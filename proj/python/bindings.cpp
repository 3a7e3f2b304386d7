#include <fstream>
#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spreadscope/boosting.hpp"
#include "spreadscope/data.hpp"
#include "spreadscope/error.hpp"
#include "spreadscope/forest.hpp"
#include "spreadscope/lift.hpp"
#include "spreadscope/model.hpp"
#include "spreadscope/shap.hpp"

namespace py = pybind11;
using namespace spreadscope;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    const auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        for (py::ssize_t j = 0; j < a.shape(1); ++j) m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = r(i, j);
    }
    return m;
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) w(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = m(i, j);
    }
    return out;
}

std::vector<std::string> default_names(std::size_t p, std::vector<std::string> names) {
    if (names.empty()) {
        for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }
    if (names.size() != p) throw py::value_error("feature_names length does not match the number of columns");
    return names;
}

Dataset as_dataset(const Matrix& X) {
    Dataset ds;
    ds.features = X;
    ds.target.assign(X.rows(), 0);
    for (std::size_t i = 0; i < X.rows(); ++i) ds.dates.push_back(YearMonth::from_ordinal(static_cast<int>(i)));
    return ds;
}

/// Holder so pybind11 does not unpack the variant into unregistered types.
struct PyModel {
    AnyModel model;
};

std::vector<double> scores(const AnyModel& model, const Matrix& X) {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto x = X.row(i);
        out[i] = std::holds_alternative<GbmModel>(model) ? predict_gbm(std::get<GbmModel>(model), x).score
                                                          : predict_forest(std::get<ForestModel>(model), x).score;
    }
    return out;
}

std::string file_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Term-spread recession models: trees, ensembles, SHAP and lift.";

    py::register_exception<Error>(m, "SpreadscopeError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("dates",
                               [](const Dataset& d) {
                                   std::vector<std::string> out;
                                   for (auto ym : d.dates) out.push_back(ym.str());
                                   return out;
                               })
        .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
        .def_readonly("target", &Dataset::target)
        .def_readonly("feature_names", &Dataset::feature_names)
        .def("__len__", &Dataset::size);

    m.def(
        "load_dataset",
        [](const std::string& yields, const std::string& recession) {
            std::istringstream yin(file_text(yields)), rin(file_text(recession));
            const auto parsed = parse_yield_csv(yin);
            return attach_target(parsed.panel.dates, compute_spreads(parsed.panel), rin);
        },
        py::arg("yields"), py::arg("recession"), "Reads a yields panel and a DATE,USREC file into the 36 spreads.");

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("kind", [](const PyModel& a) { return model_kind(a.model); })
        .def_property_readonly("feature_names", [](const PyModel& a) { return feature_names(a.model); })
        .def("predict_proba", [](const PyModel& a, const Array& X) { return scores(a.model, to_matrix(X)); }, py::arg("X"))
        .def(
            "margin",
            [](const PyModel& a, const Array& X) {
                const Matrix M = to_matrix(X);
                const auto view = ensemble_view(a.model);
                std::vector<double> out(M.rows());
                for (std::size_t i = 0; i < M.rows(); ++i) out[i] = view.output(M.row(i));
                return out;
            },
            py::arg("X"), "Raw ensemble output: log-odds for boosting, mean probability for forests.")
        .def(
            "shap_values",
            [](const PyModel& a, const Array& X) {
                const auto s = shap_values(a.model, as_dataset(to_matrix(X)));
                return py::make_tuple(to_array(s.values), s.base_value);
            },
            py::arg("X"), "Returns (attributions, base_value).")
        .def("to_json", [](const PyModel& a) { return to_json(a.model).dump(); })
        .def_static("from_json", [](const std::string& s) { return PyModel{model_from_json(nlohmann::json::parse(s))}; });

    m.def(
        "fit_gbm",
        [](const Array& X, const std::vector<int>& y, std::vector<std::string> names, int n_iter, double shrinkage,
           int max_depth, int min_samples_leaf, std::uint64_t seed) {
            const Matrix M = to_matrix(X);
            GbmOptions o;
            o.n_iter = n_iter;
            o.shrinkage = shrinkage;
            o.tree.max_depth = max_depth;
            o.tree.min_samples_leaf = min_samples_leaf;
            o.tree.mtry = static_cast<int>(M.cols());
            o.seed = seed;
            py::gil_scoped_release release;
            return PyModel{fit_gbm(M, y, default_names(M.cols(), std::move(names)), o).model};
        },
        py::arg("X"), py::arg("y"), py::arg("feature_names") = std::vector<std::string>{}, py::arg("n_iter") = 300,
        py::arg("shrinkage") = 0.1, py::arg("max_depth") = 6, py::arg("min_samples_leaf") = 5, py::arg("seed") = 0);

    m.def(
        "fit_forest",
        [](const Array& X, const std::vector<int>& y, std::vector<std::string> names, int n_trees, int mtry,
           int max_depth, int min_samples_leaf, std::uint64_t seed, int threads) {
            const Matrix M = to_matrix(X);
            ForestOptions o;
            o.n_trees = n_trees;
            o.mtry = mtry;
            o.tree.max_depth = max_depth;
            o.tree.min_samples_leaf = min_samples_leaf;
            o.seed = seed;
            o.n_threads = threads;
            py::gil_scoped_release release;
            return PyModel{fit_forest(M, y, default_names(M.cols(), std::move(names)), o)};
        },
        py::arg("X"), py::arg("y"), py::arg("feature_names") = std::vector<std::string>{}, py::arg("n_trees") = 500,
        py::arg("mtry") = 6, py::arg("max_depth") = 12, py::arg("min_samples_leaf") = 5, py::arg("seed") = 0,
        py::arg("threads") = 1);

    m.def(
        "lift", [](const std::vector<std::uint8_t>& mask, const std::vector<int>& target) { return lift(mask, target); },
        py::arg("mask"), py::arg("target"));

    m.def(
        "decile_lift",
        [](const std::vector<double>& values, const std::vector<int>& target) {
            std::vector<double> out;
            for (const auto& d : decile_lift(values, target).deciles) out.push_back(d.lift);
            return out;
        },
        py::arg("values"), py::arg("target"), "Lift of each rank decile, lowest values first.");
}
