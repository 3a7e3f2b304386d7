#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spreadscope/data.hpp"
#include "spreadscope/tree.hpp"

namespace spreadscope {

/// How each stage's contribution is scaled.
enum class StepMode {
    LineSearch,  // one global rho per stage minimizing the training loss
    Newton,      // per-leaf G / (H + lambda), rho fixed at 1
};

struct GbmOptions {
    int n_iter = 300;
    double shrinkage = 0.1;
    TreeParams tree{6, 5, 36, SplitCriterion::VarianceReduction};
    std::uint64_t seed = 0;
    StepMode step = StepMode::LineSearch;
    double lambda = 1.0;
    double rho_max = 8.0;
    double line_search_tol = 1e-6;
};

struct GbmStage {
    Tree tree;
    double rho = 1.0;
};

/// margin(x) = f0 + sum_t shrinkage * rho_t * tree_t(x), in log-odds.
struct GbmModel {
    double f0 = 0.0;
    std::vector<GbmStage> stages;
    double shrinkage = 0.1;
    std::uint64_t seed = 0;
    StepMode step = StepMode::LineSearch;
    double lambda = 1.0;
    std::vector<std::string> feature_names;
};

struct TrainTrace {
    std::vector<double> deviance;  // entry t is the training deviance after t stages
};

struct GbmFit {
    GbmModel model;
    TrainTrace trace;
};

struct MarginPrediction {
    double margin = 0;
    double score = 0;
    int label = 0;
};

double sigmoid(double margin);

/// Binomial deviance 2 * sum [log(1 + e^f) - y f].
double binomial_deviance(std::span<const int> y, std::span<const double> margin);

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
/// The endpoints are compared against the bracketed optimum and the lowest
/// value wins, preferring the smaller argument on ties.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Gradient boosting on logistic deviance. Stage t fits a variance-reduction
/// tree to y - sigmoid(F), picks rho_t by line search on [0, rho_max] and
/// adds shrinkage * rho_t * tree to F.
GbmFit fit_gbm(const Matrix& X, std::span<const int> y, std::vector<std::string> feature_names,
               const GbmOptions& options);
GbmFit fit_gbm(const Dataset& train, const GbmOptions& options);

MarginPrediction predict_gbm(const GbmModel& model, std::span<const double> x, double threshold = 0.5);

nlohmann::json to_json(const GbmModel& model);
GbmModel gbm_from_json(const nlohmann::json& j);
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

}  // namespace spreadscope
