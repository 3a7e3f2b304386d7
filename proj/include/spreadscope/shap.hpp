#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spreadscope/data.hpp"
#include "spreadscope/model.hpp"

namespace spreadscope {

/// Value function shared by both engines: features outside S are
/// marginalized by descending into both children weighted by training
/// cover; features in S follow x.
double conditional_expectation(const Tree& tree, std::span<const double> x, std::span<const std::uint8_t> in_s);

enum class ShapEngine {
    PathDependent,  // polynomial-time recursion over the root-to-leaf paths
    Enumeration,    // all subsets of the features the tree uses
};

struct ShapOptions {
    ShapEngine engine = ShapEngine::PathDependent;
    int enumeration_cap = 20;  // distinct features per tree the Enumeration engine accepts
    int n_threads = 1;
};

/// Attributions of one tree at x, length n_features.
std::vector<double> tree_shap(const Tree& tree, std::span<const double> x, std::size_t n_features,
                              const ShapOptions& options = {});

struct ShapMatrix {
    Matrix values;  // n x features
    double base_value = 0.0;
    std::vector<YearMonth> dates;
    std::vector<std::string> feature_names;
    std::string unit;  // "margin" for boosting, "probability" for forests
};

/// base_value + row sum = model output, for every row. Expectations use the
/// training covers stored in the trees.
ShapMatrix shap_values(const EnsembleView& model, const Dataset& ds, const ShapOptions& options = {});
ShapMatrix shap_values(const AnyModel& model, const Dataset& ds, const ShapOptions& options = {});

struct ImportanceEntry {
    std::size_t feature = 0;
    std::string name;
    double mean_abs = 0.0;
    int rank = 0;  // 1-based
};

/// Mean |phi| per column, descending; ties broken by feature name.
std::vector<ImportanceEntry> importance(const ShapMatrix& shap);

/// Local linear regression with tricube weights over the nearest
/// ceil(span * n) points, evaluated at every distinct x in ascending order.
std::vector<std::pair<double, double>> loess(std::span<const double> x, std::span<const double> y, double span);

struct DependencePoints {
    std::size_t feature = 0;
    std::string name;
    std::size_t partner = 0;
    std::string partner_name;
    std::vector<YearMonth> dates;
    std::vector<double> x;
    std::vector<double> phi;
    std::vector<double> partner_values;
    std::vector<std::pair<double, double>> smooth;
};

DependencePoints dependence(const ShapMatrix& shap, const Dataset& ds, std::size_t feature, const CorrMatrix& corr,
                            double span = 0.5);

struct SummaryPoint {
    std::size_t feature = 0;
    int rank = 0;
    YearMonth date;
    double phi = 0.0;
    double value = 0.0;
    double quantile = 0.0;  // mid-rank of value within its column scaled to [0, 1]
};

/// Every (instance, feature) pair, ordered by importance rank then row.
std::vector<SummaryPoint> contribution_summary(const ShapMatrix& shap, const Dataset& ds);

/// Scaled mid-ranks; a single value maps to 0.
std::vector<double> rank_quantiles(std::span<const double> values);

void write_shap_long_csv(std::ostream& out, const ShapMatrix& shap);
void write_shap_wide_csv(std::ostream& out, const ShapMatrix& shap);
/// Train and test rankings side by side, ordered by the test rank.
void write_importance_csv(std::ostream& out, std::span<const ImportanceEntry> train,
                          std::span<const ImportanceEntry> test);
void write_dependence_csv(std::ostream& out, const DependencePoints& dep);
void write_smooth_csv(std::ostream& out, const DependencePoints& dep);
void write_summary_csv(std::ostream& out, const ShapMatrix& shap, std::span<const SummaryPoint> points);

}  // namespace spreadscope
