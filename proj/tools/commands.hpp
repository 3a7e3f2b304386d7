#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "spreadscope/data.hpp"
#include "spreadscope/metrics.hpp"
#include "spreadscope/model.hpp"
#include "spreadscope/shap.hpp"

namespace spreadscope::cli {

/// Reads the configured inputs (files, or the fetch cache) into a dataset.
Dataset build_dataset(const RunConfig& config, std::vector<YearMonth>* rejected = nullptr);

void cmd_ingest(const RunConfig& config);

struct TrainResult {
    AnyModel model;
    MetricsReport test_metrics;
};
TrainResult cmd_train(const RunConfig& config);

struct ExplainResult {
    std::vector<ImportanceEntry> train;
    std::vector<ImportanceEntry> test;
};
ExplainResult cmd_explain(const RunConfig& config);

void cmd_rules(const RunConfig& config);
void cmd_lift(const RunConfig& config);
/// Ingest, train and explain both model kinds, rules and lift for the
/// configured kind, then a plain-text summary.
void cmd_report(const RunConfig& config);

}  // namespace spreadscope::cli
