#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spreadscope/boosting.hpp"
#include "spreadscope/data.hpp"
#include "spreadscope/forest.hpp"
#include "spreadscope/shap.hpp"

namespace spreadscope::cli {

/// Bad flags, bad config or unusable inputs: exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Forest, Gbm };

struct DataConfig {
    std::optional<std::filesystem::path> yields;           // wide panel CSV
    std::map<std::string, std::filesystem::path> series;   // tenor name -> per-series CSV
    std::optional<std::filesystem::path> recession;
    std::optional<std::filesystem::path> dataset;          // previously ingested dataset CSV
    bool fetch = false;
    std::map<std::string, std::string> fetch_series;       // tenor name -> FRED id
    std::string recession_series = "USREC";
    std::string endpoint;
    std::optional<std::filesystem::path> cache_dir;
};

struct ExplainConfig {
    std::size_t top_k = 6;
    double span = 0.5;
    bool svg = true;
    ShapOptions shap;
};

struct RulesConfig {
    std::size_t top_k = 5;
    bool shap_filter = true;
    std::size_t filter_top = 6;
};

struct LiftConfig {
    std::vector<std::string> features;  // empty: SHAP top-k with a model, else all
    bool use_model = false;
    std::string population = "full";   // full, train or test
};

struct RunConfig {
    DataConfig data;
    MonthWindow train{{1970, 1}, {1999, 12}};
    MonthWindow test{{2000, 1}, {2020, 11}};
    ModelKind kind = ModelKind::Gbm;
    GbmOptions gbm;
    ForestOptions forest;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    double threshold = 0.5;
    std::filesystem::path out = "out";
    std::optional<std::filesystem::path> model_file;
    ExplainConfig explain;
    RulesConfig rules;
    LiftConfig lift;
};

/// Relative paths in the document resolve against `base_dir`. Unknown keys
/// are rejected.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& file);

std::string kind_name(ModelKind kind);
ModelKind parse_kind(const std::string& text);

}  // namespace spreadscope::cli
