#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spreadscope/data.hpp"
#include "spreadscope/lift.hpp"
#include "spreadscope/model.hpp"

namespace spreadscope {

enum class Op { LE, GT };

struct Condition {
    std::size_t feature = 0;
    Op op = Op::LE;
    double threshold = 0.0;

    bool holds(std::span<const double> x) const { return op == Op::LE ? x[feature] <= threshold : x[feature] > threshold; }
    friend bool operator==(const Condition&, const Condition&) = default;
};

struct RuleMetrics {
    std::size_t length = 0;
    double support = 0.0;
    double error = 0.0;
    double lift = 0.0;
    std::size_t matches = 0;  // rows satisfying the conditions
    std::size_t errors = 0;   // matching rows whose target differs from the prediction
};

struct Rule {
    std::size_t id = 0;  // 1-based position after dedup
    std::vector<Condition> conditions;
    int prediction = 0;
    std::size_t tree = 0;  // source tree and leaf node
    int leaf = -1;
    std::optional<RuleMetrics> metrics;  // empty until scored, and for zero-support rules
    bool zero_support = false;

    bool matches(std::span<const double> x) const;
};

struct RuleSet {
    std::vector<Rule> rules;
    std::vector<std::string> feature_names;
    std::string model;       // "rf" or "gbm"
    std::string population;  // what the metrics were computed on
    std::size_t dropped = 0;     // contradictory rules removed by canonicalization
    std::size_t duplicates = 0;  // rules removed by dedup
};

/// One rule per leaf in depth-first order, "<=" branch first. Regression
/// leaves map to class 1 iff value > 0, probability leaves iff >= 0.5.
std::vector<Rule> tree_rules(const Tree& tree, bool regression_leaves, std::size_t tree_index = 0);

/// Forest leaves predict 1 iff probability >= 0.5, boosting leaves iff value > 0.
RuleSet extract_rules(const AnyModel& model);

/// Per feature keeps the smallest "<=" and the largest ">" threshold, sorts by
/// (feature, op). Returns nullopt (and the reason, when asked) if the merged
/// interval is empty.
std::optional<Rule> canonicalize(const Rule& rule, std::string* reason = nullptr);

/// Canonicalizes every rule, then drops later copies of a rule with the same
/// conditions and prediction, and numbers the survivors.
RuleSet canonicalize_and_dedup(RuleSet rules);

Mask rule_mask(const Rule& rule, const Matrix& X);

/// Support, error and lift on `ds`. Throws LiftError when ds has no positives.
void score_rules(RuleSet& rules, const Dataset& ds, std::string population = "full");

enum class RankCriterion { MaxSupport, MaxLift };

/// Scored, nonzero-support rules in ranked order; top_k = 0 keeps all.
std::vector<Rule> rank_rules(std::span<const Rule> rules, RankCriterion criterion, std::size_t top_k,
                             std::span<const std::string> names);

/// Keeps the rules that mention at least one of `features`.
std::vector<Rule> filter_by_features(std::span<const Rule> rules, std::span<const std::size_t> features);

/// "Y2-M6<=-0.145 & Y20-M3>0.79"; a rule without conditions prints "TRUE".
std::string format_conditions(const Rule& rule, std::span<const std::string> names);

/// "small", "average" or "big": the nearest of min, mean and max; ties with
/// the mean go to "average".
std::string threshold_label(double threshold, const ColumnStats& stats);

/// Plain-language reading of a rule. Throws LabelError for a feature missing from stats.
std::string describe_rule(const Rule& rule, std::span<const std::string> names, const StatsTable& stats);

struct Episode {
    YearMonth first;
    YearMonth last;
};

/// Maximal runs of consecutive months with target 1.
std::vector<Episode> recession_episodes(const Dataset& ds);

struct RuleHits {
    std::vector<YearMonth> months;
    std::vector<int> target;
    std::vector<Episode> episodes;  // recession episodes containing at least one hit month with target 1
};

RuleHits rule_hits(const Rule& rule, const Dataset& ds);

/// rule_id,conditions,prediction,error,length,support,lift,matches,hit_months,zero_support
/// where hit_months counts matching recession months.
void write_rules_csv(std::ostream& out, std::span<const Rule> rules, std::span<const std::string> names,
                     const Dataset& ds);
/// The same columns prefixed by rank.
void write_ranked_csv(std::ostream& out, std::span<const Rule> ranked, std::span<const std::string> names,
                      const Dataset& ds);
/// rule_id,date,target per hit month.
void write_hits_csv(std::ostream& out, std::span<const Rule> ranked, const Dataset& ds);

}  // namespace spreadscope
