#include "spreadscope/rules.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

namespace {

void collect(const Tree& tree, int id, std::vector<Condition>& path, bool regression, std::size_t tree_index,
             std::vector<Rule>& out) {
    const TreeNode& n = tree.node(id);
    if (n.is_leaf()) {
        Rule r;
        r.conditions = path;
        r.prediction = regression ? (n.prediction > 0 ? 1 : 0) : (n.prediction >= 0.5 ? 1 : 0);
        r.tree = tree_index;
        r.leaf = id;
        out.push_back(std::move(r));
        return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    path.push_back({f, Op::LE, n.threshold});
    collect(tree, n.left, path, regression, tree_index, out);
    path.back().op = Op::GT;
    collect(tree, n.right, path, regression, tree_index, out);
    path.pop_back();
}

std::string feature_name(std::span<const std::string> names, std::size_t f) {
    return f < names.size() ? names[f] : fmt::format("x{}", f);
}

void write_rule_fields(std::ostream& out, const Rule& r, std::span<const std::string> names, const Dataset& ds) {
    std::size_t hit_months = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.target[i] == 1 && r.matches(ds.features.row(i))) ++hit_months;
    }
    out << r.id << ',' << format_conditions(r, names) << ',' << r.prediction << ',';
    if (r.metrics) {
        const auto& m = *r.metrics;
        out << text::fixed(m.error, 6) << ',' << m.length << ',' << text::fixed(m.support, 6) << ','
            << text::fixed(m.lift, 6) << ',' << m.matches;
    } else {
        out << "—," << r.conditions.size() << ",—,—,0";
    }
    out << ',' << hit_months << ',' << (r.zero_support ? 1 : 0) << '\n';
}

}  // namespace

bool Rule::matches(std::span<const double> x) const {
    return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(x); });
}

std::vector<Rule> tree_rules(const Tree& tree, bool regression_leaves, std::size_t tree_index) {
    std::vector<Rule> out;
    std::vector<Condition> path;
    collect(tree, 0, path, regression_leaves, tree_index, out);
    return out;
}

RuleSet extract_rules(const AnyModel& model) {
    RuleSet rs;
    rs.feature_names = feature_names(model);
    rs.model = model_kind(model);
    const bool regression = std::holds_alternative<GbmModel>(model);
    const auto view = ensemble_view(model);
    for (std::size_t t = 0; t < view.trees.size(); ++t) {
        auto rules = tree_rules(*view.trees[t].tree, regression, t);
        rs.rules.insert(rs.rules.end(), std::make_move_iterator(rules.begin()), std::make_move_iterator(rules.end()));
    }
    return rs;
}

std::optional<Rule> canonicalize(const Rule& rule, std::string* reason) {
    // feature -> (tightest upper bound, tightest lower bound)
    std::map<std::size_t, std::pair<std::optional<double>, std::optional<double>>> bounds;
    for (const auto& c : rule.conditions) {
        auto& [upper, lower] = bounds[c.feature];
        if (c.op == Op::LE) {
            upper = upper ? std::min(*upper, c.threshold) : c.threshold;
        } else {
            lower = lower ? std::max(*lower, c.threshold) : c.threshold;
        }
    }
    Rule out = rule;
    out.conditions.clear();
    for (const auto& [f, b] : bounds) {
        const auto& [upper, lower] = b;
        if (upper && lower && *upper <= *lower) {
            if (reason) {
                *reason = fmt::format("feature {} must be > {} and <= {}", f, text::compact(*lower), text::compact(*upper));
            }
            return std::nullopt;
        }
        if (upper) out.conditions.push_back({f, Op::LE, *upper});
        if (lower) out.conditions.push_back({f, Op::GT, *lower});
    }
    return out;
}

RuleSet canonicalize_and_dedup(RuleSet rules) {
    RuleSet out;
    out.feature_names = std::move(rules.feature_names);
    out.model = std::move(rules.model);
    out.population = std::move(rules.population);
    out.dropped = rules.dropped;
    out.duplicates = rules.duplicates;

    std::set<std::pair<std::vector<std::tuple<std::size_t, int, double>>, int>> seen;
    for (auto& r : rules.rules) {
        auto canon = canonicalize(r);
        if (!canon) {
            ++out.dropped;
            continue;
        }
        std::vector<std::tuple<std::size_t, int, double>> key;
        for (const auto& c : canon->conditions) key.emplace_back(c.feature, static_cast<int>(c.op), c.threshold);
        if (!seen.emplace(std::move(key), canon->prediction).second) {
            ++out.duplicates;
            continue;
        }
        canon->id = out.rules.size() + 1;
        out.rules.push_back(std::move(*canon));
    }
    return out;
}

Mask rule_mask(const Rule& rule, const Matrix& X) {
    Mask m(X.rows(), 0);
    for (std::size_t i = 0; i < X.rows(); ++i) m[i] = rule.matches(X.row(i)) ? 1 : 0;
    return m;
}

void score_rules(RuleSet& rules, const Dataset& ds, std::string population) {
    if (ds.size() == 0) throw LiftError("cannot score rules on an empty dataset");
    if (ds.positives() == 0) throw LiftError("cannot score rules on a dataset without positives");
    const double n = static_cast<double>(ds.size());
    for (auto& r : rules.rules) {
        const Mask mask = rule_mask(r, ds.features);
        RuleMetrics m;
        m.length = r.conditions.size();
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            ++m.matches;
            if (ds.target[i] != r.prediction) ++m.errors;
        }
        r.zero_support = m.matches == 0;
        if (r.zero_support) {
            r.metrics.reset();
            continue;
        }
        m.support = static_cast<double>(m.matches) / n;
        m.error = static_cast<double>(m.errors) / static_cast<double>(m.matches);
        m.lift = lift(mask, ds.target);
        r.metrics = m;
    }
    rules.population = std::move(population);
}

std::vector<Rule> rank_rules(std::span<const Rule> rules, RankCriterion criterion, std::size_t top_k,
                             std::span<const std::string> names) {
    struct Keyed {
        const Rule* rule;
        std::string text;
    };
    std::vector<Keyed> keyed;
    for (const auto& r : rules) {
        if (r.metrics) keyed.push_back({&r, format_conditions(r, names)});
    }
    std::sort(keyed.begin(), keyed.end(), [criterion](const Keyed& a, const Keyed& b) {
        const auto& ma = *a.rule->metrics;
        const auto& mb = *b.rule->metrics;
        if (criterion == RankCriterion::MaxLift && ma.lift != mb.lift) return ma.lift > mb.lift;
        if (ma.support != mb.support) return ma.support > mb.support;
        if (ma.length != mb.length) return ma.length < mb.length;
        if (a.text != b.text) return a.text < b.text;
        return a.rule->prediction < b.rule->prediction;
    });
    if (top_k != 0 && keyed.size() > top_k) keyed.resize(top_k);
    std::vector<Rule> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) out.push_back(*k.rule);
    return out;
}

std::vector<Rule> filter_by_features(std::span<const Rule> rules, std::span<const std::size_t> features) {
    std::vector<Rule> out;
    for (const auto& r : rules) {
        const bool hit = std::any_of(r.conditions.begin(), r.conditions.end(), [&](const Condition& c) {
            return std::find(features.begin(), features.end(), c.feature) != features.end();
        });
        if (hit) out.push_back(r);
    }
    return out;
}

std::string format_conditions(const Rule& rule, std::span<const std::string> names) {
    if (rule.conditions.empty()) return "TRUE";
    std::string s;
    for (const auto& c : rule.conditions) {
        if (!s.empty()) s += " & ";
        s += feature_name(names, c.feature);
        s += c.op == Op::LE ? "<=" : ">";
        s += text::compact(c.threshold);
    }
    return s;
}

std::string threshold_label(double threshold, const ColumnStats& stats) {
    const double to_min = std::abs(threshold - stats.min);
    const double to_mean = std::abs(threshold - stats.mean);
    const double to_max = std::abs(threshold - stats.max);
    if (to_mean <= to_min && to_mean <= to_max) return "average";
    return to_min <= to_max ? "small" : "big";
}

std::string describe_rule(const Rule& rule, std::span<const std::string> names, const StatsTable& stats) {
    std::string s = "When";
    for (std::size_t k = 0; k < rule.conditions.size(); ++k) {
        const auto& c = rule.conditions[k];
        const auto name = feature_name(names, c.feature);
        const ColumnStats* st = stats.find(name);
        if (st == nullptr) throw LabelError(fmt::format("no descriptive statistics for {}", name));
        const auto label = threshold_label(c.threshold, *st);
        if (k > 0) s += " and";
        s += fmt::format(" {} is {} {} {} value ({})", name, c.op == Op::LE ? "lower or equal to" : "greater than",
                         label == "average" ? "an" : "a", label, text::compact(c.threshold));
    }
    if (rule.conditions.empty()) s += " no condition applies";
    s += rule.prediction == 1 ? ", the model signals a recession." : ", the model signals no recession.";
    return s;
}

std::vector<Episode> recession_episodes(const Dataset& ds) {
    std::vector<Episode> out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.target[i] != 1) continue;
        const bool continues = !out.empty() && i > 0 && ds.target[i - 1] == 1 && ds.dates[i - 1].next() == ds.dates[i];
        if (continues) {
            out.back().last = ds.dates[i];
        } else {
            out.push_back({ds.dates[i], ds.dates[i]});
        }
    }
    return out;
}

RuleHits rule_hits(const Rule& rule, const Dataset& ds) {
    RuleHits hits;
    const auto episodes = recession_episodes(ds);
    std::vector<std::uint8_t> touched(episodes.size(), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!rule.matches(ds.features.row(i))) continue;
        hits.months.push_back(ds.dates[i]);
        hits.target.push_back(ds.target[i]);
        if (ds.target[i] != 1) continue;
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            if (episodes[e].first <= ds.dates[i] && ds.dates[i] <= episodes[e].last) touched[e] = 1;
        }
    }
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        if (touched[e]) hits.episodes.push_back(episodes[e]);
    }
    return hits;
}

void write_rules_csv(std::ostream& out, std::span<const Rule> rules, std::span<const std::string> names,
                     const Dataset& ds) {
    out << "rule_id,conditions,prediction,error,length,support,lift,matches,hit_months,zero_support\n";
    for (const auto& r : rules) write_rule_fields(out, r, names, ds);
}

void write_ranked_csv(std::ostream& out, std::span<const Rule> ranked, std::span<const std::string> names,
                      const Dataset& ds) {
    out << "rank,rule_id,conditions,prediction,error,length,support,lift,matches,hit_months,zero_support\n";
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        out << k + 1 << ',';
        write_rule_fields(out, ranked[k], names, ds);
    }
}

void write_hits_csv(std::ostream& out, std::span<const Rule> ranked, const Dataset& ds) {
    out << "rule_id,date,target\n";
    for (const auto& r : ranked) {
        const auto hits = rule_hits(r, ds);
        for (std::size_t k = 0; k < hits.months.size(); ++k) {
            out << r.id << ',' << hits.months[k].str() << ',' << hits.target[k] << '\n';
        }
    }
}

}  // namespace spreadscope
