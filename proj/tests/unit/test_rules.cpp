#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spreadscope/boosting.hpp"
#include "spreadscope/error.hpp"
#include "spreadscope/forest.hpp"
#include "spreadscope/model.hpp"
#include "spreadscope/rules.hpp"
#include "synthetic.hpp"

using namespace spreadscope;

namespace {

Rule make_rule(std::vector<Condition> conditions, int prediction) {
    Rule r;
    r.conditions = std::move(conditions);
    r.prediction = prediction;
    return r;
}

Dataset months(std::vector<int> target) {
    Dataset ds;
    ds.features = Matrix(target.size(), 1, 0.0);
    for (std::size_t i = 0; i < target.size(); ++i) {
        ds.dates.push_back(YearMonth::from_ordinal(2000 * 12 + static_cast<int>(i)));
        ds.features(i, 0) = static_cast<double>(i);
    }
    ds.target = std::move(target);
    ds.feature_names = {"t"};
    return ds;
}

}  // namespace

TEST_SUITE("rules") {

TEST_CASE("a stump yields one rule per leaf") {
    std::vector<TreeNode> nodes(3);
    nodes[0].feature = 0, nodes[0].threshold = 0.5, nodes[0].left = 1, nodes[0].right = 2;
    nodes[1].prediction = 0.2, nodes[2].prediction = 0.7;
    const Tree stump(nodes, {});
    const auto prob = tree_rules(stump, false, 4);
    REQUIRE(prob.size() == 2);
    CHECK(prob[0].conditions == std::vector<Condition>{{0, Op::LE, 0.5}});
    CHECK(prob[0].prediction == 0);
    CHECK(prob[1].conditions == std::vector<Condition>{{0, Op::GT, 0.5}});
    CHECK(prob[1].prediction == 1);
    CHECK(prob[1].tree == 4);
    CHECK(prob[1].leaf == 2);
    const auto reg = tree_rules(stump, true);
    CHECK(reg[0].prediction == 1);  // 0.2 > 0
    CHECK(tree_rules(Tree::leaf(0.5), false).at(0).conditions.empty());
}

TEST_CASE("rules partition the input space like the leaves") {
    const Dataset ds = synthetic::two_gaussians(150, 3, 1.0, 41);
    ForestOptions o;
    o.n_trees = 4;
    o.seed = 2;
    o.mtry = 2;
    o.tree.max_depth = 5;
    const AnyModel model = fit_forest(ds, o);
    const auto& forest = std::get<ForestModel>(model);
    const auto raw = extract_rules(model);
    std::size_t expected = 0;
    for (const auto& t : forest.trees) expected += t.leaf_count();
    CHECK(raw.rules.size() == expected);
    CHECK(raw.model == "rf");

    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        const auto rules = tree_rules(forest.trees[t], false, t);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto x = ds.features.row(i);
            int hits = 0;
            for (const auto& r : rules) {
                if (!r.matches(x)) continue;
                ++hits;
                CHECK(r.leaf == forest.trees[t].leaf_index(x));
                CHECK(r.prediction == (forest.trees[t].predict(x) >= 0.5 ? 1 : 0));
                const auto canon = canonicalize(r);
                REQUIRE(canon);
                CHECK(canon->matches(x));
            }
            CHECK(hits == 1);
        }
    }
}

TEST_CASE("canonicalization") {
    auto merged = canonicalize(make_rule({{2, Op::GT, 0.1}, {0, Op::LE, 3.0}, {2, Op::GT, 0.4}, {0, Op::LE, 1.5},
                                          {2, Op::LE, 2.0}},
                                         1));
    REQUIRE(merged);
    CHECK(merged->conditions == std::vector<Condition>{{0, Op::LE, 1.5}, {2, Op::LE, 2.0}, {2, Op::GT, 0.4}});

    std::string reason;
    CHECK_FALSE(canonicalize(make_rule({{1, Op::LE, 0.5}, {1, Op::GT, 0.5}}, 0), &reason));
    CHECK(reason.find("feature 1") != std::string::npos);

    RuleSet rs;
    rs.rules = {make_rule({{0, Op::LE, 1}, {0, Op::LE, 2}}, 1), make_rule({{0, Op::LE, 1}}, 1),
                make_rule({{0, Op::LE, 1}}, 0), make_rule({{0, Op::GT, 3}, {0, Op::LE, 2}}, 1)};
    const auto clean = canonicalize_and_dedup(rs);
    CHECK(clean.rules.size() == 2);
    CHECK(clean.duplicates == 1);
    CHECK(clean.dropped == 1);
    CHECK(clean.rules[0].id == 1);
    CHECK(clean.rules[1].id == 2);
    CHECK(clean.rules[1].prediction == 0);
}

TEST_CASE("scores agree with counting over leaf membership") {
    const Dataset ds = synthetic::two_gaussians(200, 3, 0.8, 43);
    GbmOptions o;
    o.n_iter = 5;
    o.tree.max_depth = 3;
    o.tree.min_samples_leaf = 4;
    const AnyModel model = fit_gbm(ds, o).model;
    const auto& gbm = std::get<GbmModel>(model);
    auto rs = extract_rules(model);
    const auto raw = rs.rules;
    score_rules(rs, ds);
    CHECK(rs.population == "full");
    for (const auto& r : rs.rules) {
        const auto& tree = gbm.stages[r.tree].tree;
        std::vector<std::uint8_t> mask(ds.size());
        std::size_t matches = 0, errors = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            mask[i] = tree.leaf_index(ds.features.row(i)) == r.leaf;
            matches += mask[i];
            errors += mask[i] && ds.target[i] != r.prediction;
        }
        CHECK(r.prediction == (tree.node(r.leaf).prediction > 0 ? 1 : 0));
        CHECK(r.zero_support == (matches == 0));
        if (matches == 0) {
            CHECK_FALSE(r.metrics);
            continue;
        }
        REQUIRE(r.metrics);
        CHECK(r.metrics->matches == matches);
        CHECK(r.metrics->support == doctest::Approx(matches / 200.0).epsilon(1e-12));
        CHECK(r.metrics->error == doctest::Approx(static_cast<double>(errors) / matches).epsilon(1e-12));
        CHECK(std::abs(r.metrics->lift - oracle::count_lift(mask, ds.target)) <= 1e-12);
        CHECK(r.metrics->length == r.conditions.size());
    }
}

TEST_CASE("hand-counted metrics") {
    std::vector<int> target(30, 0);
    for (int i : {3, 4, 5, 20, 21, 22}) target[static_cast<std::size_t>(i)] = 1;
    const Dataset ds = months(target);
    RuleSet rs;
    rs.rules = {make_rule({{0, Op::GT, 2.5}, {0, Op::LE, 6.5}}, 1), make_rule({}, 0),
                make_rule({{0, Op::GT, 40}}, 1)};
    score_rules(rs, ds);
    const auto& a = *rs.rules[0].metrics;
    CHECK(a.matches == 4);
    CHECK(a.support == 4.0 / 30.0);
    CHECK(a.error == 0.25);
    CHECK(a.lift == doctest::Approx((3.0 / 4.0) / (6.0 / 30.0)));
    const auto& all = *rs.rules[1].metrics;
    CHECK(all.support == 1.0);
    CHECK(all.error == doctest::Approx(0.2));
    CHECK(all.lift == doctest::Approx(1.0));
    CHECK(rs.rules[2].zero_support);
    CHECK_FALSE(rs.rules[2].metrics);

    CHECK_THROWS_AS(score_rules(rs, months(std::vector<int>(5, 0))), LiftError);
}

TEST_CASE("ranking") {
    std::vector<int> target(40, 0);
    for (int i = 30; i < 40; ++i) target[static_cast<std::size_t>(i)] = 1;
    const Dataset ds = months(target);
    RuleSet rs;
    rs.rules = {make_rule({{0, Op::GT, 34.5}}, 1), make_rule({{0, Op::GT, 29.5}}, 1), make_rule({}, 0),
                make_rule({{0, Op::LE, 19.5}}, 0), make_rule({{0, Op::GT, 100}}, 1),
                make_rule({{0, Op::GT, 19.5}, {0, Op::LE, 39.5}}, 1)};
    for (std::size_t k = 0; k < rs.rules.size(); ++k) rs.rules[k].id = k + 1;
    score_rules(rs, ds);
    const std::vector<std::string> names = {"t"};

    const auto by_lift = rank_rules(rs.rules, RankCriterion::MaxLift, 0, names);
    REQUIRE(by_lift.size() == 5);  // zero-support rule is excluded
    CHECK(by_lift[0].id == 2);  // lift 4 with support 0.25 beats lift 4 with support 0.125
    CHECK(by_lift[1].id == 1);
    CHECK(by_lift[2].id == 6);

    const auto by_support = rank_rules(rs.rules, RankCriterion::MaxSupport, 2, names);
    REQUIRE(by_support.size() == 2);
    CHECK(by_support[0].id == 3);
    CHECK(by_support[1].id == 4);

    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        auto shuffled = rs.rules;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (auto c : {RankCriterion::MaxLift, RankCriterion::MaxSupport}) {
            const auto a = rank_rules(shuffled, c, 0, names);
            const auto b = rank_rules(rs.rules, c, 0, names);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
        }
    }

    const std::vector<std::size_t> none = {3};
    CHECK(filter_by_features(rs.rules, none).empty());
    const std::vector<std::size_t> first = {0};
    CHECK(filter_by_features(rs.rules, first).size() == 5);
}

TEST_CASE("text rendering") {
    const std::vector<std::string> names = {"M3-M6", "Y2-M6"};
    const auto r = make_rule({{0, Op::LE, 0.19}, {1, Op::GT, -0.7 + 0.1 - 0.0000000000000001}}, 1);
    CHECK(format_conditions(r, names) == "M3-M6<=0.19 & Y2-M6>-0.6");
    CHECK(format_conditions(make_rule({}, 0), names) == "TRUE");

    const ColumnStats stats{0.5, 0.4, -1.0, 2.0, 0.3};
    CHECK(threshold_label(-0.9, stats) == "small");
    CHECK(threshold_label(0.6, stats) == "average");
    CHECK(threshold_label(1.8, stats) == "big");
    CHECK(threshold_label(-0.25, stats) == "average");  // equidistant from min and mean

    StatsTable table;
    table.names = names;
    table.columns = {stats, stats};
    CHECK(describe_rule(r, names, table) ==
          "When M3-M6 is lower or equal to an average value (0.19) and Y2-M6 is greater than a small value (-0.6), "
          "the model signals a recession.");
    table.names = {"M3-M6"};
    table.columns = {stats};
    CHECK_THROWS_AS(describe_rule(r, names, table), LabelError);
}

TEST_CASE("episodes and hits") {
    std::vector<int> target(24, 0);
    for (int i : {2, 3, 4, 10, 20, 21}) target[static_cast<std::size_t>(i)] = 1;
    const Dataset ds = months(target);
    const auto episodes = recession_episodes(ds);
    REQUIRE(episodes.size() == 3);
    CHECK(episodes[0].first == ds.dates[2]);
    CHECK(episodes[0].last == ds.dates[4]);
    CHECK(episodes[1].first == episodes[1].last);
    CHECK(episodes[2].last == ds.dates[21]);

    const auto hits = rule_hits(make_rule({{0, Op::GT, 3.5}, {0, Op::LE, 11}}, 1), ds);
    CHECK(hits.months.size() == 8);
    CHECK(std::count(hits.target.begin(), hits.target.end(), 1) == 2);
    REQUIRE(hits.episodes.size() == 2);
    CHECK(hits.episodes[0].first == ds.dates[2]);
    CHECK(hits.episodes[1].first == ds.dates[10]);

    std::ostringstream out;
    std::vector<Rule> ranked = {make_rule({{0, Op::GT, 20.5}}, 1)};
    ranked[0].id = 7;
    write_hits_csv(out, ranked, ds);
    CHECK(out.str().rfind("rule_id,date,target\n7,", 0) == 0);
}

}  // TEST_SUITE
