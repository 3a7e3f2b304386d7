// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--criterion K]... [--strict]
//
// Without --strict the exit status only reports crashes, so a criterion that
// the bundled data cannot meet is still printed (as FAIL) without breaking
// ctest. --strict exits 1 when any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracles.hpp"
#include "reference_tables.hpp"
#include "spreadscope/boosting.hpp"
#include "spreadscope/data.hpp"
#include "spreadscope/forest.hpp"
#include "spreadscope/lift.hpp"
#include "spreadscope/metrics.hpp"
#include "spreadscope/model.hpp"
#include "spreadscope/rules.hpp"
#include "spreadscope/shap.hpp"

using namespace spreadscope;
namespace fs = std::filesystem;

namespace {

// ---- tolerances -----------------------------------------------------------

constexpr double kTrainShare = 0.16, kTestShare = 0.14, kShareTol = 0.01;
constexpr double kIngestSeconds = 1.0;
constexpr double kMomentTol = 0.05;
constexpr double kPartnerCoef = -0.75, kPartnerTol = 0.03;
constexpr int kPartnerMatches = 30;
constexpr double kDecileTol = 0.15;
constexpr double kOracleTol = 1e-12;
constexpr int kLiftTrials = 100;
constexpr int kSplitTrials = 50;
constexpr double kRhoTol = 1e-3, kRhoGridStep = 2.5e-4;
constexpr int kRhoStages = 10;
constexpr double kDevianceSlack = 1e-9;
constexpr double kMinPrecision = 0.6;
constexpr int kSeedsNeeded = 2;
constexpr double kSeparableAccuracy = 0.95;
constexpr double kQualitySeconds = 120.0;
constexpr double kLocalAccuracy = 1e-6;
constexpr double kShapOracleTol = 1e-9;
constexpr int kShapTrees = 200, kShapMaxFeatures = 10;
constexpr std::size_t kShapTopRank = 2, kShapTopSet = 8;
constexpr int kHighlightedNeeded = 4;
constexpr double kHeadSupport = 0.95, kHeadSupportTol = 0.03;
constexpr double kHeadError = 0.14, kHeadErrorTol = 0.03;
constexpr double kHeadLift = 1.02, kHeadLiftTol = 0.05;
constexpr double kHeadThreshold = 0.19;
constexpr double kStrongLift = 5.0, kStrongSupport = 0.05;
constexpr std::size_t kEpisodesNeeded = 3;
constexpr std::size_t kRulesTopK = 5, kFilterTop = 6;

const std::vector<std::uint64_t> kSeeds = {42, 43, 44};
const MonthWindow kTrain{YearMonth::parse("1970-01"), YearMonth::parse("1999-12")};
const MonthWindow kTest{YearMonth::parse("2000-01"), YearMonth::parse("2020-11")};

// ---- shared state ---------------------------------------------------------

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path fixture_dir() {
    if (const char* env = std::getenv("SPREADSCOPE_FIXTURE_DIR")) return env;
    return fs::path(SPREADSCOPE_SOURCE_DIR) / "data";
}

/// A real FRED export named yields.csv takes precedence over the synthetic file.
fs::path yields_file() {
    const auto dir = fixture_dir();
    return fs::exists(dir / "yields.csv") ? dir / "yields.csv" : dir / "yields_synthetic.csv";
}

Dataset ingest() {
    std::ifstream yields(yields_file());
    std::ifstream recession(fixture_dir() / "usrec.csv");
    if (!yields || !recession) throw std::runtime_error("fixture files missing under " + fixture_dir().string());
    const auto parsed = parse_yield_csv(yields);
    return attach_target(parsed.panel.dates, compute_spreads(parsed.panel), recession);
}

const Dataset& full() {
    static const Dataset ds = ingest();
    return ds;
}

const SplitResult& windows() {
    static const SplitResult s = temporal_split(full(), kTrain, kTest);
    return s;
}

const GbmFit& gbm_fit(std::uint64_t seed) {
    static std::map<std::uint64_t, GbmFit> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) {
        GbmOptions o;
        o.seed = seed;
        it = cache.emplace(seed, fit_gbm(windows().train, o)).first;
    }
    return it->second;
}

const ForestModel& forest(std::uint64_t seed) {
    static std::map<std::uint64_t, ForestModel> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) {
        ForestOptions o;
        o.seed = seed;
        it = cache.emplace(seed, fit_forest(windows().train, o)).first;
    }
    return it->second;
}

std::size_t column(const std::string_view name) {
    const auto& names = full().feature_names;
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::runtime_error(fmt::format("no column {}", name));
    return static_cast<std::size_t>(it - names.begin());
}

std::string f2(double v) { return fmt::format("{:.3f}", v); }

// ---- criteria -------------------------------------------------------------

Outcome data_shape() {
    const auto t0 = Clock::now();
    const Dataset ds = ingest();
    const SplitResult s = temporal_split(ds, kTrain, kTest);
    const double elapsed = seconds_since(t0);
    const double train_share = s.train.positive_share();
    const double test_share = s.test.positive_share();
    const bool pass = ds.features.cols() == 36 && s.train.size() == 360 && s.test.size() == 251 &&
                      std::abs(train_share - kTrainShare) <= kShareTol &&
                      std::abs(test_share - kTestShare) <= kShareTol && elapsed < kIngestSeconds;
    return {pass, fmt::format("{} columns, train {} rows share {}, test {} rows share {} (want {}±{} / {}±{}), {:.3f} s",
                              ds.features.cols(), s.train.size(), f2(train_share), s.test.size(), f2(test_share),
                              kTrainShare, kShareTol, kTestShare, kShareTol, elapsed)};
}

Outcome descriptive() {
    const auto t0 = Clock::now();
    const StatsTable stats = descriptive_stats(full().features, full().feature_names);
    const double elapsed = seconds_since(t0);
    int ok = 0;
    double worst = 0;
    std::string worst_name;
    for (const auto& ref : reference::moments) {
        const ColumnStats* s = stats.find(ref.feature);
        if (s == nullptr) continue;
        const double err = std::max({std::abs(s->mean - ref.mean), std::abs(s->median - ref.median),
                                     std::abs(s->sd - ref.sd)});
        if (err <= kMomentTol) ++ok;
        if (err > worst) worst = err, worst_name = std::string(ref.feature);
    }
    return {ok == 36 && elapsed < 1.0,
            fmt::format("{}/36 features within ±{} on mean, median, sd; worst {} off by {}; {:.3f} s", ok, kMomentTol,
                        worst_name, f2(worst), elapsed)};
}

Outcome partners() {
    const auto t0 = Clock::now();
    const CorrMatrix corr = pearson_correlations(full().features, full().feature_names);
    const double elapsed = seconds_since(t0);
    int matches = 0;
    for (const auto& ref : reference::partners) {
        const auto& p = corr.most_correlated[column(ref.feature)];
        matches += corr.names[p.index] == ref.partner;
    }
    const auto& m3m6 = corr.most_correlated[column("M3-M6")];
    const std::string partner = corr.names[m3m6.index];
    const bool head = partner == "Y1-M3" && std::abs(m3m6.coefficient - kPartnerCoef) <= kPartnerTol;
    return {head && matches >= kPartnerMatches && elapsed < 1.0,
            fmt::format("M3-M6 -> {} ({}), want Y1-M3 ({}±{}); {}/36 partners match (need {}); {:.3f} s", partner,
                        f2(m3m6.coefficient), kPartnerCoef, kPartnerTol, matches, kPartnerMatches, elapsed)};
}

Outcome decile_lifts() {
    const auto table = decile_lift(full().features.column(column("M3-M6")), full().target, "M3-M6");
    int within = 0;
    double worst = 0;
    for (std::size_t d = 0; d < 10; ++d) {
        const double err = std::abs(table.deciles[d].lift - reference::m3m6_decile_lift[d]);
        within += err <= kDecileTol;
        worst = std::max(worst, err);
    }

    // independent recount: stable rank order, the first n % 10 bins one row larger
    std::mt19937_64 rng(2024);
    int agree = 0;
    for (int trial = 0; trial < kLiftTrials; ++trial) {
        const std::size_t n = 10 + rng() % 200;
        std::vector<double> values(n);
        std::vector<int> target(n);
        for (auto& v : values) v = static_cast<double>(rng() % 25) / 4.0;  // frequent ties
        for (auto& t : target) t = rng() % 5 == 0;
        target[rng() % n] = 1;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<int> bin(n);
        std::size_t pos = 0;
        for (std::size_t d = 0; d < 10; ++d) {
            const std::size_t size = n / 10 + (d < n % 10 ? 1 : 0);
            for (std::size_t k = 0; k < size; ++k) bin[order[pos++]] = static_cast<int>(d);
        }
        const auto got = decile_lift(values, target);
        bool same = true;
        for (int d = 0; d < 10; ++d) {
            std::vector<std::uint8_t> mask(n);
            int positives = 0;
            for (std::size_t i = 0; i < n; ++i) {
                mask[i] = bin[i] == d;
                positives += mask[i] && target[i] == 1;
            }
            const double expected = positives == 0 ? 0.0 : oracle::count_lift(mask, target);
            same = same && std::abs(got.deciles[d].lift - expected) <= kOracleTol;
        }
        agree += same;
    }
    std::string lifts;
    for (const auto& d : table.deciles) lifts += (lifts.empty() ? "" : " ") + fmt::format("{:.2f}", d.lift);
    return {within == 10 && agree == kLiftTrials,
            fmt::format("M3-M6 deciles [{}]: {}/10 within ±{} (worst {}); counting oracle {}/{} at {}", lifts, within,
                        kDecileTol, f2(worst), agree, kLiftTrials, kOracleTol)};
}

Outcome learners() {
    std::mt19937_64 rng(77);
    int splits_ok = 0;
    for (int trial = 0; trial < kSplitTrials; ++trial) {
        const std::size_t n = 12 + rng() % 40, p = 1 + rng() % 5;
        const auto criterion = trial % 2 ? SplitCriterion::Gini : SplitCriterion::VarianceReduction;
        const int min_leaf = 1 + static_cast<int>(rng() % 3);
        Matrix X(n, p);
        std::vector<double> y(n), w(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) X(i, j) = static_cast<double>(rng() % 9);
            y[i] = criterion == SplitCriterion::Gini ? static_cast<double>(rng() % 2)
                                                      : static_cast<double>(rng() % 1000) / 100.0;
        }
        Rng tree_rng(static_cast<std::uint64_t>(trial));
        const Tree tree = fit_tree(X, y, w, TreeParams{1, min_leaf, static_cast<int>(p), criterion}, tree_rng);
        const auto expected = oracle::best_split(X, y, w, criterion, min_leaf);
        const auto& root = tree.node(0);
        const bool same = expected ? (root.feature == expected->feature && root.threshold == expected->threshold)
                                   : root.is_leaf();
        splits_ok += same;
    }

    const auto& test = windows().test;
    const auto& gbm = gbm_fit(kSeeds[0]);
    const auto& rf = forest(kSeeds[0]);
    double recombination = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto x = test.features.row(i);
        double margin = gbm.model.f0;
        for (const auto& s : gbm.model.stages) margin += gbm.model.shrinkage * s.rho * s.tree.predict(x);
        recombination = std::max(recombination, std::abs(predict_gbm(gbm.model, x).margin - margin));
        double sum = 0;
        for (const auto& t : rf.trees) sum += t.predict(x);
        recombination = std::max(recombination,
                                 std::abs(predict_forest(rf, x).score - sum / static_cast<double>(rf.trees.size())));
    }

    const auto& train = windows().train;
    std::vector<double> f(train.size(), gbm.model.f0), h(train.size()), trial_margin(train.size());
    double rho_gap = 0;
    for (int t = 0; t < kRhoStages; ++t) {
        const auto& stage = gbm.model.stages[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < train.size(); ++i) h[i] = stage.tree.predict(train.features.row(i));
        const auto objective = [&](double rho) {
            for (std::size_t i = 0; i < train.size(); ++i) trial_margin[i] = f[i] + rho * h[i];
            return binomial_deviance(train.target, trial_margin);
        };
        rho_gap = std::max(rho_gap, std::abs(stage.rho - oracle::grid_argmin(objective, 0.0, 8.0, kRhoGridStep)));
        for (std::size_t i = 0; i < train.size(); ++i) f[i] += gbm.model.shrinkage * stage.rho * h[i];
    }

    const auto& dev = gbm.trace.deviance;
    double worst_rise = 0;
    for (std::size_t t = 1; t < dev.size(); ++t) worst_rise = std::max(worst_rise, dev[t] - dev[t - 1]);

    const bool pass = splits_ok == kSplitTrials && recombination <= kOracleTol && rho_gap <= kRhoTol &&
                      worst_rise <= kDevianceSlack && gbm.model.stages.size() == 300;
    return {pass, fmt::format("root splits {}/{} match enumeration; recombination gap {:.2e}; rho vs grid gap {:.2e} "
                              "over {} stages; largest deviance rise {:.2e} over M={}",
                              splits_ok, kSplitTrials, recombination, rho_gap, kRhoStages, worst_rise,
                              gbm.model.stages.size())};
}

/// y = 1 iff x0 + x1 > 0, with a margin around the boundary left empty.
Dataset separable(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Dataset ds;
    ds.features = Matrix(n, 5);
    for (std::size_t i = 0; i < n;) {
        std::array<double, 5> x{};
        for (auto& v : x) v = u(rng);
        if (std::abs(x[0] + x[1]) < 0.1) continue;
        for (std::size_t j = 0; j < 5; ++j) ds.features(i, j) = x[j];
        ds.target.push_back(x[0] + x[1] > 0 ? 1 : 0);
        ds.dates.push_back(YearMonth::from_ordinal(static_cast<int>(1900 * 12 + i)));
        ++i;
    }
    ds.feature_names = {"x0", "x1", "x2", "x3", "x4"};
    return ds;
}

Outcome quality() {
    const auto t0 = Clock::now();
    const auto& test = windows().test;
    int seeds_ok = 0;
    std::string per_seed;
    for (auto seed : kSeeds) {
        const auto labels = [&](auto&& predict) {
            std::vector<int> out(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) out[i] = predict(test.features.row(i));
            return out;
        };
        const auto& gbm = gbm_fit(seed).model;
        const auto& rf = forest(seed);
        const auto g = evaluate(labels([&](auto x) { return predict_gbm(gbm, x).label; }), test.target);
        const auto r = evaluate(labels([&](auto x) { return predict_forest(rf, x).label; }), test.target);
        const double gp = g.per_class[1].precision.value_or(0.0);
        const double rp = r.per_class[1].precision.value_or(0.0);
        seeds_ok += gp >= kMinPrecision && gp >= rp;
        per_seed += fmt::format(" seed {}: gbm {} rf {};", seed, f2(gp), f2(rp));
    }

    const Dataset bench_train = separable(500, 5), bench_test = separable(500, 6);
    GbmOptions go;
    go.seed = 1;
    ForestOptions fo;
    fo.seed = 1;
    fo.mtry = 2;
    const auto gbm = fit_gbm(bench_train, go).model;
    const auto rf = fit_forest(bench_train, fo);
    std::size_t g_ok = 0, r_ok = 0;
    for (std::size_t i = 0; i < bench_test.size(); ++i) {
        g_ok += predict_gbm(gbm, bench_test.features.row(i)).label == bench_test.target[i];
        r_ok += predict_forest(rf, bench_test.features.row(i)).label == bench_test.target[i];
    }
    const double g_acc = static_cast<double>(g_ok) / 500.0, r_acc = static_cast<double>(r_ok) / 500.0;
    const double elapsed = seconds_since(t0);
    return {seeds_ok >= kSeedsNeeded && g_acc >= kSeparableAccuracy && r_acc >= kSeparableAccuracy &&
                elapsed < kQualitySeconds,
            fmt::format("test class-1 precision{} {}/3 seeds meet >= {} and >= rf (need {}); separable benchmark "
                        "accuracy gbm {} rf {} (need {}); {:.1f} s",
                        per_seed, seeds_ok, kMinPrecision, kSeedsNeeded, f2(g_acc), f2(r_acc), kSeparableAccuracy,
                        elapsed)};
}

Outcome shap_correctness() {
    const auto& test = windows().test;
    double local = 0;
    for (const AnyModel model : {AnyModel{gbm_fit(kSeeds[0]).model}, AnyModel{forest(kSeeds[0])}}) {
        const auto view = ensemble_view(model);
        const auto shap = shap_values(model, test);
        for (std::size_t i = 0; i < test.size(); ++i) {
            double sum = shap.base_value;
            for (double v : shap.values.row(i)) sum += v;
            local = std::max(local, std::abs(sum - view.output(test.features.row(i))));
        }
    }

    std::mt19937_64 rng(99);
    double oracle_gap = 0;
    bool dummy = true, additive = true;
    std::uniform_int_distribution<int> grid(-18, 18);
    for (int k = 0; k < kShapTrees; ++k) {
        const int p = 1 + k % kShapMaxFeatures;
        const Tree a = oracle::random_tree(rng, 2 + k % 4, p);
        const Tree b = oracle::random_tree(rng, 2 + (k + 1) % 4, p);
        std::vector<double> x(static_cast<std::size_t>(p));
        for (auto& v : x) v = grid(rng) / 4.0;
        const auto phi = tree_shap(a, x, static_cast<std::size_t>(p));
        const auto expected = oracle::shapley(a, x, p);
        const auto used = a.used_features();
        for (int j = 0; j < p; ++j) {
            oracle_gap = std::max(oracle_gap, std::abs(phi[j] - expected[j]));
            if (!std::binary_search(used.begin(), used.end(), j)) dummy = dummy && phi[j] == 0.0;
        }

        // attributions of a two-tree ensemble are the scaled per-tree sums
        const double sa = 0.3, sb = 1.7;
        EnsembleView view{{{&a, sa}, {&b, sb}}, 0.5, "margin"};
        Dataset one;
        one.features = Matrix(1, static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) one.features(0, static_cast<std::size_t>(j)) = x[j];
        one.dates = {YearMonth::from_ordinal(24000)};
        one.target = {0};
        const auto ens = shap_values(view, one);
        const auto phi_b = tree_shap(b, x, static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) {
            const double manual = (0.0 + sa * phi[j]) + sb * phi_b[j];
            additive = additive && ens.values(0, static_cast<std::size_t>(j)) == manual;
        }
    }
    return {local <= kLocalAccuracy && oracle_gap <= kShapOracleTol && dummy && additive,
            fmt::format("local accuracy gap {:.2e} over {} test rows x 2 models; oracle gap {:.2e} on {} trees; "
                        "dummy {}; additivity {}",
                        local, test.size(), oracle_gap, kShapTrees, dummy ? "exact" : "violated",
                        additive ? "exact" : "violated")};
}

std::vector<ImportanceEntry> gbm_test_ranking(std::uint64_t seed) {
    return importance(shap_values(AnyModel{gbm_fit(seed).model}, windows().test));
}

Outcome shap_ranking() {
    int seeds_ok = 0;
    std::string detail;
    for (auto seed : kSeeds) {
        const auto ranking = gbm_test_ranking(seed);
        std::size_t m3m6_rank = 0;
        int highlighted = 0;
        std::string top;
        for (const auto& e : ranking) {
            if (e.name == "M3-M6") m3m6_rank = static_cast<std::size_t>(e.rank);
            if (static_cast<std::size_t>(e.rank) <= kShapTopSet) {
                top += (top.empty() ? "" : " ") + e.name;
                highlighted += std::find(reference::highlighted.begin(), reference::highlighted.end(), e.name) !=
                               reference::highlighted.end();
            }
        }
        seeds_ok += m3m6_rank <= kShapTopRank && highlighted >= kHighlightedNeeded;
        detail += fmt::format(" seed {}: M3-M6 rank {}, {}/6 highlighted in top {} [{}];", seed, m3m6_rank,
                              highlighted, kShapTopSet, top);
    }
    return {seeds_ok == static_cast<int>(kSeeds.size()), fmt::format("{}/3 seeds pass;{}", seeds_ok, detail)};
}

/// Every leaf owns exactly one rule and every row satisfies exactly the rule of its leaf.
bool rules_partition(const Tree& tree, bool regression, const Matrix& X) {
    const auto rules = tree_rules(tree, regression);
    if (rules.size() != tree.leaf_count()) return false;
    std::set<int> leaves;
    for (const auto& r : rules) {
        if (!tree.node(r.leaf).is_leaf() || !leaves.insert(r.leaf).second) return false;
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto x = X.row(i);
        const int leaf = tree.leaf_index(x);
        int hits = 0;
        for (const auto& r : rules) {
            if (!r.matches(x)) continue;
            ++hits;
            if (r.leaf != leaf) return false;
        }
        if (hits != 1) return false;
    }
    return true;
}

Outcome rules() {
    const auto& ds = full();
    const auto& gbm = gbm_fit(kSeeds[0]).model;
    const auto& rf = forest(kSeeds[0]);
    std::size_t trees = 0, consistent = 0;
    for (const auto& s : gbm.stages) ++trees, consistent += rules_partition(s.tree, true, ds.features);
    for (const auto& t : rf.trees) ++trees, consistent += rules_partition(t, false, ds.features);

    // scoring against a recount on random toy sets
    std::mt19937_64 rng(5);
    bool scoring = true;
    for (int trial = 0; trial < 50; ++trial) {
        Dataset toy;
        const std::size_t n = 30;
        toy.features = Matrix(n, 3);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 3; ++j) toy.features(i, j) = static_cast<double>(rng() % 10);
            toy.target.push_back(rng() % 3 == 0);
            toy.dates.push_back(YearMonth::from_ordinal(static_cast<int>(24000 + i)));
        }
        toy.target[0] = 1;
        RuleSet rs;
        for (int k = 0; k < 10; ++k) {
            Rule r;
            r.prediction = static_cast<int>(rng() % 2);
            for (std::size_t c = 0, len = rng() % 4; c < len; ++c) {
                r.conditions.push_back({rng() % 3, rng() % 2 ? Op::LE : Op::GT, static_cast<double>(rng() % 10) + 0.5});
            }
            rs.rules.push_back(r);
        }
        score_rules(rs, toy);
        for (const auto& r : rs.rules) {
            std::vector<std::uint8_t> mask(n);
            std::size_t matches = 0, errors = 0;
            for (std::size_t i = 0; i < n; ++i) {
                bool ok = true;
                for (const auto& c : r.conditions) {
                    const double v = toy.features(i, c.feature);
                    ok = ok && (c.op == Op::LE ? v <= c.threshold : v > c.threshold);
                }
                mask[i] = ok;
                matches += ok;
                errors += ok && toy.target[i] != r.prediction;
            }
            if (matches == 0) {
                scoring = scoring && r.zero_support && !r.metrics;
                continue;
            }
            scoring = scoring && r.metrics && r.metrics->matches == matches && r.metrics->errors == errors &&
                      r.metrics->support == static_cast<double>(matches) / static_cast<double>(n) &&
                      r.metrics->error == static_cast<double>(errors) / static_cast<double>(matches) &&
                      std::abs(r.metrics->lift - oracle::count_lift(mask, toy.target)) <= kOracleTol;
        }
    }

    // the single-condition head rule, scored on the full sample
    RuleSet head;
    Rule h;
    h.conditions = {{column("M3-M6"), Op::LE, kHeadThreshold}};
    h.prediction = 0;
    head.rules = {h};
    score_rules(head, ds);
    const auto& hm = *head.rules[0].metrics;
    const bool head_ok = std::abs(hm.support - kHeadSupport) <= kHeadSupportTol &&
                         std::abs(hm.error - kHeadError) <= kHeadErrorTol &&
                         std::abs(hm.lift - kHeadLift) <= kHeadLiftTol;

    // the mined ranking, restricted to rules that mention a top test attribution
    RuleSet mined = canonicalize_and_dedup(extract_rules(AnyModel{gbm}));
    score_rules(mined, ds);
    const auto ranking = gbm_test_ranking(kSeeds[0]);
    std::vector<std::size_t> top;
    for (std::size_t k = 0; k < kFilterTop; ++k) top.push_back(ranking[k].feature);
    const auto candidates = filter_by_features(mined.rules, top);
    const auto by_lift = rank_rules(candidates, RankCriterion::MaxLift, kRulesTopK, ds.feature_names);
    bool strong = false;
    std::size_t best_episodes = 0;
    for (const auto& r : by_lift) {
        const auto& m = *r.metrics;
        strong = strong || (m.errors == 0 && m.lift >= kStrongLift && m.support <= kStrongSupport);
        best_episodes = std::max(best_episodes, rule_hits(r, ds).episodes.size());
    }
    const std::string lead = by_lift.empty() ? "none"
                                             : fmt::format("{} (lift {}, error {}, support {})",
                                                           format_conditions(by_lift[0], ds.feature_names),
                                                           f2(by_lift[0].metrics->lift), f2(by_lift[0].metrics->error),
                                                           f2(by_lift[0].metrics->support));
    return {consistent == trees && scoring && head_ok && strong && best_episodes >= kEpisodesNeeded,
            fmt::format("partition holds on {}/{} trees; toy scoring {}; M3-M6<=0.19 support {} error {} lift {} "
                        "(want {}±{}, {}±{}, {}±{}); top-lift {}; strong zero-error rule {}; most episodes hit {}",
                        consistent, trees, scoring ? "matches" : "differs", f2(hm.support), f2(hm.error), f2(hm.lift),
                        kHeadSupport, kHeadSupportTol, kHeadError, kHeadErrorTol, kHeadLift, kHeadLiftTol, lead,
                        strong ? "present" : "absent", best_episodes)};
}

int run_cli(const std::string& args) {
    const int status = std::system(fmt::format("\"{}\" {} >/dev/null 2>&1", SPREADSCOPE_CLI, args).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = s.str();
    }
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "spreadscope_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::string> commands = {"ingest", "train", "explain", "rules", "lift", "report"};
    const auto run = [&](const std::string& name, int threads) {
        const fs::path dir = root / name;
        fs::create_directories(dir);
        std::ofstream(dir / "config.json") << fmt::format(
            R"({{"data": {{"yields": "{}", "recession": "{}"}}, "seed": 42, "threads": {}, "out": "out"}})",
            yields_file().string(), (fixture_dir() / "usrec.csv").string(), threads);
        for (const auto& cmd : commands) {
            if (run_cli(fmt::format("{} --config \"{}\"", cmd, (dir / "config.json").string())) != 0) {
                throw std::runtime_error(fmt::format("{} failed in {}", cmd, name));
            }
        }
        return snapshot(dir / "out");
    };
    const auto a = run("first", 1);
    const auto b = run("again", 1);
    const auto c = run("threaded", 4);
    std::size_t differing = 0;
    std::string first_diff;
    for (const auto* other : {&b, &c}) {
        std::set<std::string> names;
        for (const auto& [k, _] : a) names.insert(k);
        for (const auto& [k, _] : *other) names.insert(k);
        for (const auto& k : names) {
            const auto x = a.find(k), y = other->find(k);
            if (x == a.end() || y == other->end() || x->second != y->second) {
                ++differing;
                if (first_diff.empty()) first_diff = k;
            }
        }
    }
    fs::remove_all(root);
    return {differing == 0 && !a.empty(),
            fmt::format("{} artifacts from {} commands; {} differ across re-run and 1 vs 4 threads{}", a.size(),
                        commands.size(), differing, first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> selected;
    bool strict = false;
    app.add_option("--criterion,-c", selected, "criterion number (repeatable; default all)")->check(CLI::Range(1, 10));
    app.add_flag("--strict", strict, "exit 1 when a criterion fails");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria = {data_shape,       descriptive,  partners,  decile_lifts,
                                                            learners,         quality,      shap_correctness,
                                                            shap_ranking,     rules,        determinism};
    if (selected.empty()) {
        selected.resize(criteria.size());
        std::iota(selected.begin(), selected.end(), 1);
    }
    bool all = true;
    for (int k : selected) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(k - 1)]();
        } catch (const std::exception& e) {
            std::cout << fmt::format("C{} ERROR: {}", k, e.what()) << std::endl;
            return 1;
        }
        all = all && o.pass;
        std::cout << fmt::format("C{} {}: {} [{:.1f} s]", k, o.pass ? "PASS" : "FAIL", o.detail, seconds_since(t0))
                  << std::endl;
    }
    return strict && !all ? 1 : 0;
}
