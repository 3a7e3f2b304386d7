#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/fetch.hpp"
#include "spreadscope/lift.hpp"
#include "spreadscope/rules.hpp"
#include "spreadscope/svg.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope::cli {

namespace {

namespace fs = std::filesystem;

const std::map<std::string, std::string> kDefaultSeries = {
    {"M3", "GS3M"}, {"M6", "GS6M"}, {"Y1", "GS1"},   {"Y2", "GS2"},  {"Y3", "GS3"},
    {"Y5", "GS5"},  {"Y7", "GS7"},  {"Y10", "GS10"}, {"Y20", "GS20"}};

std::string read_file(const fs::path& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open {} {}", what, path.string()));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& body) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << body;
    if (!out) throw Error(fmt::format("failed writing {}", path.string()));
    std::cout << "wrote " << path.string() << '\n';
}

template <class Fn>
void emit(const fs::path& path, Fn&& fn) {
    std::ostringstream s;
    fn(s);
    write_file(path, s.str());
}

fs::path cache_dir(const RunConfig& c) {
    if (const char* env = std::getenv("SPREADSCOPE_CACHE"); env != nullptr && *env != '\0') return env;
    if (c.data.cache_dir) return *c.data.cache_dir;
    return c.out / "cache";
}

std::string endpoint(const RunConfig& c) { return c.data.endpoint.empty() ? kFredEndpoint : c.data.endpoint; }

std::uint64_t require_seed(const RunConfig& c) {
    if (!c.seed) throw ConfigError("a seed is required for training (set \"seed\" or pass --seed)");
    return *c.seed;
}

fs::path model_path(const RunConfig& c) {
    return c.model_file ? *c.model_file : c.out / fmt::format("model_{}.json", kind_name(c.kind));
}

AnyModel load_model(const RunConfig& c) {
    const fs::path path = model_path(c);
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open model file {} (run train first)", path.string()));
    return read_model(in);
}

void check_model_matches(const AnyModel& model, const Dataset& ds) {
    if (feature_names(model) != ds.feature_names) {
        throw ConfigError("model features do not match the dataset columns");
    }
}

std::string kind_of(const AnyModel& model) { return model_kind(model); }

SplitResult split(const RunConfig& c, const Dataset& ds) { return temporal_split(ds, c.train, c.test); }

const Dataset& population(const std::string& which, const Dataset& full, const SplitResult& s) {
    if (which == "train") return s.train;
    if (which == "test") return s.test;
    return full;
}

std::vector<int> predict_labels(const AnyModel& model, const Dataset& ds, double threshold,
                                std::vector<double>* scores) {
    std::vector<int> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double score;
        int label;
        if (const auto* rf = std::get_if<ForestModel>(&model)) {
            const auto p = predict_forest(*rf, ds.features.row(i), threshold);
            score = p.score;
            label = p.label;
        } else {
            const auto p = predict_gbm(std::get<GbmModel>(model), ds.features.row(i), threshold);
            score = p.score;
            label = p.label;
        }
        labels[i] = label;
        if (scores) scores->push_back(score);
    }
    return labels;
}

std::vector<std::size_t> top_features(std::span<const ImportanceEntry> ranking, std::size_t k) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < ranking.size() && r < k; ++r) out.push_back(ranking[r].feature);
    return out;
}

ShapOptions shap_options(const RunConfig& c) {
    ShapOptions o = c.explain.shap;
    o.n_threads = c.threads;
    return o;
}

std::string filename_safe(const std::string& name) {
    std::string s = name;
    std::replace(s.begin(), s.end(), '/', '_');
    return s;
}

}  // namespace

Dataset build_dataset(const RunConfig& c, std::vector<YearMonth>* rejected) {
    if (c.data.dataset) {
        std::istringstream in(read_file(*c.data.dataset, "dataset file"));
        return read_dataset_csv(in);
    }

    ParsedPanel parsed;
    if (c.data.yields) {
        std::istringstream in(read_file(*c.data.yields, "yield file"));
        parsed = parse_yield_csv(in);
    } else if (!c.data.series.empty() || c.data.fetch) {
        std::vector<std::pair<Tenor, std::string>> bodies;
        for (const auto& [name, id] : kDefaultSeries) {
            const Tenor tenor = *tenor_from_series(name);
            if (auto it = c.data.series.find(name); it != c.data.series.end()) {
                bodies.emplace_back(tenor, read_file(it->second, "series file"));
            } else if (c.data.fetch) {
                auto fit = c.data.fetch_series.find(name);
                bodies.emplace_back(tenor, fetch_series(fit != c.data.fetch_series.end() ? fit->second : id,
                                                        endpoint(c), cache_dir(c)));
            } else {
                throw ConfigError(fmt::format("no series file for tenor {}", name));
            }
        }
        parsed = merge_series_csv(bodies);
    } else {
        throw ConfigError("no yield input configured (data.yields, data.series or data.fetch)");
    }
    if (rejected) *rejected = parsed.rejected;

    std::string recession;
    if (c.data.recession) {
        recession = read_file(*c.data.recession, "recession file");
    } else if (c.data.fetch) {
        recession = fetch_series(c.data.recession_series, endpoint(c), cache_dir(c));
    } else {
        throw ConfigError("no recession input configured (data.recession)");
    }
    std::istringstream rin(recession);
    Matrix features = compute_spreads(parsed.panel);
    return attach_target(parsed.panel.dates, std::move(features), rin);
}

void cmd_ingest(const RunConfig& c) {
    std::vector<YearMonth> rejected;
    const Dataset ds = build_dataset(c, &rejected);
    const SplitResult s = split(c, ds);
    const StatsTable stats = descriptive_stats(ds.features, ds.feature_names);
    const CorrMatrix corr = pearson_correlations(ds.features, ds.feature_names);

    emit(c.out / "dataset.csv", [&](std::ostream& o) { write_dataset_csv(o, ds); });
    emit(c.out / "stats.csv", [&](std::ostream& o) { write_stats_csv(o, stats); });
    emit(c.out / "correlations.csv", [&](std::ostream& o) { write_corr_csv(o, corr); });
    emit(c.out / "partners.csv", [&](std::ostream& o) { write_partners_csv(o, corr); });
    emit(c.out / "rejected_months.txt", [&](std::ostream& o) {
        for (const auto& m : rejected) o << m.str() << '\n';
    });
    emit(c.out / "split.csv", [&](std::ostream& o) {
        o << "set,first,last,rows,positives,positive_share\n";
        const auto row = [&](const char* name, const Dataset& d) {
            o << name << ',' << d.dates.front().str() << ',' << d.dates.back().str() << ',' << d.size() << ','
              << d.positives() << ',' << text::fixed(d.positive_share(), 4) << '\n';
        };
        row("full", ds);
        row("train", s.train);
        row("test", s.test);
    });
}

TrainResult cmd_train(const RunConfig& c) {
    const std::uint64_t seed = require_seed(c);
    const Dataset ds = build_dataset(c);
    const SplitResult s = split(c, ds);
    const std::string kind = kind_name(c.kind);

    AnyModel model;
    if (c.kind == ModelKind::Forest) {
        ForestOptions o = c.forest;
        o.seed = seed;
        o.n_threads = c.threads;
        model = fit_forest(s.train, o);
    } else {
        GbmOptions o = c.gbm;
        o.seed = seed;
        GbmFit fit = fit_gbm(s.train, o);
        emit(c.out / "trace_gbm.csv", [&](std::ostream& out) { write_trace_csv(out, fit.trace); });
        model = std::move(fit.model);
    }
    emit(c.out / fmt::format("model_{}.json", kind), [&](std::ostream& o) { write_model(o, model); });

    std::vector<double> train_scores, test_scores;
    const auto train_labels = predict_labels(model, s.train, c.threshold, &train_scores);
    const auto test_labels = predict_labels(model, s.test, c.threshold, &test_scores);
    const std::vector<NamedReport> reports = {{kind + "_train", evaluate(train_labels, s.train.target, c.threshold)},
                                              {kind, evaluate(test_labels, s.test.target, c.threshold)}};
    emit(c.out / fmt::format("metrics_{}.csv", kind), [&](std::ostream& o) { write_metrics_csv(o, reports); });
    write_file(c.out / fmt::format("metrics_{}.txt", kind), metrics_table(reports));
    emit(c.out / fmt::format("predictions_{}.csv", kind), [&](std::ostream& o) {
        o << "date,set,score,label,target\n";
        const auto rows = [&](const char* name, const Dataset& d, const std::vector<double>& sc,
                              const std::vector<int>& lb) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                o << d.dates[i].str() << ',' << name << ',' << text::number(sc[i]) << ',' << lb[i] << ','
                  << d.target[i] << '\n';
            }
        };
        rows("train", s.train, train_scores, train_labels);
        rows("test", s.test, test_scores, test_labels);
    });
    return {std::move(model), reports[1].report};
}

ExplainResult cmd_explain(const RunConfig& c) {
    const AnyModel model = load_model(c);
    const Dataset ds = build_dataset(c);
    check_model_matches(model, ds);
    const SplitResult s = split(c, ds);
    const std::string kind = kind_of(model);
    const ShapOptions opts = shap_options(c);

    const ShapMatrix train = shap_values(model, s.train, opts);
    const ShapMatrix test = shap_values(model, s.test, opts);
    ExplainResult result{importance(train), importance(test)};
    const CorrMatrix corr = pearson_correlations(ds.features, ds.feature_names);

    emit(c.out / fmt::format("importance_{}.csv", kind),
         [&](std::ostream& o) { write_importance_csv(o, result.train, result.test); });
    emit(c.out / fmt::format("shap_{}_train.csv", kind), [&](std::ostream& o) { write_shap_wide_csv(o, train); });
    emit(c.out / fmt::format("shap_{}_test.csv", kind), [&](std::ostream& o) { write_shap_wide_csv(o, test); });
    emit(c.out / fmt::format("shap_{}_test_long.csv", kind), [&](std::ostream& o) { write_shap_long_csv(o, test); });
    const auto summary = contribution_summary(test, s.test);
    emit(c.out / fmt::format("summary_{}.csv", kind), [&](std::ostream& o) { write_summary_csv(o, test, summary); });

    const auto top = top_features(result.test, c.explain.top_k);
    std::vector<DependencePoints> deps;
    for (std::size_t f : top) {
        deps.push_back(dependence(test, s.test, f, corr, c.explain.span));
        const auto& dep = deps.back();
        const auto stem = fmt::format("{}_{}", kind, filename_safe(dep.name));
        emit(c.out / fmt::format("dependence_{}.csv", stem), [&](std::ostream& o) { write_dependence_csv(o, dep); });
        emit(c.out / fmt::format("smooth_{}.csv", stem), [&](std::ostream& o) { write_smooth_csv(o, dep); });
    }

    nlohmann::json meta = {{"model", kind},
                           {"unit", test.unit},
                           {"base_value_train", train.base_value},
                           {"base_value_test", test.base_value},
                           {"engine", opts.engine == ShapEngine::Enumeration ? "enumerate" : "path"},
                           {"train_rows", s.train.size()},
                           {"test_rows", s.test.size()}};
    nlohmann::json top_json = nlohmann::json::array();
    for (std::size_t f : top) top_json.push_back(ds.feature_names[f]);
    meta["top_features"] = top_json;
    write_file(c.out / fmt::format("explain_{}.json", kind), meta.dump(1) + "\n");

    if (c.explain.svg) {
        std::vector<std::string> labels;
        std::vector<double> values;
        for (const auto& e : result.test) {
            labels.push_back(e.name);
            values.push_back(e.mean_abs);
        }
        write_file(c.out / fmt::format("importance_{}.svg", kind),
                   svg::bar_chart(fmt::format("mean |SHAP| on the test set ({})", test.unit), labels, values));

        const std::size_t rows = std::min<std::size_t>(10, result.test.size());
        std::vector<std::string> strip_labels(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(rows));
        std::vector<svg::StripPoint> points;
        for (const auto& pt : summary) {
            if (static_cast<std::size_t>(pt.rank) <= rows) {
                points.push_back({static_cast<std::size_t>(pt.rank - 1), pt.phi, pt.quantile});
            }
        }
        write_file(c.out / fmt::format("summary_{}.svg", kind),
                   svg::strip_plot("SHAP contributions, test set", strip_labels, points));

        for (const auto& dep : deps) {
            svg::Series series{dep.x, dep.phi, rank_quantiles(dep.partner_values)};
            write_file(c.out / fmt::format("dependence_{}_{}.svg", kind, filename_safe(dep.name)),
                       svg::scatter_plot(fmt::format("{} (shade: {})", dep.name, dep.partner_name), dep.name,
                                         "SHAP value", series, dep.smooth));
        }
    }
    return result;
}

void cmd_rules(const RunConfig& c) {
    const AnyModel model = load_model(c);
    const Dataset ds = build_dataset(c);
    check_model_matches(model, ds);
    const std::string kind = kind_of(model);
    const auto& names = ds.feature_names;

    RuleSet rs = canonicalize_and_dedup(extract_rules(model));
    score_rules(rs, ds, "full");

    std::vector<Rule> candidates = rs.rules;
    std::vector<std::size_t> filter;
    if (c.rules.shap_filter) {
        const SplitResult s = split(c, ds);
        filter = top_features(importance(shap_values(model, s.test, shap_options(c))), c.rules.filter_top);
        candidates = filter_by_features(rs.rules, filter);
    }
    const auto by_support = rank_rules(candidates, RankCriterion::MaxSupport, c.rules.top_k, names);
    const auto by_lift = rank_rules(candidates, RankCriterion::MaxLift, c.rules.top_k, names);

    emit(c.out / fmt::format("rules_{}.csv", kind), [&](std::ostream& o) { write_rules_csv(o, rs.rules, names, ds); });
    emit(c.out / fmt::format("rules_{}_max_support.csv", kind),
         [&](std::ostream& o) { write_ranked_csv(o, by_support, names, ds); });
    emit(c.out / fmt::format("rules_{}_max_lift.csv", kind),
         [&](std::ostream& o) { write_ranked_csv(o, by_lift, names, ds); });

    std::vector<Rule> ranked;
    std::set<std::size_t> ids;
    for (const auto* list : {&by_support, &by_lift}) {
        for (const auto& r : *list) {
            if (ids.insert(r.id).second) ranked.push_back(r);
        }
    }
    emit(c.out / fmt::format("rules_{}_hits.csv", kind), [&](std::ostream& o) { write_hits_csv(o, ranked, ds); });

    const StatsTable stats = descriptive_stats(ds.features, names);
    emit(c.out / fmt::format("rules_{}_labels.txt", kind), [&](std::ostream& o) {
        o << fmt::format("{} rules after dedup ({} contradictory dropped, {} duplicates removed)\n", rs.rules.size(),
                         rs.dropped, rs.duplicates);
        if (!filter.empty()) {
            o << "ranked among rules mentioning:";
            for (std::size_t f : filter) o << ' ' << names[f];
            o << '\n';
        }
        const auto section = [&](const char* title, const std::vector<Rule>& list) {
            o << '\n' << title << '\n';
            for (std::size_t k = 0; k < list.size(); ++k) {
                const auto& r = list[k];
                const auto& m = *r.metrics;
                o << fmt::format("{}. [{}] {} => {}  error {}  length {}  support {}  lift {}\n", k + 1, r.id,
                                 format_conditions(r, names), r.prediction, text::fixed(m.error, 2), m.length,
                                 text::fixed(m.support, 2), text::fixed(m.lift, 2));
                o << "   " << describe_rule(r, names, stats) << '\n';
                const auto hits = rule_hits(r, ds);
                o << "   recession episodes hit:";
                if (hits.episodes.empty()) o << " none";
                for (const auto& e : hits.episodes) o << ' ' << e.first.str() << ".." << e.last.str();
                o << '\n';
            }
        };
        section("Max support", by_support);
        section("Max lift", by_lift);
    });
}

void cmd_lift(const RunConfig& c) {
    const Dataset ds = build_dataset(c);
    const SplitResult s = split(c, ds);
    const Dataset& pop = population(c.lift.population, ds, s);

    std::vector<std::size_t> features;
    if (!c.lift.features.empty()) {
        for (const auto& f : c.lift.features) features.push_back(*spread_index(f));
    } else if (c.lift.use_model || c.model_file) {
        const AnyModel model = load_model(c);
        check_model_matches(model, ds);
        features = top_features(importance(shap_values(model, s.test, shap_options(c))), c.explain.top_k);
    } else {
        for (std::size_t j = 0; j < ds.features.cols(); ++j) features.push_back(j);
    }
    std::vector<LiftTable> tables;
    for (std::size_t f : features) tables.push_back(decile_lift(pop.features.column(f), pop.target, ds.feature_names[f]));
    emit(c.out / "lift.csv", [&](std::ostream& o) { write_lift_csv(o, tables); });
}

void cmd_report(const RunConfig& c) {
    require_seed(c);
    cmd_ingest(c);
    std::vector<NamedReport> reports;
    std::map<std::string, ExplainResult> explained;
    for (const ModelKind kind : {ModelKind::Forest, ModelKind::Gbm}) {
        RunConfig k = c;
        k.kind = kind;
        k.model_file.reset();
        const TrainResult trained = cmd_train(k);
        reports.push_back({kind_name(kind), trained.test_metrics});
        explained[kind_name(kind)] = cmd_explain(k);
    }
    RunConfig chosen = c;
    chosen.model_file.reset();
    cmd_rules(chosen);
    cmd_lift(chosen);

    std::ostringstream o;
    const Dataset ds = build_dataset(c);
    const SplitResult s = split(c, ds);
    o << fmt::format("spreadscope report (seed {})\n\n", *c.seed);
    o << fmt::format("rows {}  train {} ({} positives, share {})  test {} ({} positives, share {})\n\n", ds.size(),
                     s.train.size(), s.train.positives(), text::fixed(s.train.positive_share(), 3), s.test.size(),
                     s.test.positives(), text::fixed(s.test.positive_share(), 3));
    o << "Test-set classification metrics\n" << metrics_table(reports) << '\n';
    for (const auto& [kind, ex] : explained) {
        o << fmt::format("Top {} features by mean |SHAP| ({}, test set)\n", c.explain.top_k, kind);
        for (std::size_t r = 0; r < ex.test.size() && r < c.explain.top_k; ++r) {
            o << fmt::format("  {:>2}. {:<8} {}\n", ex.test[r].rank, ex.test[r].name, text::fixed(ex.test[r].mean_abs, 4));
        }
        o << '\n';
    }
    o << fmt::format("Rules: see rules_{}_labels.txt\n", kind_name(c.kind));
    write_file(c.out / "report.txt", o.str());
}

}  // namespace spreadscope::cli
