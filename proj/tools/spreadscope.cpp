// spreadscope: yield-curve spreads, recession classifiers, SHAP and rules.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "spreadscope/error.hpp"

namespace {

using namespace spreadscope;
using namespace spreadscope::cli;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<std::string> out;
    std::optional<std::string> model_file;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->required();
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--model", o.model, "model kind: rf or gbm");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--model-file", o.model_file, "model JSON to explain or mine");
    cmd->add_option("--threads", o.threads, "worker threads");
}

RunConfig resolve(const Overrides& o) {
    RunConfig c = load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.model) c.kind = parse_kind(*o.model);
    if (o.out) c.out = *o.out;
    if (o.model_file) c.model_file = *o.model_file;
    if (o.threads) {
        if (*o.threads < 1) throw ConfigError("--threads must be >= 1");
        c.threads = *o.threads;
    }
    return c;
}

bool is_user_error(const std::exception& e) {
    return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
           dynamic_cast<const AlignmentError*>(&e) || dynamic_cast<const SplitError*>(&e) ||
           dynamic_cast<const ModelFormatError*>(&e) || dynamic_cast<const ExplainError*>(&e) ||
           dynamic_cast<const FetchError*>(&e) || dynamic_cast<const LabelError*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Yield-curve spread recession models: ingest, train, explain, rules, lift, report"};
    app.require_subcommand(1);
    Overrides o;
    std::function<void(const RunConfig&)> action;

    const auto command = [&](const char* name, const char* help, std::function<void(const RunConfig&)> fn) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, o);
        cmd->callback([&action, fn] { action = fn; });
    };
    command("ingest", "parse inputs, write the dataset, statistics and correlations", cli::cmd_ingest);
    command("train", "fit a model on the training window and evaluate it on the test window",
            [](const RunConfig& c) { cli::cmd_train(c); });
    command("explain", "SHAP importance, summary and dependence artifacts", [](const RunConfig& c) { cli::cmd_explain(c); });
    command("rules", "extract, score and rank decision rules", cli::cmd_rules);
    command("lift", "decile lift tables", cli::cmd_lift);
    command("report", "run the whole pipeline for both model kinds", cli::cmd_report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action(resolve(o));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_user_error(e) ? 2 : 1;
    }
}
