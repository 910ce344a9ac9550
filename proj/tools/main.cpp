#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace mcdm::cli;

// Flags captured as optionals so that only flags actually given override the
// config file.
struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> domain;
    std::optional<std::string> model;
    std::optional<std::string> schema;
    std::optional<std::string> data;
    std::optional<std::string> data_root;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> fixtures;
    std::optional<std::size_t> exemplars;
    std::optional<std::size_t> parallelism;
    std::vector<std::string> templates;
    std::optional<double> noise;
    std::optional<int> steps;
    std::optional<double> lr;
    std::optional<std::size_t> rank;
    std::optional<double> alpha;
    std::optional<double> perturbation;

    void add_common(CLI::App* app) {
        app->add_option("--config", config, "TOML run configuration");
        app->add_option("--domain", domain, "supplier | customer-satisfaction | air-quality");
        app->add_option("--model", model, "decision model JSON (default: bundled model for the domain)");
        app->add_option("--schema", schema, "record schema JSON (default: bundled schema for the domain)");
        app->add_option("--data-root", data_root, "directory holding models/ and schemas/");
        app->add_option("--out", out, "output directory");
        app->add_option("--seed", seed, "top-level seed");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (config) load_config(*config, cfg);
        if (domain) cfg.domain = *domain;
        if (model) cfg.model = *model;
        if (schema) cfg.schema = *schema;
        if (data) cfg.data = *data;
        if (data_root) cfg.data_root = *data_root;
        if (out) cfg.out = *out;
        if (seed) cfg.seed = *seed;
        if (fixtures) cfg.fixtures = *fixtures;
        if (exemplars) cfg.exemplars = *exemplars;
        if (parallelism) cfg.parallelism = *parallelism;
        if (!templates.empty()) cfg.templates = templates;
        if (noise) {
            for (auto& b : cfg.backends) {
                if (b.kind == "oracle") b.noise = *noise;
            }
        }
        if (steps) cfg.train.steps = *steps;
        if (lr) cfg.train.lr = *lr;
        if (rank) cfg.train.rank = *rank;
        if (alpha) cfg.train.alpha = *alpha;
        if (perturbation) cfg.perturbation = *perturbation;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcdm: AHP/FCE decision models, LLM judge benchmarking and adapter fine-tuning"};
    app.require_subcommand(1);
    Flags flags;
    Streams io{std::cout, std::cerr};
    int status = kOk;

    auto* model_cmd = app.add_subcommand("model", "decision model tools");
    model_cmd->require_subcommand(1);
    std::string model_path;
    auto* validate = model_cmd->add_subcommand("validate", "check weights, levels and consistency");
    validate->add_option("path", model_path, "model JSON")->required();

    auto* data_cmd = app.add_subcommand("data", "data preparation");
    data_cmd->require_subcommand(1);
    std::size_t synth_n = 500;
    auto* synth = data_cmd->add_subcommand("synth", "write seeded synthetic fixtures");
    flags.add_common(synth);
    synth->add_option("-n,--count", synth_n, "number of fixtures")->capture_default_str();
    std::string ingest_input;
    auto* ingest = data_cmd->add_subcommand("ingest", "validate, map and label a CSV");
    flags.add_common(ingest);
    ingest->add_option("input", ingest_input, "CSV file")->required();

    auto* judge_cmd = app.add_subcommand("judge", "LLM judge benchmarking");
    judge_cmd->require_subcommand(1);
    auto* run = judge_cmd->add_subcommand("run", "run the problem x template x backend sweep");
    flags.add_common(run);
    run->add_option("--data", flags.data, "labeled CSV instead of fixtures");
    run->add_option("--fixtures", flags.fixtures, "number of fixture problems");
    run->add_option("--exemplars", flags.exemplars, "exemplar pool size");
    run->add_option("--parallelism", flags.parallelism, "judge calls in flight");
    run->add_option("--template", flags.templates, "prompt template (repeatable), e.g. cot+weighted");
    run->add_option("--noise", flags.noise, "label noise for oracle backends");

    auto* ft = app.add_subcommand("finetune", "train low-rank adapters on a frozen surrogate");
    flags.add_common(ft);
    ft->add_option("--data", flags.data, "labeled CSV instead of fixtures");
    ft->add_option("--steps", flags.steps, "gradient steps");
    ft->add_option("--lr", flags.lr, "learning rate");
    ft->add_option("--rank", flags.rank, "adapter rank");
    ft->add_option("--alpha", flags.alpha, "adapter scale");
    ft->add_option("--perturbation", flags.perturbation, "base weight perturbation in [0, 1]");

    std::string repo_path;
    auto* report = app.add_subcommand("report", "metrics from a judge repository");
    report->add_option("repository", repo_path, "repository JSONL")->required();
    report->add_option("--out", flags.out, "output directory");

    std::string report_a, report_b;
    auto* compare = app.add_subcommand("compare", "delta table between two report JSON files");
    compare->add_option("a", report_a, "baseline report")->required();
    compare->add_option("b", report_b, "candidate report")->required();
    compare->add_option("--out", flags.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kIoFailure;
    }

    const auto with_config = [&](auto&& cmd) {
        return guarded(io, [&] { return cmd(flags.resolve()); });
    };

    if (validate->parsed()) {
        status = cmd_model_validate(model_path, io);
    } else if (synth->parsed()) {
        status = with_config([&](const RunConfig& c) { return cmd_data_synth(c, synth_n, io); });
    } else if (ingest->parsed()) {
        status = with_config([&](const RunConfig& c) { return cmd_data_ingest(c, ingest_input, io); });
    } else if (run->parsed()) {
        status = with_config([&](const RunConfig& c) { return cmd_judge_run(c, io); });
    } else if (ft->parsed()) {
        status = with_config([&](const RunConfig& c) { return cmd_finetune(c, io); });
    } else if (report->parsed()) {
        status = cmd_report(repo_path, flags.out.value_or("out"), io);
    } else if (compare->parsed()) {
        status = cmd_compare(report_a, report_b, flags.out.value_or("out"), io);
    }
    return status;
}
