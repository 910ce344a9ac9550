#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>
#include <toml.hpp>

#include "mcdm/benchmark.hpp"
#include "mcdm/datasets.hpp"
#include "mcdm/http_backend.hpp"
#include "mcdm/judge.hpp"
#include "mcdm/lora.hpp"
#include "mcdm/metrics.hpp"
#include "mcdm/model_io.hpp"
#include "mcdm/prompt.hpp"
#include "mcdm/repository.hpp"

#ifndef MCDM_DATA_DIR
#define MCDM_DATA_DIR "data"
#endif

namespace mcdm::cli {

namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kFailure = 1, kIoFailure = 2 };

inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Io:
        case ErrorKind::Config:
        case ErrorKind::ParseError:
        case ErrorKind::EmptyFile:
        case ErrorKind::MissingColumn:
            return kIoFailure;
        default:
            return kFailure;
    }
}

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// --- configuration ---------------------------------------------------------

struct BackendSpec {
    std::string kind = "oracle";  // "oracle" or "http"
    std::string id = "oracle";
    double noise = 0.0;
    std::string base_url;
    std::string model;
    double temperature = 0.0;
    int max_retries = 3;
    long timeout_ms = 60000;
    long backoff_ms = 1000;
};

struct RunConfig {
    std::string domain = "supplier";
    std::optional<fs::path> model;
    std::optional<fs::path> schema;
    /// Labeled CSV; fixtures are synthesized when absent.
    std::optional<fs::path> data;
    fs::path data_root = MCDM_DATA_DIR;
    fs::path out = "out";
    std::uint64_t seed = 1;

    // judge run
    std::size_t fixtures = 200;
    std::size_t exemplars = 60;
    std::size_t few_shot_k = kDefaultFewShotK;
    std::vector<std::string> templates = {"zero-shot"};
    std::vector<BackendSpec> backends = {BackendSpec{}};
    std::size_t parallelism = 1;
    std::size_t max_new_records = std::numeric_limits<std::size_t>::max();

    // finetune
    std::size_t ft_fixtures = 600;
    std::size_t ft_train = 500;
    double perturbation = 1.0;
    TrainConfig train;
};

namespace detail {

template <class T>
void take(const toml::node_view<const toml::node>& n, T& dst) {
    if (!n) return;
    if (auto v = n.value<T>()) {
        dst = *v;
    } else {
        throw Error(ErrorKind::Config, "config key has the wrong type");
    }
}

inline void take_path(const toml::node_view<const toml::node>& n, std::optional<fs::path>& dst) {
    if (auto v = n.value<std::string>()) dst = *v;
}

inline void take_size(const toml::node_view<const toml::node>& n, std::size_t& dst) {
    if (!n) return;
    auto v = n.value<std::int64_t>();
    if (!v || *v < 0) throw Error(ErrorKind::Config, "config key must be a non-negative integer");
    dst = static_cast<std::size_t>(*v);
}

}  // namespace detail

/// Overlays a TOML file onto `cfg`; keys that are absent keep their values.
inline void apply_toml(const toml::table& t, RunConfig& cfg) {
    using detail::take;
    using detail::take_path;
    using detail::take_size;
    const toml::node_view<const toml::node> root{t};
    take(root["domain"], cfg.domain);
    take_path(root["model"], cfg.model);
    take_path(root["schema"], cfg.schema);
    take_path(root["data"], cfg.data);
    if (auto v = root["data_root"].value<std::string>()) cfg.data_root = *v;
    if (auto v = root["out"].value<std::string>()) cfg.out = *v;
    if (auto v = root["seed"].value<std::int64_t>()) cfg.seed = static_cast<std::uint64_t>(*v);

    const auto judge = root["judge"];
    take_size(judge["fixtures"], cfg.fixtures);
    take_size(judge["exemplars"], cfg.exemplars);
    take_size(judge["few_shot_k"], cfg.few_shot_k);
    take_size(judge["parallelism"], cfg.parallelism);
    if (const auto* arr = judge["templates"].as_array()) {
        cfg.templates.clear();
        for (const auto& e : *arr) {
            auto s = e.value<std::string>();
            if (!s) throw Error(ErrorKind::Config, "judge.templates must be strings");
            cfg.templates.push_back(*s);
        }
    }
    if (const auto* arr = judge["backends"].as_array()) {
        cfg.backends.clear();
        for (const auto& e : *arr) {
            const auto* tb = e.as_table();
            if (!tb) throw Error(ErrorKind::Config, "judge.backends entries must be tables");
            const toml::node_view<const toml::node> b{*tb};
            BackendSpec spec;
            take(b["kind"], spec.kind);
            spec.id = spec.kind;
            take(b["id"], spec.id);
            take(b["noise"], spec.noise);
            take(b["base_url"], spec.base_url);
            take(b["model"], spec.model);
            take(b["temperature"], spec.temperature);
            if (auto v = b["max_retries"].value<std::int64_t>()) spec.max_retries = static_cast<int>(*v);
            if (auto v = b["timeout_ms"].value<std::int64_t>()) spec.timeout_ms = static_cast<long>(*v);
            if (auto v = b["backoff_ms"].value<std::int64_t>()) spec.backoff_ms = static_cast<long>(*v);
            cfg.backends.push_back(spec);
        }
    }

    const auto ft = root["finetune"];
    take_size(ft["fixtures"], cfg.ft_fixtures);
    take_size(ft["train"], cfg.ft_train);
    take(ft["perturbation"], cfg.perturbation);
    if (auto v = ft["steps"].value<std::int64_t>()) cfg.train.steps = static_cast<int>(*v);
    take(ft["lr"], cfg.train.lr);
    take_size(ft["batch"], cfg.train.batch);
    take(ft["sigma"], cfg.train.sigma);
    take_size(ft["rank"], cfg.train.rank);
    take(ft["alpha"], cfg.train.alpha);
    if (auto v = ft["base_steps"].value<std::int64_t>()) cfg.train.base_steps = static_cast<int>(*v);
    take(ft["base_lr"], cfg.train.base_lr);
}

inline void load_config(const fs::path& path, RunConfig& cfg) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "config file " + path.string() + " does not exist");
    try {
        apply_toml(toml::parse_file(path.string()), cfg);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << path.string() << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw Error(ErrorKind::Config, os.str());
    }
}

// --- shared plumbing -------------------------------------------------------

inline DomainConfig load_domain(const RunConfig& cfg) {
    const auto domain = domain_from_string(cfg.domain);
    const std::string stem = domain == Domain::Supplier             ? "supplier"
                             : domain == Domain::CustomerSatisfaction ? "customer_satisfaction"
                                                                      : "air_quality";
    const auto model_path = cfg.model.value_or(cfg.data_root / "models" / (stem + ".json"));
    const auto schema_path = cfg.schema.value_or(cfg.data_root / "schemas" / (stem + ".json"));
    DomainConfig dc{load_model(model_path), load_schema(schema_path)};
    if (dc.schema.domain != domain) {
        throw Error(ErrorKind::Config, "schema " + schema_path.string() + " is for domain " +
                                           std::string(to_string(dc.schema.domain)));
    }
    if (const auto violations = validate_model(dc.model); !violations.empty()) {
        throw Error(ErrorKind::InvalidArgument, "model " + model_path.string() + " is invalid: " +
                                                    violations.front().field + ": " + violations.front().message);
    }
    return dc;
}

inline std::vector<LabeledExample> load_labeled(const DomainConfig& dc, const fs::path& csv_path) {
    return label_records(ingest_csv(csv_path, dc.schema), dc, csv_path.filename().string());
}

inline std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline constexpr const char* kManifestName = "manifest.json";

/// Every regular file under `dir` (except the manifest itself) with its
/// size and SHA-256, sorted by relative path.
inline nlohmann::json write_manifest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    auto list = nlohmann::json::array();
    for (const auto& f : files) {
        list.push_back({{"path", fs::relative(f, dir).generic_string()},
                        {"bytes", fs::file_size(f)},
                        {"sha256", sha256_file(f)}});
    }
    nlohmann::json m = {{"files", list}};
    std::ofstream(dir / kManifestName, std::ios::binary) << m.dump(2) << '\n';
    return m;
}

inline void write_text(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

inline std::string file_stem_for(const RunMeta& m) {
    std::string s = m.backend_id + "__" + (m.template_id.empty() ? "all" : m.template_id);
    for (char& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+')) c = '_';
    }
    return s;
}

inline void write_report_files(const fs::path& dir, const std::string& stem, const EvalReport& r) {
    write_text(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
    std::ostringstream csv;
    write_report_csv(csv, r);
    write_text(dir / (stem + ".csv"), csv.str());
}

inline void write_delta_files(const fs::path& dir, const std::string& stem, const DeltaTable& t) {
    write_text(dir / (stem + ".json"), to_json(t).dump(2) + "\n");
    std::ostringstream csv;
    write_delta_csv(csv, t);
    write_text(dir / (stem + ".csv"), csv.str());
}

inline void print_report_line(std::ostream& os, const EvalReport& r) {
    os << r.meta.backend_id << "  " << r.meta.template_id << "  macro P=" << mcdm::detail::fixed(r.macro.precision, 3)
       << " R=" << mcdm::detail::fixed(r.macro.recall, 3) << " F1=" << mcdm::detail::fixed(r.macro.f1, 3)
       << "  n=" << r.confusion.total() << " unparsed=" << r.confusion.unparsed << '\n';
}

template <class F>
int guarded(Streams io, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        io.err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        io.err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const nlohmann::json::exception& e) {
        io.err << "error: " << e.what() << '\n';
        return kIoFailure;
    }
}

// --- commands --------------------------------------------------------------

inline int cmd_model_validate(const fs::path& path, Streams io) {
    return guarded(io, [&] {
        const auto model = load_model(path);
        for (const auto& gap : level_gaps(model)) io.out << "warning: " << gap << '\n';
        const auto violations = validate_model(model);
        for (const auto& v : violations) io.out << "violation: " << v.field << ": " << v.message << '\n';
        if (!violations.empty()) return int(kFailure);
        io.out << model.name << ": ok (" << model.dimensions.size() << " dimensions, " << model.criterion_count()
               << " criteria)\n";
        return int(kOk);
    });
}

inline int cmd_data_synth(const RunConfig& cfg, std::size_t n, Streams io) {
    return guarded(io, [&] {
        if (n < 1) throw Error(ErrorKind::InvalidArgument, "fixture count must be >= 1");
        const auto dc = load_domain(cfg);
        const auto examples = synthesize_fixtures(dc, n, cfg.seed);
        fs::create_directories(cfg.out);
        std::ostringstream os;
        write_examples_csv(os, examples, dc.schema);
        write_text(cfg.out / "fixtures.csv", os.str());
        write_manifest(cfg.out);
        io.out << "wrote " << examples.size() << " " << cfg.domain << " fixtures to "
               << (cfg.out / "fixtures.csv").string() << '\n';
        return int(kOk);
    });
}

inline int cmd_data_ingest(const RunConfig& cfg, const fs::path& input, Streams io) {
    return guarded(io, [&] {
        const auto dc = load_domain(cfg);
        const auto examples = load_labeled(dc, input);
        fs::create_directories(cfg.out);
        std::ostringstream os;
        write_examples_csv(os, examples, dc.schema);
        write_text(cfg.out / "examples.csv", os.str());
        write_manifest(cfg.out);
        std::map<std::string, std::size_t> hist;
        for (const auto& e : examples) ++hist[e.grade];
        io.out << "ingested " << examples.size() << " records:";
        for (const auto& g : dc.model.grades.labels()) io.out << ' ' << g << '=' << hist[g];
        io.out << '\n';
        return int(kOk);
    });
}

inline std::shared_ptr<JudgeBackend> make_backend(const BackendSpec& spec, const RunConfig& cfg,
                                                  const DomainConfig& dc, const std::vector<LabeledExample>& problems) {
    if (spec.kind == "oracle") {
        TruthFn truth;
        if (dc.schema.domain == Domain::Supplier) {
            truth = fce_truth(dc.model);
        } else {
            std::map<long, std::string> table;
            for (std::size_t i = 0; i < problems.size(); ++i) table[static_cast<long>(i)] = problems[i].grade;
            truth = table_truth(std::move(table));
        }
        return std::make_shared<OracleBackend>(spec.id, std::move(truth), dc.model.grades, spec.noise,
                                               derive_seed(cfg.seed, "oracle:" + spec.id));
    }
    if (spec.kind == "http") {
        if (spec.base_url.empty() || spec.model.empty()) {
            throw Error(ErrorKind::Config, "http backend \"" + spec.id + "\" needs base_url and model");
        }
        HttpBackendConfig hc;
        hc.id = spec.id;
        hc.base_url = spec.base_url;
        hc.model = spec.model;
        hc.temperature = spec.temperature;
        hc.max_retries = spec.max_retries;
        hc.timeout = std::chrono::milliseconds{spec.timeout_ms};
        hc.backoff_base = std::chrono::milliseconds{spec.backoff_ms};
        return std::make_shared<HttpBackend>(hc);
    }
    throw Error(ErrorKind::Config, "unknown backend kind \"" + spec.kind + "\"");
}

/// Problems and a disjoint exemplar pool, from fixtures or a labeled CSV.
inline std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> judge_inputs(const RunConfig& cfg,
                                                                                       const DomainConfig& dc) {
    if (cfg.data) {
        auto all = load_labeled(dc, *cfg.data);
        if (cfg.exemplars >= all.size()) {
            throw Error(ErrorKind::InsufficientExamples, "data has too few rows for the exemplar pool");
        }
        auto s = split_count(all, cfg.exemplars, derive_seed(cfg.seed, "exemplar-split"));
        return {std::move(s.test), std::move(s.train)};
    }
    auto problems = synthesize_fixtures(dc, cfg.fixtures, derive_seed(cfg.seed, "problems"));
    std::vector<LabeledExample> pool;
    if (cfg.exemplars > 0) pool = synthesize_fixtures(dc, cfg.exemplars, derive_seed(cfg.seed, "exemplar-pool"));
    return {std::move(problems), std::move(pool)};
}

/// Writes reports/ for every (backend, template) group, plus delta.* when
/// there are exactly two groups.
inline std::vector<EvalReport> write_reports(const fs::path& out, const std::vector<RepositoryRecord>& records,
                                             Streams io) {
    const auto reports = reports_from_records(records);
    for (const auto& r : reports) {
        write_report_files(out / "reports", file_stem_for(r.meta), r);
        print_report_line(io.out, r);
    }
    if (reports.size() == 2) write_delta_files(out, "delta", compare_runs(reports[0], reports[1]));
    return reports;
}

inline int cmd_judge_run(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        const auto dc = load_domain(cfg);
        if (cfg.templates.empty()) throw Error(ErrorKind::Config, "no prompt templates configured");
        if (cfg.backends.empty()) throw Error(ErrorKind::Config, "no judge backends configured");
        std::vector<PromptTemplate> templates;
        for (const auto& t : cfg.templates) templates.push_back(parse_template_spec(t, cfg.few_shot_k));
        const auto [problems, pool] = judge_inputs(cfg, dc);

        std::vector<std::shared_ptr<JudgeBackend>> backends;
        bool deterministic = true;
        for (const auto& spec : cfg.backends) {
            backends.push_back(make_backend(spec, cfg, dc, problems));
            deterministic = deterministic && backends.back()->deterministic();
        }

        fs::create_directories(cfg.out);
        Repository repo(cfg.out / "repository.jsonl");
        BenchmarkOptions opt;
        opt.domain = std::string(to_string(dc.schema.domain));
        opt.exemplar_pool = pool;
        opt.exemplar_seed = derive_seed(cfg.seed, "exemplars");
        opt.parallelism = cfg.parallelism;
        opt.clock = deterministic ? fixed_clock() : Clock(utc_now);
        opt.max_new_records = cfg.max_new_records;
        std::size_t logged = 0;
        opt.log = [&](const std::string& msg) {
            if (logged++ < 10) io.err << "judge error: " << msg << '\n';
        };
        const auto summary = run_benchmark(problems, templates, backends, dc.model, repo, opt);
        io.out << "records: " << summary.added << " added, " << summary.skipped << " already present, "
               << summary.unparsed << " unparsed, " << summary.errors.size() << " failed\n";

        if (!repo.records().empty()) write_reports(cfg.out, repo.records(), io);
        write_manifest(cfg.out);
        if (!summary.errors.empty()) {
            io.err << summary.errors.size() << " judge calls failed; rerun to retry them\n";
            return int(kFailure);
        }
        return int(kOk);
    });
}

inline EvalReport classifier_report(const std::vector<std::size_t>& predicted, const std::vector<Sample>& data,
                                    const GradeSet& grades, RunMeta meta) {
    ConfusionMatrix cm(grades.labels());
    for (std::size_t i = 0; i < data.size(); ++i) cm.add(grades.label(data[i].label), grades.label(predicted[i]));
    return make_report(std::move(cm), std::move(meta));
}

struct FinetuneResult {
    EvalReport before;
    EvalReport after;
};

/// Trains adapters on the frozen base and scores base and merged models on
/// the held-out split. Fixture seeds derive from cfg.seed.
inline FinetuneResult finetune(const RunConfig& cfg, const DomainConfig& dc, TrainResult* trained = nullptr) {
    std::vector<LabeledExample> all =
        cfg.data ? load_labeled(dc, *cfg.data) : synthesize_fixtures(dc, cfg.ft_fixtures, derive_seed(cfg.seed, "fixtures"));
    if (cfg.ft_train == 0 || cfg.ft_train >= all.size()) {
        throw Error(ErrorKind::InvalidArgument, "train count must leave a non-empty test split");
    }
    const auto sp = split_count(all, cfg.ft_train, derive_seed(cfg.seed, "split"));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");

    const auto base = pretrain_base(sp.train, dc.model, cfg.perturbation, tc);
    const auto train_set = to_samples(sp.train, dc.model);
    const auto test_set = to_samples(sp.test, dc.model);
    auto result = train(base, tc, train_set);
    const auto merged = merge(base, result.adapters);

    std::vector<std::size_t> pb, pa;
    for (const auto& s : test_set) {
        pb.push_back(predict(base, s.x));
        pa.push_back(predict(merged, s.x));
    }
    const auto domain = std::string(to_string(dc.schema.domain));
    FinetuneResult out{classifier_report(pb, test_set, dc.model.grades, {"surrogate-base", "linear", domain}),
                       classifier_report(pa, test_set, dc.model.grades, {"surrogate-tuned", "linear", domain})};
    if (trained) *trained = std::move(result);
    return out;
}

inline int cmd_finetune(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        const auto dc = load_domain(cfg);
        TrainResult trained;
        const auto res = finetune(cfg, dc, &trained);
        fs::create_directories(cfg.out);
        write_text(cfg.out / "adapters.json", to_json(trained.adapters).dump(2) + "\n");
        std::ostringstream trace;
        write_loss_trace(trace, trained.loss_trace);
        write_text(cfg.out / "loss_trace.csv", trace.str());
        write_report_files(cfg.out, "report_before", res.before);
        write_report_files(cfg.out, "report_after", res.after);
        write_delta_files(cfg.out, "delta", compare_runs(res.before, res.after));
        write_manifest(cfg.out);
        io.out << "before: ";
        print_report_line(io.out, res.before);
        io.out << "after:  ";
        print_report_line(io.out, res.after);
        return int(kOk);
    });
}

inline std::vector<RepositoryRecord> read_repository(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "repository " + path.string() + " does not exist");
    return Repository(path).records();
}

inline int cmd_report(const fs::path& repo_path, const fs::path& out, Streams io) {
    return guarded(io, [&] {
        const auto records = read_repository(repo_path);
        fs::create_directories(out);
        write_reports(out, records, io);
        write_manifest(out);
        return int(kOk);
    });
}

inline EvalReport read_report(const fs::path& path) { return report_from_json(read_json_file(path)); }

inline int cmd_compare(const fs::path& a, const fs::path& b, const fs::path& out, Streams io) {
    return guarded(io, [&] {
        const auto t = compare_runs(read_report(a), read_report(b));
        fs::create_directories(out);
        write_delta_files(out, "delta", t);
        write_manifest(out);
        const auto& m = t.find("macro");
        io.out << "macro delta (b - a): P=" << mcdm::detail::fixed(m.precision, 3) << " R=" << mcdm::detail::fixed(m.recall, 3)
               << " F1=" << mcdm::detail::fixed(m.f1, 3) << '\n';
        return int(kOk);
    });
}

}  // namespace mcdm::cli
