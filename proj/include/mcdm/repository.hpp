#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mcdm/error.hpp"
#include "mcdm/text.hpp"

namespace mcdm {

inline constexpr std::string_view kRepositorySchema = "mcdm-judge-repository";
inline constexpr int kRepositoryVersion = 1;
/// Stored in place of a grade when the completion could not be parsed.
inline constexpr std::string_view kUnparsedGrade = "<unparsed>";

struct Verdict {
    std::string grade;
    std::string raw_completion;
    std::optional<std::string> rationale;
    std::string backend_id;
    std::chrono::milliseconds latency{0};
};

struct RecordKey {
    long problem_id = 0;
    std::string template_id;
    std::string backend_id;

    friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

struct RepositoryRecord {
    long problem_id = 0;
    std::string template_id;
    std::string backend_id;
    std::string domain;
    std::vector<std::string> grade_labels;
    Verdict verdict;
    std::string ground_truth;
    std::string timestamp;

    RecordKey key() const { return {problem_id, template_id, backend_id}; }
    bool parsed() const { return verdict.grade != kUnparsedGrade; }
};

inline nlohmann::json to_json(const RepositoryRecord& r) {
    nlohmann::json v = {
        {"grade", r.verdict.grade},
        {"raw_completion", r.verdict.raw_completion},
        {"backend_id", r.verdict.backend_id},
        {"latency_ms", r.verdict.latency.count()},
    };
    v["rationale"] = r.verdict.rationale ? nlohmann::json(*r.verdict.rationale) : nlohmann::json(nullptr);
    return {
        {"problem_id", r.problem_id},     {"template_id", r.template_id}, {"backend_id", r.backend_id},
        {"domain", r.domain},             {"grades", r.grade_labels},     {"verdict", v},
        {"ground_truth", r.ground_truth}, {"timestamp", r.timestamp},
    };
}

inline RepositoryRecord record_from_json(const nlohmann::json& j) {
    RepositoryRecord r;
    r.problem_id = j.at("problem_id").get<long>();
    r.template_id = j.at("template_id").get<std::string>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.domain = j.at("domain").get<std::string>();
    r.grade_labels = j.at("grades").get<std::vector<std::string>>();
    const auto& v = j.at("verdict");
    r.verdict.grade = v.at("grade").get<std::string>();
    r.verdict.raw_completion = v.at("raw_completion").get<std::string>();
    r.verdict.backend_id = v.at("backend_id").get<std::string>();
    r.verdict.latency = std::chrono::milliseconds{v.at("latency_ms").get<long long>()};
    if (v.contains("rationale") && !v.at("rationale").is_null()) r.verdict.rationale = v.at("rationale").get<std::string>();
    r.ground_truth = j.at("ground_truth").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
}

/// Append-only JSONL store: a schema header line, then one record per line.
/// Keys (problem, template, backend) are unique; appending a present key is
/// rejected.
class Repository {
public:
    explicit Repository(std::filesystem::path path) : path_(std::move(path)) {
        if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) {
            load();
        } else {
            if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
            std::ofstream out(path_, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(ErrorKind::Io, "cannot create repository " + path_.string());
            out << nlohmann::json{{"schema", kRepositorySchema}, {"version", kRepositoryVersion}}.dump() << '\n';
            if (!out) throw Error(ErrorKind::Io, "cannot write repository " + path_.string());
        }
    }

    const std::filesystem::path& path() const noexcept { return path_; }
    const std::vector<RepositoryRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool contains(const RecordKey& key) const { return keys_.contains(key); }

    void append(const RepositoryRecord& r) {
        if (!keys_.insert(r.key()).second) {
            throw Error(ErrorKind::InvalidArgument, "duplicate repository key (problem " + std::to_string(r.problem_id) +
                                                        ", " + r.template_id + ", " + r.backend_id + ")");
        }
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        out << to_json(r).dump() << '\n';
        out.flush();
        if (!out) {
            keys_.erase(r.key());
            throw Error(ErrorKind::Io, "cannot append to repository " + path_.string());
        }
        records_.push_back(r);
    }

private:
    void load() {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "cannot open repository " + path_.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorKind::Io, path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (lineno == 1) {
                if (j.value("schema", std::string{}) != kRepositorySchema) {
                    throw Error(ErrorKind::Io, path_.string() + " is not a judge repository");
                }
                if (j.value("version", 0) != kRepositoryVersion) {
                    throw Error(ErrorKind::Io, path_.string() + ": unsupported repository version");
                }
                continue;
            }
            try {
                auto r = record_from_json(j);
                keys_.insert(r.key());
                records_.push_back(std::move(r));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::Io, path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }

    std::filesystem::path path_;
    std::vector<RepositoryRecord> records_;
    std::set<RecordKey> keys_;
};

using Clock = std::function<std::string()>;

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Fixed timestamp for deterministic runs, so reruns are byte-identical.
inline Clock fixed_clock(std::string stamp = "1970-01-01T00:00:00Z") {
    return [stamp = std::move(stamp)] { return stamp; };
}

}  // namespace mcdm
