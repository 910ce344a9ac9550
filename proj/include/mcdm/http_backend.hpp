#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mcdm/error.hpp"
#include "mcdm/judge.hpp"

namespace mcdm {

inline constexpr const char* kApiKeyEnv = "MCDM_JUDGE_API_KEY";

struct HttpBackendConfig {
    std::string id = "http";
    /// e.g. "https://api.openai.com/v1" or "http://localhost:8000/v1".
    std::string base_url;
    std::string model;
    /// Falls back to $MCDM_JUDGE_API_KEY when unset; no header is sent when
    /// neither is present.
    std::optional<std::string> api_key;
    double temperature = 0.0;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    std::chrono::milliseconds timeout{60000};
};

/// OpenAI-compatible chat-completions client. Retries connection failures,
/// 408/429 and 5xx with exponential backoff; 401/403 fail immediately.
class HttpBackend final : public JudgeBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        const auto scheme_end = cfg_.base_url.find("://");
        if (scheme_end == std::string::npos) {
            throw Error(ErrorKind::Config, "base_url \"" + cfg_.base_url + "\" has no scheme");
        }
        const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
        host_ = cfg_.base_url.substr(0, path_start);
        path_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
        while (!path_.empty() && path_.back() == '/') path_.pop_back();
        path_ += "/chat/completions";
        if (!cfg_.api_key) {
            if (const char* env = std::getenv(kApiKeyEnv); env && *env) cfg_.api_key = env;
        }
    }

    const std::string& id() const override { return cfg_.id; }
    bool deterministic() const override { return false; }
    const std::string& endpoint_path() const noexcept { return path_; }

    Completion complete(const PromptContext& ctx) override {
        const nlohmann::json body = {
            {"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", ctx.text}}})},
        };
        const auto payload = body.dump();

        ErrorKind last_kind = ErrorKind::Transport;
        std::string last_detail;
        auto delay = cfg_.backoff_base;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
            }
            // One client per call: calls may run on several threads at once.
            httplib::Client client(host_);
            client.set_connection_timeout(cfg_.timeout);
            client.set_read_timeout(cfg_.timeout);
            client.set_write_timeout(cfg_.timeout);
            httplib::Headers headers;
            if (cfg_.api_key) headers.emplace("Authorization", "Bearer " + *cfg_.api_key);

            const auto start = std::chrono::steady_clock::now();
            auto res = client.Post(path_, headers, payload, "application/json");
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);

            if (!res) {
                const auto err = res.error();
                last_kind = (err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= cfg_.timeout))
                                ? ErrorKind::Timeout
                                : ErrorKind::Transport;
                last_detail = httplib::to_string(err);
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw JudgeError(ErrorKind::AuthFailure, cfg_.id, ctx.problem_id,
                                 "HTTP " + std::to_string(res->status) + " (check " + kApiKeyEnv + ")");
            }
            if (res->status == 408 || res->status == 429 || res->status >= 500) {
                last_kind = res->status == 408 ? ErrorKind::Timeout : ErrorKind::Transport;
                last_detail = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw JudgeError(ErrorKind::Transport, cfg_.id, ctx.problem_id,
                                 "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
            }
            try {
                const auto j = nlohmann::json::parse(res->body);
                return {j.at("choices").at(0).at("message").at("content").get<std::string>(), elapsed};
            } catch (const nlohmann::json::exception& e) {
                throw JudgeError(ErrorKind::Transport, cfg_.id, ctx.problem_id,
                                 std::string("malformed completion response: ") + e.what());
            }
        }
        throw JudgeError(last_kind, cfg_.id, ctx.problem_id,
                         last_detail + " after " + std::to_string(cfg_.max_retries + 1) + " attempts");
    }

private:
    HttpBackendConfig cfg_;
    std::string host_;
    std::string path_;
};

}  // namespace mcdm
