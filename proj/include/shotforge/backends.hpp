#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>

#include "shotforge/estimator.hpp"

namespace shotforge {

/// Environment variable holding the bearer token for the HTTP backend.
inline constexpr const char* kApiKeyEnv = "SHOTFORGE_API_KEY";

/// Spaces calls evenly so that at most `requests_per_minute` start in any
/// minute, across all threads sharing the limiter.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute);
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_slot_;
};

/// OpenAI-compatible chat-completions client:
/// POST {endpoint_url}/v1/chat/completions with one user message.
class LlmBackend final : public EstimatorBackend {
public:
    LlmBackend(EstimatorConfig cfg, std::string api_key);

    std::string complete(const EstimateRequest& request, const std::string& prompt) override;
    std::string model_name() const override { return cfg_.model_name; }

    /// Request body for a prompt.
    std::string request_body(const std::string& prompt) const;

    /// HTTP requests issued by every LlmBackend in this process.
    static std::size_t total_requests() noexcept { return total_requests_.load(); }

private:
    EstimatorConfig cfg_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;
    RateLimiter limiter_;
    static std::atomic<std::size_t> total_requests_;
};

/// Reads the API key from the environment; throws AuthError when it is
/// missing or empty, before any network activity.
std::unique_ptr<LlmBackend> llm_backend(const EstimatorConfig& cfg);

/// Offline deterministic estimator: answers with the story points of the
/// shot whose lowercase word set has the highest Jaccard similarity with the
/// target (earliest shot on ties), or the median allowed value when there are
/// no shots. Answers read "<value> Story Points".
class MockSimilarityBackend final : public EstimatorBackend {
public:
    std::string complete(const EstimateRequest& request, const std::string& prompt) override;
    std::string model_name() const override { return "mock-similarity"; }
};

std::set<std::string> word_set(const std::string& text);
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Answers from recorded responses keyed by prompt digest; throws
/// MissingFixture for anything not recorded.
class ReplayBackend final : public EstimatorBackend {
public:
    ReplayBackend(std::unordered_map<std::string, std::string> fixture, std::string model);

    /// Accepts a cache JSON-lines file or a JSON object {digest: response}.
    static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path& path,
                                                    std::string model);

    std::string complete(const EstimateRequest& request, const std::string& prompt) override;
    std::string model_name() const override { return model_; }

private:
    std::unordered_map<std::string, std::string> fixture_;
    std::string model_;
};

}  // namespace shotforge
