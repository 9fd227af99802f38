#pragma once

// Story-point estimation for one target issue given a shot set: prompt
// rendering, backend invocation, numeric extraction and cached retries.

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "shotforge/cache.hpp"
#include "shotforge/domain.hpp"

namespace shotforge {

struct Shot {
    std::string text;
    double story_points = 0.0;
};

struct EstimateRequest {
    std::vector<Shot> shots;  ///< empty means zero-shot
    std::string target_text;
    AllowedValues allowed;
};

/// Renders the estimation prompt. Template segments are joined by single
/// spaces and the prompt ends with one newline:
///
///   You are asked to estimate effort for the user story given in <>.
///   Use [v1, v2, ...] as estimated value.
///   [A few example user stories ... in the following: <text>. <sp> Story Points. ...]
///   Estimate the following user story and generate the output as a single
///   scalar number only, equal to the estimated story point value. <target>
///
/// The examples block is present only when there are shots; shots appear in
/// the given order.
std::string build_prompt(const EstimateRequest& req);

/// Extracts the estimate from a model answer: a number directly followed by
/// "story point(s)" (any case) wins, otherwise the first numeric literal.
/// The value is returned as written. Throws Unparseable.
double parse_estimate(std::string_view raw);

/// Anything that answers an estimation request with raw text.
class EstimatorBackend {
public:
    virtual ~EstimatorBackend() = default;
    /// `prompt` is build_prompt(request); backends use whichever suits them.
    /// Must be safe to call concurrently.
    virtual std::string complete(const EstimateRequest& request, const std::string& prompt) = 0;
    /// Model identity mixed into cache digests.
    virtual std::string model_name() const = 0;
};

struct EstimatorConfig {
    std::string endpoint_url;
    /// Deployment-specific; no default.
    std::string model_name;
    double temperature = 0.0;
    int max_retries = 2;
    std::chrono::milliseconds timeout{60000};
    int requests_per_minute = 60;
    std::chrono::milliseconds retry_backoff{1000};
    /// Answer with the median allowed value once retries are exhausted.
    bool fallback_enabled = true;
    /// Round parsed estimates to the nearest allowed value.
    bool snap_to_allowed = false;
};

/// Throws ConfigError naming the offending field.
void validate(const EstimatorConfig& cfg);

struct EstimateOutcome {
    double value = 0.0;
    bool fallback = false;
    bool cache_hit = false;
};

/// Cache-fronted estimation with retries. Thread-safe.
class Estimator {
public:
    Estimator(std::shared_ptr<EstimatorBackend> backend, std::shared_ptr<ResponseCache> cache,
              EstimatorConfig cfg);

    /// Cache hit returns the stored result without calling the backend. On a
    /// miss the backend is tried up to 1 + max_retries times (transport
    /// failures and unparseable answers are retried with exponential
    /// backoff). When every attempt fails the median allowed value is
    /// returned with fallback set, or BackendError is thrown if fallback is
    /// disabled. AuthError and MissingFixture are never retried.
    EstimateOutcome estimate(const EstimateRequest& req);

    std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
    std::size_t fallbacks() const noexcept { return fallbacks_.load(); }

    const EstimatorBackend& backend() const noexcept { return *backend_; }
    ResponseCache& cache() noexcept { return *cache_; }

private:
    std::shared_ptr<EstimatorBackend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    EstimatorConfig cfg_;
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
    std::atomic<std::size_t> fallbacks_{0};
};

}  // namespace shotforge
