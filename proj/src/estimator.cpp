#include "shotforge/estimator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <thread>

#include "shotforge/errors.hpp"

namespace shotforge {

namespace {

constexpr std::string_view kHeader =
    "You are asked to estimate effort for the user story given in <>.";
constexpr std::string_view kExamplesIntro =
    "A few example user stories from the same project with their estimated effort are given in "
    "the following:";
constexpr std::string_view kInstruction =
    "Estimate the following user story and generate the output as a single scalar number only, "
    "equal to the estimated story point value.";

const std::regex& labelled_number() {
    static const std::regex re(R"((\d+(?:\.\d+)?|\.\d+)\s*story[\s_-]*points?)",
                               std::regex::icase | std::regex::optimize);
    return re;
}

const std::regex& any_number() {
    static const std::regex re(R"(\d+(?:\.\d+)?|\.\d+)", std::regex::optimize);
    return re;
}

double to_number(const std::string& token) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw Unparseable("cannot read number '" + token + "'");
    }
    return value;
}

}  // namespace

std::string build_prompt(const EstimateRequest& req) {
    std::string allowed = "[";
    for (std::size_t i = 0; i < req.allowed.values.size(); ++i) {
        if (i > 0) allowed += ", ";
        allowed += format_points(req.allowed.values[i]);
    }
    allowed += "]";

    std::string prompt;
    prompt += kHeader;
    prompt += " Use " + allowed + " as estimated value.";
    if (!req.shots.empty()) {
        prompt += ' ';
        prompt += kExamplesIntro;
        for (const auto& shot : req.shots) {
            prompt += ' ' + shot.text + ". " + format_points(shot.story_points) + " Story Points.";
        }
    }
    prompt += ' ';
    prompt += kInstruction;
    prompt += " <" + req.target_text + ">\n";
    return prompt;
}

double parse_estimate(std::string_view raw) {
    const std::string text(raw);
    std::smatch m;
    if (std::regex_search(text, m, labelled_number())) {
        return to_number(m[1].str());
    }
    if (std::regex_search(text, m, any_number())) {
        return to_number(m[0].str());
    }
    throw Unparseable("no numeric estimate in response: \"" + text.substr(0, 80) + "\"");
}

void validate(const EstimatorConfig& cfg) {
    if (!(cfg.temperature >= 0)) throw ConfigError("temperature must be >= 0");
    if (cfg.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (cfg.requests_per_minute < 1) throw ConfigError("requests_per_minute must be positive");
    if (cfg.timeout.count() <= 0) throw ConfigError("timeout must be positive");
    if (cfg.retry_backoff.count() < 0) throw ConfigError("retry_backoff must be >= 0");
}

Estimator::Estimator(std::shared_ptr<EstimatorBackend> backend,
                     std::shared_ptr<ResponseCache> cache, EstimatorConfig cfg)
    : backend_(std::move(backend)), cache_(std::move(cache)), cfg_(std::move(cfg)) {
    if (!backend_) throw ConfigError("estimator needs a backend");
    if (!cache_) cache_ = std::make_shared<ResponseCache>();
    validate(cfg_);
}

EstimateOutcome Estimator::estimate(const EstimateRequest& req) {
    const std::string prompt = build_prompt(req);
    const std::string model = backend_->model_name();
    const std::string digest = prompt_digest(prompt, model);
    auto finish = [&](double value, bool fallback, bool hit) {
        if (cfg_.snap_to_allowed && !fallback) value = req.allowed.snap(value);
        return EstimateOutcome{value, fallback, hit};
    };

    if (auto hit = cache_->lookup(digest)) {
        ++cache_hits_;
        if (hit->fallback) ++fallbacks_;
        return finish(hit->estimate, hit->fallback, true);
    }

    const int attempts = cfg_.max_retries + 1;
    std::string last_error;
    std::string last_response;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && cfg_.retry_backoff.count() > 0) {
            std::this_thread::sleep_for(cfg_.retry_backoff * (1 << std::min(attempt - 1, 10)));
        }
        try {
            ++backend_calls_;
            last_response = backend_->complete(req, prompt);
            const double value = parse_estimate(last_response);
            cache_->insert(CacheEntry{digest, model, last_response, value, false, utc_timestamp()});
            return finish(value, false, false);
        } catch (const AuthError&) {
            throw;
        } catch (const MissingFixture&) {
            throw;
        } catch (const BackendError& e) {
            last_error = e.what();
        } catch (const Unparseable& e) {
            last_error = e.what();
        }
    }

    if (!cfg_.fallback_enabled) {
        throw BackendError("estimation failed after " + std::to_string(attempts) +
                           " attempt(s): " + last_error);
    }
    const double value = req.allowed.median();
    ++fallbacks_;
    cache_->insert(CacheEntry{digest, model, last_response, value, true, utc_timestamp()});
    return finish(value, true, false);
}

}  // namespace shotforge
