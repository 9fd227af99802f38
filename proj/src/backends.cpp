#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "shotforge/backends.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "shotforge/cache.hpp"
#include "shotforge/errors.hpp"

namespace shotforge {

std::atomic<std::size_t> LlmBackend::total_requests_{0};

RateLimiter::RateLimiter(int requests_per_minute)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::minutes(1)) /
                std::max(requests_per_minute, 1)),
      next_slot_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

LlmBackend::LlmBackend(EstimatorConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), api_key_(std::move(api_key)), limiter_(cfg_.requests_per_minute) {
    validate(cfg_);
    const std::string& url = cfg_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint_url must start with http:// or https://, got '" + url + "'");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint_url scheme must be http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    std::string base = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!base.empty() && base.back() == '/') base.pop_back();
    path_ = base + "/v1/chat/completions";
}

std::string LlmBackend::request_body(const std::string& prompt) const {
    nlohmann::json body = {
        {"model", cfg_.model_name},
        {"temperature", cfg_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    return body.dump();
}

std::string LlmBackend::complete(const EstimateRequest&, const std::string& prompt) {
    limiter_.acquire();
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    ++total_requests_;
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, request_body(prompt), "application/json");
    if (!res) {
        const auto err = res.error();
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (err == httplib::Error::ConnectionTimeout ||
            (err == httplib::Error::Read && elapsed >= cfg_.timeout)) {
            throw TimeoutError("request to " + scheme_host_port_ + path_ + " timed out");
        }
        throw TransportError("request to " + scheme_host_port_ + path_ +
                             " failed: " + httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("endpoint rejected the API key (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status >= 400) {
        throw HttpError(res->status, "HTTP " + std::to_string(res->status) + " from " + path_ +
                                         ": " + res->body.substr(0, 200));
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed chat-completion response: ") + e.what());
    }
}

std::unique_ptr<LlmBackend> llm_backend(const EstimatorConfig& cfg) {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
        throw AuthError(std::string("environment variable ") + kApiKeyEnv + " is not set");
    }
    return std::make_unique<LlmBackend>(cfg, key);
}

std::set<std::string> word_set(const std::string& text) {
    std::set<std::string> words;
    std::string word;
    for (char ch : text) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isalnum(uc)) {
            word.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!word.empty()) {
            words.insert(std::move(word));
            word.clear();
        }
    }
    if (!word.empty()) words.insert(std::move(word));
    return words;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& w : a) common += b.count(w);
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::string MockSimilarityBackend::complete(const EstimateRequest& request, const std::string&) {
    double value = 0.0;
    if (request.shots.empty()) {
        value = request.allowed.median();
    } else {
        const auto target = word_set(request.target_text);
        double best = -1.0;
        for (const auto& shot : request.shots) {
            const double sim = jaccard(word_set(shot.text), target);
            if (sim > best) {
                best = sim;
                value = shot.story_points;
            }
        }
    }
    return format_points(value) + " Story Points";
}

ReplayBackend::ReplayBackend(std::unordered_map<std::string, std::string> fixture,
                             std::string model)
    : fixture_(std::move(fixture)), model_(std::move(model)) {}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path,
                                                        std::string model) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open replay fixture " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::unordered_map<std::string, std::string> fixture;

    // A whole-file JSON object maps digests to responses directly.
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.is_object() && !j.contains("digest")) {
            for (const auto& [digest, response] : j.items()) {
                fixture.emplace(digest, response.get<std::string>());
            }
            return std::make_unique<ReplayBackend>(std::move(fixture), std::move(model));
        }
    } catch (const nlohmann::json::exception&) {
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        try {
            const auto entry = CacheEntry::from_json(nlohmann::json::parse(line));
            if (!entry.fallback) fixture.emplace(entry.digest, entry.response);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": bad fixture line: " + e.what());
        }
    }
    return std::make_unique<ReplayBackend>(std::move(fixture), std::move(model));
}

std::string ReplayBackend::complete(const EstimateRequest&, const std::string& prompt) {
    const auto digest = prompt_digest(prompt, model_);
    auto it = fixture_.find(digest);
    if (it == fixture_.end()) {
        throw MissingFixture("no recorded response for digest " + digest);
    }
    return it->second;
}

}  // namespace shotforge
