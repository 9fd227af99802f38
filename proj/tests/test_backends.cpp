#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

#include "shotforge/backends.hpp"
#include "shotforge/cache.hpp"
#include "shotforge/errors.hpp"
#include "test_util.hpp"

using namespace shotforge;
using testing_util::TempDir;
using testing_util::write_file;

namespace {

/// Chat-completions stub on an ephemeral local port.
class StubServer {
public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> hits{0};
    std::string last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
    nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    res.set_content(body.dump(), "application/json");
}

EstimatorConfig stub_config(const std::string& url) {
    EstimatorConfig cfg;
    cfg.endpoint_url = url;
    cfg.model_name = "test-model";
    cfg.requests_per_minute = 60000;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    cfg.timeout = std::chrono::milliseconds(2000);
    return cfg;
}

const EstimateRequest kRequest{{}, "target", AllowedValues{{1, 2, 3, 5, 8}}};

}  // namespace

TEST(LlmBackend, EchoServerAnswerIsReturned) {
    StubServer server([](const httplib::Request&, httplib::Response& res) { reply(res, "5"); });
    LlmBackend backend(stub_config(server.url()), "secret");
    const auto before = LlmBackend::total_requests();
    EXPECT_EQ(backend.complete(kRequest, "the prompt"), "5");
    EXPECT_EQ(LlmBackend::total_requests(), before + 1);

    const auto body = nlohmann::json::parse(server.last_body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(body["messages"][0]["content"], "the prompt");
    EXPECT_EQ(server.last_auth, "Bearer secret");
}

TEST(LlmBackend, EndpointBasePathIsKept) {
    LlmBackend backend(stub_config("http://127.0.0.1:1/proxy/"), "k");
    EXPECT_NO_THROW(backend.request_body("p"));
    EXPECT_THROW(LlmBackend(stub_config("ftp://host"), "k"), ConfigError);
    EXPECT_THROW(LlmBackend(stub_config("localhost:8080"), "k"), ConfigError);
}

TEST(LlmBackend, StatusCodesMapToErrors) {
    int status = 500;
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        res.status = status;
        res.set_content("{}", "application/json");
    });
    LlmBackend backend(stub_config(server.url()), "k");
    EXPECT_THROW(backend.complete(kRequest, "p"), HttpError);
    status = 401;
    EXPECT_THROW(backend.complete(kRequest, "p"), AuthError);
    status = 429;
    try {
        backend.complete(kRequest, "p");
        FAIL() << "expected HttpError";
    } catch (const HttpError& e) {
        EXPECT_EQ(e.status(), 429);
    }
}

TEST(LlmBackend, TooManyRequestsIsRetriedThroughEstimator) {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        static std::atomic<int> n{0};
        if (n++ < 2) {
            res.status = 429;
            return;
        }
        reply(res, "8 Story Points");
    });
    auto cfg = stub_config(server.url());
    Estimator est(std::make_shared<LlmBackend>(cfg, "k"), nullptr, cfg);
    const auto out = est.estimate(kRequest);
    EXPECT_DOUBLE_EQ(out.value, 8.0);
    EXPECT_FALSE(out.fallback);
    EXPECT_EQ(server.hits.load(), 3);
}

TEST(LlmBackend, UnreachableEndpointIsTransportError) {
    auto cfg = stub_config("http://127.0.0.1:1");
    LlmBackend backend(cfg, "k");
    EXPECT_THROW(backend.complete(kRequest, "p"), TransportError);
}

TEST(LlmBackend, SlowServerIsTimeout) {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        reply(res, "1");
    });
    auto cfg = stub_config(server.url());
    cfg.timeout = std::chrono::milliseconds(200);
    LlmBackend backend(cfg, "k");
    EXPECT_THROW(backend.complete(kRequest, "p"), TimeoutError);
}

TEST(LlmBackend, MalformedBodyIsTransportError) {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices": []})", "application/json");
    });
    LlmBackend backend(stub_config(server.url()), "k");
    EXPECT_THROW(backend.complete(kRequest, "p"), TransportError);
}

TEST(LlmBackend, MissingKeyFailsBeforeNetwork) {
    const char* saved = std::getenv(kApiKeyEnv);
    const std::string saved_value = saved ? saved : "";
    unsetenv(kApiKeyEnv);
    const auto before = LlmBackend::total_requests();
    EXPECT_THROW(llm_backend(stub_config("http://127.0.0.1:1")), AuthError);
    setenv(kApiKeyEnv, "", 1);
    EXPECT_THROW(llm_backend(stub_config("http://127.0.0.1:1")), AuthError);
    EXPECT_EQ(LlmBackend::total_requests(), before);
    setenv(kApiKeyEnv, "abc", 1);
    EXPECT_NO_THROW(llm_backend(stub_config("http://127.0.0.1:1")));
    if (saved) setenv(kApiKeyEnv, saved_value.c_str(), 1);
    else unsetenv(kApiKeyEnv);
}

TEST(RateLimiter, SpacesRequests) {
    RateLimiter limiter(600);  // one slot every 100 ms
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) limiter.acquire();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    EXPECT_GE(elapsed, std::chrono::milliseconds(290));
    EXPECT_LT(elapsed, std::chrono::milliseconds(1500));
}

TEST(MockSimilarity, PicksMostSimilarShot) {
    MockSimilarityBackend mock;
    const EstimateRequest req{{{"database migration", 5}, {"login page css", 2}},
                              "fix login page",
                              AllowedValues{{1, 2, 3, 5, 8}}};
    EXPECT_EQ(mock.complete(req, ""), "2 Story Points");
}

TEST(MockSimilarity, JaccardByHand) {
    // {login, page, css} vs {fix, login, page}: 2 shared of 4 distinct.
    EXPECT_DOUBLE_EQ(jaccard(word_set("login page css"), word_set("fix login page")), 0.5);
    EXPECT_DOUBLE_EQ(jaccard(word_set("database migration"), word_set("fix login page")), 0.0);
    EXPECT_EQ(word_set("Fix LOGIN-page, fix!"), (std::set<std::string>{"fix", "login", "page"}));
}

TEST(MockSimilarity, ZeroShotAndTies) {
    MockSimilarityBackend mock;
    EXPECT_EQ(mock.complete(EstimateRequest{{}, "x", AllowedValues{{1, 2, 3, 5, 8}}}, ""),
              "3 Story Points");
    const EstimateRequest tie{{{"alpha beta", 8}, {"alpha gamma", 1}}, "alpha", AllowedValues{{1, 8}}};
    EXPECT_EQ(mock.complete(tie, ""), "8 Story Points");
}

TEST(Replay, LooksUpByDigest) {
    const std::string prompt = build_prompt(kRequest);
    ReplayBackend replay({{prompt_digest(prompt, "m"), "5 story points"}}, "m");
    EXPECT_EQ(replay.complete(kRequest, prompt), "5 story points");
    EXPECT_THROW(replay.complete(kRequest, prompt + " "), MissingFixture);
}

TEST(Replay, LoadsCacheFileAndDigestObject) {
    TempDir tmp;
    {
        ResponseCache cache(tmp / "cache.jsonl");
        cache.insert(CacheEntry{"d1", "m", "3", 3, false, utc_timestamp()});
        cache.insert(CacheEntry{"d2", "m", "junk", 2, true, utc_timestamp()});
    }
    auto from_cache = ReplayBackend::from_file(tmp / "cache.jsonl", "m");
    EXPECT_EQ(from_cache->model_name(), "m");

    const std::string prompt = build_prompt(kRequest);
    write_file(tmp / "fixture.json",
               nlohmann::json{{prompt_digest(prompt, "m"), "13"}}.dump());
    auto from_object = ReplayBackend::from_file(tmp / "fixture.json", "m");
    EXPECT_EQ(from_object->complete(kRequest, prompt), "13");
    EXPECT_THROW(ReplayBackend::from_file(tmp / "absent.json", "m"), ConfigError);
}
