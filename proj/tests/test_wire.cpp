#include <atomic>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "doctest.h"
#include "epr/wire.hpp"

using namespace epr;
using nlohmann::json;

namespace {

// in-process HTTP service; handlers are registered before the listener starts
class TestService {
public:
    explicit TestService(const std::function<void(httplib::Server&)>& setup) {
        setup(srv_);
        port_ = srv_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("test server: bind failed");
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
    }
    ~TestService() {
        srv_.stop();
        thread_.join();
    }
    TestService(const TestService&) = delete;
    TestService& operator=(const TestService&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server srv_;
    int port_ = 0;
    std::thread thread_;
};

json parse_body(const httplib::Request& req) { return json::parse(req.body); }

void reply(httplib::Response& res, const json& body) {
    res.set_content(body.dump(), "application/json");
}

}  // namespace

TEST_CASE("embedding client batches requests and keeps text order") {
    std::mutex mu;
    std::vector<std::vector<std::string>> batches;
    TestService svc([&](httplib::Server& srv) {
        srv.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req);
            std::vector<std::string> texts = body.at("texts").get<std::vector<std::string>>();
            {
                std::lock_guard<std::mutex> lock(mu);
                batches.push_back(texts);
            }
            json vectors = json::array();
            for (const std::string& t : texts)
                vectors.push_back({float(t.size()), 2.0f * float(t.size()), 7.0f});
            reply(res, {{"dim", 3}, {"vectors", vectors}});
        });
    });

    HttpEmbeddingProvider provider({.url = svc.url(), .batch_size = 2});
    CHECK(provider.fingerprint() == "service:" + svc.url());

    std::vector<std::string> texts = {"a", "bb", "ccc", "dddd", "eeeee"};
    std::vector<std::vector<float>> got = provider.embed_patterns(texts);
    REQUIRE(got.size() == 5);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        float n = float(texts[i].size());
        CHECK(got[i] == std::vector<float>{n, 2.0f * n, 7.0f});
    }
    REQUIRE(batches.size() == 3);
    CHECK(batches[0] == std::vector<std::string>{"a", "bb"});
    CHECK(batches[1] == std::vector<std::string>{"ccc", "dddd"});
    CHECK(batches[2] == std::vector<std::string>{"eeeee"});
    CHECK(provider.dim() == 3);  // fixed by the first response, no extra probe
    CHECK(batches.size() == 3);

    CHECK(provider.embed_question("hello") == std::vector<float>{5.0f, 10.0f, 7.0f});
    CHECK(provider.embed_pattern("hi") == std::vector<float>{2.0f, 4.0f, 7.0f});

    // an empty batch never touches the service
    std::size_t before = batches.size();
    CHECK(provider.embed_patterns(std::vector<std::string>{}).empty());
    CHECK(batches.size() == before);
}

TEST_CASE("dimension is probed with a one-text request when unknown") {
    std::mutex mu;
    std::vector<std::vector<std::string>> batches;
    TestService svc([&](httplib::Server& srv) {
        srv.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req);
            std::vector<std::string> texts = body.at("texts").get<std::vector<std::string>>();
            {
                std::lock_guard<std::mutex> lock(mu);
                batches.push_back(texts);
            }
            json vectors = json::array();
            for (std::size_t i = 0; i < texts.size(); ++i) vectors.push_back({0.25f, 0.75f});
            reply(res, {{"dim", 2}, {"vectors", vectors}});
        });
    });

    HttpEmbeddingProvider provider({.url = svc.url()});
    CHECK(provider.dim() == 2);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0] == std::vector<std::string>{""});
}

TEST_CASE("embedding responses are validated") {
    std::atomic<std::size_t> hits{0};
    TestService svc([&](httplib::Server& srv) {
        srv.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req);
            std::size_t n = body.at("texts").size();
            std::size_t d = hits++ == 0 ? 3 : 4;  // grows a dimension after the first call
            json vectors = json::array();
            for (std::size_t i = 0; i < n; ++i)
                vectors.push_back(std::vector<float>(d, 0.5f));
            reply(res, {{"dim", d}, {"vectors", vectors}});
        });
    });
    HttpEmbeddingProvider provider({.url = svc.url()});
    CHECK(provider.embed_question("x").size() == 3);
    CHECK_THROWS_WITH_AS(provider.embed_question("y"),
                         "wire: /embed dimension changed from 3 to 4", Error);

    auto canned = [](const char* body_text) {
        return [body_text](const httplib::Request&, httplib::Response& res) {
            res.set_content(body_text, "application/json");
        };
    };

    TestService missing([&](httplib::Server& srv) { srv.Post("/embed", canned("{}")); });
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = missing.url()}).embed_question("x"),
                         "wire: /embed response needs \"dim\" and \"vectors\"", Error);

    TestService zero_dim(
        [&](httplib::Server& srv) { srv.Post("/embed", canned(R"({"dim":0,"vectors":[]})")); });
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = zero_dim.url()}).embed_question("x"),
                         "wire: /embed returned a bad dimension", Error);

    TestService short_list([&](httplib::Server& srv) {
        srv.Post("/embed", canned(R"({"dim":2,"vectors":[[0.5,0.5]]})"));
    });
    std::vector<std::string> two = {"a", "b"};
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = short_list.url()}).embed_patterns(two),
                         "wire: /embed returned 1 vectors for 2 texts", Error);

    TestService ragged([&](httplib::Server& srv) {
        srv.Post("/embed", canned(R"({"dim":2,"vectors":[[0.5],[0.5,0.5]]})"));
    });
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = ragged.url()}).embed_patterns(two),
                         "wire: /embed vector has wrong dimension", Error);

    TestService nonnumeric([&](httplib::Server& srv) {
        srv.Post("/embed", canned(R"({"dim":1,"vectors":[[null]]})"));
    });
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = nonnumeric.url()}).embed_question("x"),
                         "wire: embedding component is not a number", Error);
}

TEST_CASE("scoring client batches pairs and validates the reply") {
    std::mutex mu;
    std::vector<std::vector<std::pair<std::string, std::string>>> batches;
    TestService svc([&](httplib::Server& srv) {
        srv.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req);
            std::vector<std::pair<std::string, std::string>> pairs;
            json scores = json::array();
            for (const json& pair : body.at("pairs")) {
                std::string q = pair.at(0).get<std::string>();
                std::string p = pair.at(1).get<std::string>();
                pairs.emplace_back(q, p);
                scores.push_back(10.0f * float(q.size()) + float(p.size()));
            }
            {
                std::lock_guard<std::mutex> lock(mu);
                batches.push_back(std::move(pairs));
            }
            reply(res, {{"scores", scores}});
        });
    });

    HttpPairScorer scorer({.url = svc.url(), .batch_size = 2});
    CHECK(scorer.name() == "service:" + svc.url());

    std::vector<ScoreRequest> reqs = {{"q", "pat", {}}, {"qq", "p", {}}, {"q3q", "pp", {}}};
    std::vector<float> got = scorer.score(reqs);
    REQUIRE(got.size() == 3);
    CHECK(got[0] == 13.0f);
    CHECK(got[1] == 21.0f);
    CHECK(got[2] == 32.0f);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].size() == 2);
    CHECK(batches[1].size() == 1);
    CHECK(batches[0][0] == std::pair<std::string, std::string>{"q", "pat"});
    CHECK(batches[1][0] == std::pair<std::string, std::string>{"q3q", "pp"});

    auto canned = [](const char* body_text) {
        return [body_text](const httplib::Request&, httplib::Response& res) {
            res.set_content(body_text, "application/json");
        };
    };
    std::vector<ScoreRequest> one = {{"q", "p", {}}};

    TestService missing([&](httplib::Server& srv) { srv.Post("/score", canned("{}")); });
    CHECK_THROWS_WITH_AS(HttpPairScorer({.url = missing.url()}).score(one),
                         "wire: /score response needs \"scores\"", Error);

    TestService extra(
        [&](httplib::Server& srv) { srv.Post("/score", canned(R"({"scores":[1.0,2.0]})")); });
    CHECK_THROWS_WITH_AS(HttpPairScorer({.url = extra.url()}).score(one),
                         "wire: /score returned 2 scores for 1 pairs", Error);

    TestService nonnumeric(
        [&](httplib::Server& srv) { srv.Post("/score", canned(R"({"scores":[null]})")); });
    CHECK_THROWS_WITH_AS(HttpPairScorer({.url = nonnumeric.url()}).score(one),
                         "wire: score is not a number", Error);
}

TEST_CASE("failed requests are retried with per-attempt diagnostics") {
    std::atomic<std::size_t> hits{0};
    TestService flaky([&](httplib::Server& srv) {
        srv.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
            if (hits++ == 0) {
                res.status = 500;
                return;
            }
            json body = parse_body(req);
            json vectors = json::array();
            for (std::size_t i = 0; i < body.at("texts").size(); ++i)
                vectors.push_back({1.0f});
            reply(res, {{"dim", 1}, {"vectors", vectors}});
        });
    });
    HttpEmbeddingProvider recovers({.url = flaky.url(), .batch_size = 64,
                                    .timeout_seconds = 30.0, .retries = 3});
    CHECK(recovers.embed_question("x") == std::vector<float>{1.0f});
    CHECK(hits == 2);  // one failure, one success, no further attempts

    std::atomic<std::size_t> down_hits{0};
    TestService down([&](httplib::Server& srv) {
        srv.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
            ++down_hits;
            res.status = 500;
        });
    });
    HttpEmbeddingProvider gives_up({.url = down.url(), .batch_size = 64,
                                    .timeout_seconds = 30.0, .retries = 2});
    CHECK_THROWS_WITH_AS(gives_up.embed_question("x"),
                         ("wire: POST " + down.url() + "/embed failed after 2 attempt(s):"
                          "\n  attempt 1: http status 500\n  attempt 2: http status 500")
                             .c_str(),
                         Error);
    CHECK(down_hits == 2);

    TestService garbled([&](httplib::Server& srv) {
        srv.Post("/score", [&](const httplib::Request&, httplib::Response& res) {
            res.set_content("not json", "text/plain");
        });
    });
    HttpPairScorer bad_body({.url = garbled.url(), .batch_size = 64, .timeout_seconds = 30.0,
                             .retries = 1});
    std::vector<ScoreRequest> one = {{"q", "p", {}}};
    try {
        bad_body.score(one);
        FAIL("expected a wire error");
    } catch (const Error& e) {
        std::string what = e.what();
        CHECK(what.find("failed after 1 attempt(s):") != std::string::npos);
        CHECK(what.find("attempt 1: bad JSON in response:") != std::string::npos);
    }

    // nothing listens on port 1, so every attempt is a transport error
    HttpPairScorer unreachable({.url = "http://127.0.0.1:1", .batch_size = 64,
                                .timeout_seconds = 5.0, .retries = 1});
    try {
        unreachable.score(one);
        FAIL("expected a wire error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("attempt 1: transport error:") != std::string::npos);
    }
}

TEST_CASE("wire configuration is validated") {
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = ""}), "embedding service url is empty",
                         Error);
    CHECK_THROWS_WITH_AS(HttpPairScorer({.url = ""}), "scoring service url is empty", Error);
    CHECK_THROWS_WITH_AS(HttpEmbeddingProvider({.url = "http://127.0.0.1:1", .batch_size = 0}),
                         "wire: batch size must be >= 1", Error);

    HttpEmbeddingProvider no_retries({.url = "http://127.0.0.1:1", .batch_size = 64,
                                      .timeout_seconds = 5.0, .retries = 0});
    CHECK_THROWS_WITH_AS(no_retries.embed_question("x"), "wire: retries must be >= 1", Error);
}
