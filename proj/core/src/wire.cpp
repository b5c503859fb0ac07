#include "epr/wire.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "epr/util.hpp"

namespace epr {
namespace {

using nlohmann::json;

// POST with retries; returns the parsed JSON body of the first 200 response.
json post_json(const WireConfig& cfg, const std::string& path, const json& body) {
    if (cfg.retries == 0) throw Error("wire: retries must be >= 1");
    std::string payload = body.dump();
    std::string diagnostics;
    for (std::size_t attempt = 1; attempt <= cfg.retries; ++attempt) {
        httplib::Client cli(cfg.url);
        cli.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_seconds));
        cli.set_read_timeout(std::chrono::duration<double>(cfg.timeout_seconds));
        cli.set_write_timeout(std::chrono::duration<double>(cfg.timeout_seconds));
        httplib::Result res = cli.Post(path, payload, "application/json");
        std::string failure;
        if (!res) {
            failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status != 200) {
            failure = "http status " + std::to_string(res->status);
        } else {
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                failure = std::string("bad JSON in response: ") + e.what();
            }
        }
        diagnostics += "\n  attempt " + std::to_string(attempt) + ": " + failure;
    }
    throw Error("wire: POST " + cfg.url + path + " failed after " + std::to_string(cfg.retries) +
                " attempt(s):" + diagnostics);
}

float finite_number(const json& v, const char* what) {
    if (!v.is_number()) throw Error(std::string("wire: ") + what + " is not a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(std::string("wire: ") + what + " is not finite");
    return float(d);
}

}  // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(WireConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw Error("embedding service url is empty");
    if (cfg_.batch_size == 0) throw Error("wire: batch size must be >= 1");
}

std::size_t HttpEmbeddingProvider::dim() const {
    if (dim_.load() == 0) embed_batched(std::vector<std::string>{""});
    return dim_.load();
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed_batched(
    std::span<const std::string> texts) const {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (std::size_t done = 0; done < texts.size(); done += cfg_.batch_size) {
        std::size_t n = std::min(cfg_.batch_size, texts.size() - done);
        json body{{"texts", json::array()}};
        for (std::size_t i = 0; i < n; ++i) body["texts"].push_back(texts[done + i]);
        json reply = post_json(cfg_, "/embed", body);
        if (!reply.is_object() || !reply.contains("dim") || !reply.contains("vectors"))
            throw Error("wire: /embed response needs \"dim\" and \"vectors\"");
        if (!reply["dim"].is_number_unsigned() || reply["dim"].get<std::size_t>() == 0)
            throw Error("wire: /embed returned a bad dimension");
        std::size_t d = reply["dim"].get<std::size_t>();
        std::size_t expected = 0;
        dim_.compare_exchange_strong(expected, d);
        std::size_t known = dim_.load();
        if (d != known)
            throw Error("wire: /embed dimension changed from " + std::to_string(known) + " to " +
                        std::to_string(d));
        const json& vectors = reply["vectors"];
        if (!vectors.is_array() || vectors.size() != n)
            throw Error("wire: /embed returned " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(n) + " texts");
        for (const json& row : vectors) {
            if (!row.is_array() || row.size() != known)
                throw Error("wire: /embed vector has wrong dimension");
            std::vector<float> v;
            v.reserve(known);
            for (const json& x : row) v.push_back(finite_number(x, "embedding component"));
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<float> HttpEmbeddingProvider::embed_question(std::string_view text) {
    return embed_batched(std::vector<std::string>{std::string(text)}).front();
}

std::vector<float> HttpEmbeddingProvider::embed_pattern(std::string_view text) {
    return embed_batched(std::vector<std::string>{std::string(text)}).front();
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed_patterns(
    std::span<const std::string> texts) {
    if (texts.empty()) return {};
    return embed_batched(texts);
}

HttpPairScorer::HttpPairScorer(WireConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw Error("scoring service url is empty");
    if (cfg_.batch_size == 0) throw Error("wire: batch size must be >= 1");
}

std::vector<float> HttpPairScorer::score(std::span<const ScoreRequest> requests) {
    std::vector<float> out;
    out.reserve(requests.size());
    for (std::size_t done = 0; done < requests.size(); done += cfg_.batch_size) {
        std::size_t n = std::min(cfg_.batch_size, requests.size() - done);
        json body{{"pairs", json::array()}};
        for (std::size_t i = 0; i < n; ++i)
            body["pairs"].push_back(
                json::array({requests[done + i].question, requests[done + i].pattern_text}));
        json reply = post_json(cfg_, "/score", body);
        if (!reply.is_object() || !reply.contains("scores"))
            throw Error("wire: /score response needs \"scores\"");
        const json& scores = reply["scores"];
        if (!scores.is_array() || scores.size() != n)
            throw Error("wire: /score returned " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(n) + " pairs");
        for (const json& x : scores) out.push_back(finite_number(x, "score"));
    }
    return out;
}

}  // namespace epr
