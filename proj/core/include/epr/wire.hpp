#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "epr/embed.hpp"
#include "epr/rank.hpp"

namespace epr {

// HTTP clients for external model services.  An embedding service answers
// POST /embed {"texts": [...]} with {"dim": n, "vectors": [[...]...]}; a
// scoring service answers POST /score {"pairs": [[question, pattern]...]}
// with {"scores": [...]}.  Requests are batched, retried on failure, and all
// returned numbers must be finite; exhausted retries abort with per-attempt
// diagnostics.  Each request uses its own connection, so calls may run
// concurrently.

struct WireConfig {
    std::string url;  // e.g. http://127.0.0.1:8900
    std::size_t batch_size = 64;
    double timeout_seconds = 30.0;
    std::size_t retries = 3;  // total attempts
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(WireConfig cfg);

    // Probes the service with a one-text request when no call has fixed the
    // dimension yet.
    std::size_t dim() const override;
    std::string fingerprint() const override { return "service:" + cfg_.url; }
    std::vector<float> embed_question(std::string_view text) override;
    std::vector<float> embed_pattern(std::string_view text) override;
    std::vector<std::vector<float>> embed_patterns(std::span<const std::string> texts) override;

private:
    std::vector<std::vector<float>> embed_batched(std::span<const std::string> texts) const;
    WireConfig cfg_;
    mutable std::atomic<std::size_t> dim_{0};  // 0 until the first response
};

class HttpPairScorer final : public PairScorer {
public:
    explicit HttpPairScorer(WireConfig cfg);

    std::string name() const override { return "service:" + cfg_.url; }
    std::vector<float> score(std::span<const ScoreRequest> requests) override;

private:
    WireConfig cfg_;
};

}  // namespace epr
