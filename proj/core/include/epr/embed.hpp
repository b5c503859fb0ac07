#pragma once

// Embedding providers. The baseline is a deterministic hashed bag-of-tokens
// encoder: lowercase, split on non-alphanumerics, FNV-1a/64 (salted, then
// splitmix64-finalized) into D buckets, term-frequency weighted, L2
// normalized. It exists so retrieval, ranking and every test run without a
// model service; a live service implements the same interface over HTTP.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epr/util.hpp"

namespace epr {

std::vector<std::string> tokenize_text(std::string_view text);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    // identifies the embedding space; indexes persist it and queries must agree
    virtual std::string fingerprint() const = 0;
    virtual std::vector<float> embed_question(std::string_view text) = 0;
    virtual std::vector<float> embed_pattern(std::string_view text) = 0;
    virtual std::vector<std::vector<float>> embed_patterns(std::span<const std::string> texts);
};

class BaselineProvider final : public EmbeddingProvider {
public:
    BaselineProvider(std::size_t dim, std::uint64_t seed);  // dim >= 16

    std::size_t dim() const override { return dim_; }
    std::string fingerprint() const override;
    std::vector<float> embed_question(std::string_view text) override { return embed(text); }
    std::vector<float> embed_pattern(std::string_view text) override { return embed(text); }

    std::vector<float> embed(std::string_view text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

float dot(std::span<const float> a, std::span<const float> b);
float cosine(std::span<const float> a, std::span<const float> b);

}  // namespace epr
