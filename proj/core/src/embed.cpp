#include "epr/embed.hpp"

#include <cmath>

namespace epr {

std::vector<std::string> tokenize_text(std::string_view text) {
    std::vector<std::string> out;
    std::string token;
    for (unsigned char c : text) {
        bool keep = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    c >= 0x80;  // multi-byte sequences stay inside one token
        if (keep) {
            token.push_back(c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : char(c));
        } else if (!token.empty()) {
            out.push_back(std::move(token));
            token.clear();
        }
    }
    if (!token.empty()) out.push_back(std::move(token));
    return out;
}

std::vector<std::vector<float>> EmbeddingProvider::embed_patterns(std::span<const std::string> texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed_pattern(t));
    return out;
}

BaselineProvider::BaselineProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 16) throw Error("baseline embedding dimension must be >= 16, got " + std::to_string(dim));
}

std::string BaselineProvider::fingerprint() const {
    return "baseline-fnv64:d=" + std::to_string(dim_) + ";seed=" + std::to_string(seed_);
}

std::vector<float> BaselineProvider::embed(std::string_view text) const {
    std::vector<float> v(dim_, 0.0f);
    for (const std::string& token : tokenize_text(text)) {
        std::size_t bucket = static_cast<std::size_t>(splitmix64(fnv1a64(token) ^ seed_) % dim_);
        v[bucket] += 1.0f;
    }
    float norm_sq = 0.0f;
    for (float x : v) norm_sq += x * x;
    if (norm_sq > 0.0f) {
        float inv = 1.0f / std::sqrt(norm_sq);
        for (float& x : v) x *= inv;
    }
    return v;
}

float dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw Error("dot: dimension mismatch");
    float s = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

float cosine(std::span<const float> a, std::span<const float> b) {
    float na = dot(a, a), nb = dot(b, b);
    if (na == 0.0f || nb == 0.0f) return 0.0f;
    return dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace epr
