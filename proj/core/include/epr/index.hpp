#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/embed.hpp"
#include "epr/kg.hpp"

namespace epr {

// Exact dense retrieval over relation-relation atomic patterns.  Every pattern
// is serialized to text, embedded once at build time, and queries run a full
// scan with an exact top-k selection, so results are reproducible and k-prefix
// consistent: the top k1 hits are a prefix of the top k2 hits whenever
// k1 <= k2.  Ties are broken by pattern text ascending.
struct RetrievalHit {
    RrAp ap;
    std::string text;
    float score = 0.0f;
};

class VectorIndex {
public:
    VectorIndex() = default;

    // Embeds each pattern's serialization with the provider.
    static VectorIndex build(const KnowledgeGraph& kg, std::span<const RrAp> aps,
                             EmbeddingProvider& provider);

    // Assembles an index from precomputed vectors (texts[i] scores ties for aps[i]).
    static VectorIndex from_raw(std::size_t dim, std::string fingerprint, std::vector<RrAp> aps,
                                std::vector<std::string> texts, std::vector<float> vectors);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return aps_.size(); }
    const std::string& fingerprint() const { return fingerprint_; }
    const RrAp& ap_at(std::size_t i) const { return aps_.at(i); }
    const std::string& text_at(std::size_t i) const { return texts_.at(i); }
    std::span<const float> vector_at(std::size_t i) const;
    std::optional<std::size_t> find(const RrAp& ap) const;

    // Exact top-k by dot product, ties broken by text ascending.
    std::vector<RetrievalHit> retrieve(std::span<const float> query, std::size_t k) const;

    // Dot product against one stored pattern.
    float score_at(std::span<const float> query, std::size_t i) const;

    // Binary round-trip; load rebuilds pattern texts from the graph's relation labels.
    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path, const KnowledgeGraph& kg);

private:
    std::size_t dim_ = 0;
    std::string fingerprint_;
    std::vector<RrAp> aps_;
    std::vector<std::string> texts_;
    std::vector<float> vectors_;  // row-major, aps_.size() x dim_
};

}  // namespace epr
