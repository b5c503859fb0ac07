#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epr/embed.hpp"
#include "epr/index.hpp"
#include "epr/kg.hpp"
#include "epr/pattern.hpp"

namespace epr {

// Scoring of (question, candidate pattern) pairs.  Candidates are serialized
// to byte-stable text (isomorphic patterns collapse to one string), every pair
// is scored through a pluggable scorer, and the final order is
// (score desc, fewer edges, serialization asc) so ranking is a deterministic
// permutation of its input.

struct RrApScore {
    RrAp ap;
    float score = 0.0f;
};

struct ScoreRequest {
    std::string question;
    std::string pattern_text;
    // Retrieval scores of the relation-relation patterns the candidate was
    // built from; wire scorers ignore this and use the text pair only.
    std::vector<RrApScore> rr_provenance;
};

class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual std::string name() const = 0;
    // One finite score per request, same order.
    virtual std::vector<float> score(std::span<const ScoreRequest> requests) = 0;
};

// Deterministic stand-in for a learned cross-encoder: mean retrieval score of
// the candidate's constituent relation-relation patterns (0 when there are
// none) plus the hashed-bag-of-words cosine between pattern text and question.
class BaselineScorer : public PairScorer {
public:
    explicit BaselineScorer(BaselineProvider provider) : provider_(std::move(provider)) {}
    std::string name() const override { return "baseline"; }
    std::vector<float> score(std::span<const ScoreRequest> requests) override;

private:
    BaselineProvider provider_;
};

// ?u, ?v, ?w, ?x, ?y, ?z, then ?z1, ?z2, ...
std::string variable_name(std::size_t i);

// Display name per variable ordinal, assigned by first appearance over the
// edge list; the pattern should already be canonical.
std::vector<std::string> variable_display_names(const EvidencePattern& p);

// Canonical triplet clauses only: `s r o ; s r o ;` with variables named by
// first appearance and labels lowercased (relation label dots become spaces).
std::string serialize_ep_triplets(const EvidencePattern& p, const KnowledgeGraph& kg);

// `<question, lowercased> [SEP] <triplet clauses>`.
std::string serialize_ep(const EvidencePattern& p, const KnowledgeGraph& kg,
                         std::string_view question_text);

struct Candidate {
    EvidencePattern pattern;
    std::string text;  // serialized triplet clauses
    std::vector<RrApScore> provenance;
};

struct ScoredCandidate {
    EvidencePattern pattern;
    std::string text;
    std::vector<RrApScore> provenance;
    float score = 0.0f;
};

// Pairs each pattern with the retrieval scores of its variable-adjacent
// relation-relation patterns.  Every such pattern must be present in `hits`
// (enumeration guarantees closure over the retrieved set).
std::vector<Candidate> attach_provenance(std::span<const EvidencePattern> patterns,
                                         std::span<const RetrievalHit> hits,
                                         const KnowledgeGraph& kg);

// Scores all candidates in batches and sorts by
// (score desc, fewer edges, serialization asc).  Scorer errors propagate.
std::vector<ScoredCandidate> rank_candidates(std::string_view question_text,
                                             std::span<const Candidate> candidates,
                                             PairScorer& scorer, std::size_t batch_size = 64);

}  // namespace epr
