#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/kg.hpp"
#include "epr/pattern.hpp"

namespace epr {

// Training-data generation: pseudo evidence patterns assembled from KG paths
// between topic entities and one sampled answer, plus the two weak-label
// sample files (pattern-retriever pairs and candidate-ranker pairs) built from
// them.  All randomness is drawn from a per-question generator seeded with
// global_seed ^ fnv1a64(question id), so output is independent of scheduling.

struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> topic_raw;   // identifiers as given in the file
    std::vector<std::string> answer_raw;
    std::vector<EntityId> topics;         // resolved against the graph, sorted unique
    std::vector<EntityId> answers;
};

struct QuestionLoadStats {
    std::size_t total = 0;
    std::size_t without_topics = 0;       // no resolvable topic entity
    std::size_t unresolved_topics = 0;    // individual identifiers dropped
    std::size_t unresolved_answers = 0;
};

// JSONL, one object per line: {"id", "question", "topic_entities", "answers"}.
// Unresolvable identifiers are dropped (counted), the question is kept.
std::vector<Question> load_questions(const std::string& path, const KnowledgeGraph& kg,
                                     QuestionLoadStats* stats = nullptr);

struct PseudoEpConfig {
    std::size_t hops = 2;            // max path length, edges
    std::size_t paths_per_pair = 8;  // kept per (topic, answer) pair, shortest first
};

struct PseudoEp {
    EvidencePattern pattern;
    EntityId answer = 0;
};

// Samples one answer uniformly, collects all simple undirected paths of
// length <= hops from each topic entity to it (capped per pair, shortest then
// lexicographic), and unions them into one pattern where topic entities stay
// constants and every other node becomes a variable.  Returns nothing when no
// topic reaches the answer.
std::optional<PseudoEp> build_pseudo_ep(const KnowledgeGraph& kg, const Question& q,
                                        std::mt19937_64& rng, const PseudoEpConfig& cfg = {});

struct ApSample {
    std::string qid;
    std::string text_a;  // question text
    std::string text_b;  // serialized relation-relation pattern
    int label = 0;
    RrAp ap;
    std::optional<RrAp> perturbed_from;  // set on single-field mutation negatives
};

struct ApSampleStats {
    std::size_t questions_used = 0;
    std::size_t questions_skipped = 0;  // no pseudo pattern or no positive pairs
    std::size_t positives = 0;
    std::size_t perturb_negatives = 0;
    std::size_t uniform_negatives = 0;
    std::size_t shortfall = 0;  // negatives that could not be drawn without collision
};

// Per positive pattern: ceil(n/2) single-field mutations of it and floor(n/2)
// uniform draws from all_rraps, re-drawn (up to 100 tries) while they collide
// with the question's positive set under canonical comparison.
std::vector<ApSample> gen_ap_retriever_samples(const KnowledgeGraph& kg,
                                               std::span<const Question> questions,
                                               std::span<const RrAp> all_rraps,
                                               std::uint64_t global_seed,
                                               std::size_t negatives_per_positive = 19,
                                               const PseudoEpConfig& cfg = {},
                                               ApSampleStats* stats = nullptr);

struct RankerCandidate {
    std::string text;            // serialized triplet clauses
    float baseline_score = 0.0f; // used to pick which negatives survive the cap
    std::size_t coverage = 0;    // |instantiated entities ∩ answers|
};

struct RankerSample {
    std::string qid;
    std::string text_a;
    std::string text_b;
    int label = 0;
};

// Positives: all candidates attaining the (nonzero) maximum answer coverage;
// negatives: the rest, ordered (baseline score desc, text asc) and truncated
// to max_neg_ratio x positives.  Zero max coverage yields no samples.
std::vector<RankerSample> gen_ranker_samples(std::string_view qid, std::string_view question_text,
                                             std::span<const RankerCandidate> candidates,
                                             std::size_t max_neg_ratio = 100);

}  // namespace epr
