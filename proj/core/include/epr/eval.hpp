#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epr/kg.hpp"
#include "epr/train.hpp"

namespace epr {

// Extraction-side metrics: answer cover rate over per-question extraction
// records, Hits@1 / mean F1 against an external reasoner's predictions, and
// the seen/unseen-relation split report.

struct StageTimes {
    double retrieve_ms = 0.0;
    double enumerate_ms = 0.0;
    double rank_ms = 0.0;
    double instantiate_ms = 0.0;
};

struct ExtractionRecord {
    std::string qid;
    bool selected = false;  // some candidate was ranked first and instantiated
    std::string pattern_text;
    std::vector<RelationId> pattern_relations;  // sorted unique
    std::size_t candidate_count = 0;
    std::size_t retrieved_count = 0;
    bool truncated = false;
    std::size_t subgraph_triples = 0;
    std::size_t subgraph_nodes = 0;
    std::vector<EntityId> subgraph_entities;  // sorted unique
    std::string error;  // nonempty when the question failed; other fields best-effort
    StageTimes times;   // kept out of the deterministic artifacts
};

// Fraction of questions whose subgraph entities intersect the gold answers.
// Records must align with questions by qid (position-wise); failed or empty
// extractions count as misses.
double cover_rate(std::span<const ExtractionRecord> records, std::span<const Question> questions);

struct EvalScores {
    double hits_at_1 = 0.0;
    double f1 = 0.0;  // mean per-question F1
    std::size_t questions = 0;
    std::size_t missing_predictions = 0;
};

// Predictions JSONL: {"qid", "ranked_answers": [identifier...]}.  Gold answers
// are the identifiers as given in the question file.  A question without a
// prediction line counts as an empty prediction.  Empty-vs-empty F1 is 1.
EvalScores f1_hits_from_predictions(std::span<const Question> questions,
                                    const std::string& predictions_path);

// Relations appearing on the pseudo patterns of the training questions;
// sorted unique.  The sampling matches training-data generation for the same
// seed, so "seen" means seen by the trained retriever.
std::vector<RelationId> pseudo_relation_vocab(const KnowledgeGraph& kg,
                                              std::span<const Question> questions,
                                              std::uint64_t global_seed,
                                              const PseudoEpConfig& cfg = {});

struct SplitMetrics {
    std::size_t questions = 0;
    std::size_t covered = 0;
    double cover_rate = 0.0;  // 0 when the bucket is empty
};

struct SplitReport {
    SplitMetrics with_unseen;     // selected pattern uses >= 1 relation outside the vocabulary
    SplitMetrics without_unseen;  // everything else, including questions with no selection
};

SplitReport split_report(std::span<const ExtractionRecord> records,
                         std::span<const Question> questions,
                         std::span<const RelationId> train_vocab);

}  // namespace epr
