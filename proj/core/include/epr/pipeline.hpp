#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/embed.hpp"
#include "epr/enumerate.hpp"
#include "epr/eval.hpp"
#include "epr/index.hpp"
#include "epr/kg.hpp"
#include "epr/match.hpp"
#include "epr/rank.hpp"
#include "epr/train.hpp"

namespace epr {

// Stage orchestration.  Every stage is a function from files to files inside
// one output directory, so running stages one-by-one and running `pipeline`
// (which calls the same functions in sequence) produce identical bytes.
// Wall-time measurements go to separate timings_*.csv files, keeping every
// other artifact reproducible for a fixed (graph, questions, config, seed).

struct PipelineConfig {
    std::string kg_path;
    std::string labels_path;
    std::string kg_format = "tsv";  // tsv | ntriples
    std::string questions_path;
    std::string out_dir = "out";
    std::string index_path;  // default <out_dir>/rraps.idx
    std::string rraps_path;  // default <out_dir>/rraps.tsv
    std::string predictions_path;      // optional, evaluate
    std::string train_questions_path;  // optional, evaluate split report
    std::size_t k = 100;
    std::size_t tau = 5;
    std::size_t dim = 256;
    std::uint64_t seed = 17;
    std::string provider = "baseline";  // baseline | http(s)://...
    std::string scorer = "baseline";    // baseline | http(s)://...
    std::size_t workers = 1;
    std::size_t candidate_cap = 20'000;
    std::size_t state_cap = 200'000;
    std::uint64_t match_budget = 1'000'000;
    std::size_t batch_size = 64;
    double timeout_seconds = 30.0;
    std::size_t retries = 3;
    std::size_t hops = 2;
    std::size_t paths_per_pair = 8;
    std::size_t negatives_per_positive = 19;
    std::size_t max_neg_ratio = 100;
    std::size_t sweep_k_min = 20;
    std::size_t sweep_k_max = 200;
    std::size_t sweep_k_step = 10;

    void validate() const;
    std::string index_file() const;
    std::string rraps_file() const;
};

// Flat `key = value` file, '#' comments, unknown keys rejected.
void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value);
void load_config_file(PipelineConfig& cfg, const std::string& path);
// Environment variables EPR_<KEY> (key uppercased) override file values.
void apply_env_overrides(PipelineConfig& cfg);
// One `key = value` line per key, fixed order; printed at startup.
std::string effective_config(const PipelineConfig& cfg);

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg);
std::unique_ptr<PairScorer> make_scorer(const PipelineConfig& cfg);

KnowledgeGraph load_graph(const PipelineConfig& cfg, IngestStats* stats = nullptr);
std::vector<Question> load_question_file(const PipelineConfig& cfg, const KnowledgeGraph& kg,
                                         QuestionLoadStats* stats = nullptr);

// ---- per-question units (shared by the file stages and the in-memory sweep)

std::vector<RetrievalHit> retrieve_question(const VectorIndex& index, EmbeddingProvider& provider,
                                            const Question& q, std::size_t k);
EnumerationResult enumerate_question(const KnowledgeGraph& kg, const Question& q,
                                     std::span<const RetrievalHit> hits,
                                     const PipelineConfig& cfg);
std::vector<ScoredCandidate> rank_question(const KnowledgeGraph& kg, const Question& q,
                                           std::span<const EvidencePattern> patterns,
                                           std::span<const RetrievalHit> hits, PairScorer& scorer,
                                           const PipelineConfig& cfg);

// ---- artifact rows

struct RetrievedRow {
    std::string qid;
    std::vector<RetrievalHit> hits;
    std::string error;
};

struct CandidateRow {
    std::string qid;
    std::vector<EvidencePattern> patterns;
    bool truncated = false;
    std::size_t states_visited = 0;
    std::string error;
};

struct RankedRow {
    std::string qid;
    std::vector<ScoredCandidate> ranked;
    std::string error;
};

struct SubgraphRow {
    std::string qid;
    bool selected = false;
    EvidencePattern pattern;
    std::string pattern_text;
    Subgraph subgraph;
    std::string error;
};

std::vector<RetrievedRow> read_retrieved(const std::string& path, const KnowledgeGraph& kg);
std::vector<CandidateRow> read_candidates(const std::string& path, const KnowledgeGraph& kg);
std::vector<RankedRow> read_ranked(const std::string& path, const KnowledgeGraph& kg);
std::vector<SubgraphRow> read_subgraphs(const std::string& path, const KnowledgeGraph& kg);
std::vector<ExtractionRecord> read_records(const std::string& path, const KnowledgeGraph& kg);

// ---- stages (each loads its file inputs, writes its artifacts, logs to out)

void stage_ingest(const PipelineConfig& cfg, std::ostream& out);
void stage_extract_aps(const PipelineConfig& cfg, std::ostream& out);
void stage_build_index(const PipelineConfig& cfg, std::ostream& out);
void stage_gen_train(const PipelineConfig& cfg, std::ostream& out);
void stage_retrieve(const PipelineConfig& cfg, std::ostream& out);
void stage_enumerate(const PipelineConfig& cfg, std::ostream& out);
void stage_rank(const PipelineConfig& cfg, std::ostream& out);
void stage_extract_subgraph(const PipelineConfig& cfg, std::ostream& out);
void stage_evaluate(const PipelineConfig& cfg, std::ostream& out);
void stage_sweep(const PipelineConfig& cfg, std::ostream& out);
// retrieve -> enumerate -> rank -> extract-subgraph -> evaluate
void run_pipeline(const PipelineConfig& cfg, std::ostream& out);

// ---- sweep rows (cover rate / candidate counts; times go to a separate file)

struct SweepRow {
    std::size_t k = 0;
    std::size_t questions = 0;
    std::size_t covered = 0;
    double cover_rate = 0.0;
    double mean_candidates = 0.0;
    double mean_retrieved = 0.0;
    std::size_t truncated = 0;
    std::size_t errors = 0;
    StageTimes mean_times;
};

std::vector<SweepRow> k_sweep(const KnowledgeGraph& kg, std::span<const Question> questions,
                              const VectorIndex& index, EmbeddingProvider& provider,
                              PairScorer& scorer, const PipelineConfig& cfg,
                              std::span<const std::size_t> ks);

}  // namespace epr
