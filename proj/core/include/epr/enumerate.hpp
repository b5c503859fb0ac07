#pragma once

// Candidate evidence-pattern enumeration.
//
// Seeds are one-edge patterns, one per entity-relation candidate pattern.
// Two moves grow a pattern: substituting a variable with an entity whose ER
// pattern matches one of its incident edges (adds no edge; each entity is
// placed at most once), and attaching a fresh-variable edge licensed by an RR
// pattern at an existing variable. A move is admissible only when the result
// stays closed: every entity-incident edge is a candidate ER pattern and
// every two edges meeting at a variable form a candidate RR pattern.
//
// The search runs level-synchronously over edge counts: each level is closed
// under substitutions, collected in canonical order, then expanded by one
// edge. Levels stop growing at tau edges; substitutions remain legal there,
// since they do not grow the pattern. Candidates are every reached pattern
// that is valid: all topic entities present, satisfiable in the graph, and
// every degree-1 node either a topic entity or the single variable endpoint.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/kg.hpp"
#include "epr/match.hpp"
#include "epr/pattern.hpp"

namespace epr {

// Candidate atomic-pattern sets closure and moves are checked against.
class ApUniverse {
public:
    ApUniverse(std::span<const ErAp> er, std::span<const RrAp> rr);

    const std::vector<ErAp>& er() const { return er_; }
    const std::vector<RrAp>& rr() const { return rr_; }
    bool has_er(const ErAp& ap) const;
    bool has_rr(const RrAp& ap) const;  // membership of the canonical form

private:
    std::vector<ErAp> er_;   // sorted unique
    std::vector<RrAp> rr_;   // canonical sorted unique
};

bool pattern_closed(const EvidencePattern& p, const ApUniverse& aps);

// Admissible one-move successors, canonicalized, deduplicated, in canonical
// order. One result per admissible site.
std::vector<EvidencePattern> er_expansions(const EvidencePattern& p, const ErAp& ap, const ApUniverse& aps);
std::vector<EvidencePattern> rr_expansions(const EvidencePattern& p, const RrAp& ap, const ApUniverse& aps);
bool expandable(const EvidencePattern& p, const ErAp& ap, const ApUniverse& aps);
bool expandable(const EvidencePattern& p, const RrAp& ap, const ApUniverse& aps);

bool is_valid_pattern(const KnowledgeGraph& kg, const EvidencePattern& p,
                      std::span<const EntityId> topics, const MatchConfig& cfg = {});

struct EnumerationConfig {
    std::uint32_t tau = 5;
    std::size_t candidate_cap = 20'000;
    std::size_t state_cap = 200'000;  // guard on explored states, valid or not
    MatchConfig match;
};

struct EnumerationResult {
    std::vector<EvidencePattern> candidates;  // canonical, ordered by (edge count, canonical key)
    bool truncated = false;
    std::size_t states_visited = 0;
};

EnumerationResult enumerate_candidates(const KnowledgeGraph& kg, std::span<const EntityId> topics,
                                       std::span<const ErAp> er_aps, std::span<const RrAp> rr_aps,
                                       const EnumerationConfig& cfg = {});

}  // namespace epr
