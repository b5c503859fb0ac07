#pragma once

// Homomorphic pattern matching against the graph. Matches map variables to
// entities (non-injectively); entity nodes map to themselves. Instantiation
// returns the union of edge images over *all* matches without enumerating
// them: per-edge candidate triples are filtered to arc consistency, then each
// surviving triple is pinned and verified to extend to a full match. The step
// budget turns pathological patterns into explicit errors instead of silent
// truncation.

#include <cstdint>
#include <vector>

#include "epr/kg.hpp"
#include "epr/pattern.hpp"

namespace epr {

struct MatchConfig {
    std::uint64_t step_budget = 1'000'000;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

struct Subgraph {
    std::vector<Triple> triples;                   // sorted unique union of edge images
    std::vector<EntityId> nodes;                   // sorted unique endpoints
    std::vector<std::vector<EntityId>> bindings;   // per variable ordinal, sorted unique

    bool empty() const { return triples.empty(); }
};

bool exists_match(const KnowledgeGraph& kg, const EvidencePattern& p, const MatchConfig& cfg = {});

// Empty subgraph when the pattern has no match. Throws BudgetExceeded when the
// cumulative search work passes the budget.
Subgraph instantiate(const KnowledgeGraph& kg, const EvidencePattern& p, const MatchConfig& cfg = {});

}  // namespace epr
