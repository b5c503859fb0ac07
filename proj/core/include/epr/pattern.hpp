#pragma once

// Evidence patterns: small directed multigraphs whose nodes are either fixed
// entities or locally numbered variables. Canonization brute-forces variable
// renamings (pattern sizes stay in single digits, so V! is cheap) and picks
// the lexicographically smallest sorted edge list; two isomorphic patterns
// therefore share canonical form, key and serialization.

#include <cstdint>
#include <string>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/kg.hpp"

namespace epr {

enum class NodeKind : std::uint8_t { variable = 0, entity = 1 };

struct PatternNode {
    NodeKind kind;
    std::uint32_t id;  // variable ordinal or entity handle

    static PatternNode var(std::uint32_t v) { return {NodeKind::variable, v}; }
    static PatternNode ent(EntityId e) { return {NodeKind::entity, e}; }
    bool is_var() const { return kind == NodeKind::variable; }

    friend auto operator<=>(const PatternNode&, const PatternNode&) = default;
};

struct PatternEdge {
    PatternNode subject;
    RelationId relation;
    PatternNode object;

    friend auto operator<=>(const PatternEdge&, const PatternEdge&) = default;
};

class EvidencePattern {
public:
    EvidencePattern() = default;

    // one-edge pattern realizing the ER pattern: fresh variable on the open end
    static EvidencePattern seed(const ErAp& ap);

    const std::vector<PatternEdge>& edges() const { return edges_; }
    std::uint32_t variable_count() const { return var_count_; }
    std::size_t edge_count() const { return edges_.size(); }

    // Duplicate identical edges are rejected; variable ids must stay dense.
    void add_edge(PatternNode subject, RelationId relation, PatternNode object);
    std::uint32_t add_variable() { return var_count_++; }

    std::vector<EntityId> entity_nodes() const;  // sorted unique
    bool contains_entity(EntityId e) const;
    std::vector<PatternNode> nodes() const;      // sorted unique
    std::size_t node_degree(const PatternNode& n) const;
    bool connected() const;

    // var -> entity; remaining variables are renumbered to stay dense
    EvidencePattern substituted(std::uint32_t var, EntityId e) const;

    EvidencePattern canonicalized() const;
    std::string canonical_key() const;

    friend auto operator<=>(const EvidencePattern&, const EvidencePattern&) = default;

private:
    std::vector<PatternEdge> edges_;
    std::uint32_t var_count_ = 0;
};

// Entity-side incidences of entity-incident edges, one per edge endpoint,
// deduplicated and sorted. These are the ER patterns a candidate set must
// cover for the pattern to be closed.
std::vector<ErAp> entity_incidences(const EvidencePattern& p);

// RR adjacencies at shared *variable* nodes, canonical, deduplicated, sorted.
std::vector<RrAp> variable_rraps(const EvidencePattern& p);

}  // namespace epr
