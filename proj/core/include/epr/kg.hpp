#pragma once

// In-memory knowledge graph over dense integer handles.
//
// Storage layout: one triple array sorted by (subject, relation, object) with
// a CSR offset table per subject, plus two permutation arrays — one sorted by
// (object, relation, subject) and one by (relation, subject, object) — each
// with its own offset table. Every adjacency query is a span + binary search,
// so rebuilding from the same triple list is byte-identical and iteration
// order is always sorted by handle.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epr/util.hpp"

namespace epr {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Role an entity plays inside a triple.
enum class Role : std::uint8_t { subject = 0, object = 1 };

constexpr Role flip(Role r) { return r == Role::subject ? Role::object : Role::subject; }
const char* to_string(Role r);

struct Triple {
    EntityId subject;
    RelationId relation;
    EntityId object;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct IncidentEdge {
    RelationId relation;
    Role role;  // role of the queried entity
    EntityId neighbor;

    friend auto operator<=>(const IncidentEdge&, const IncidentEdge&) = default;
};

enum class TripleFormat { tsv, ntriples };

struct IngestStats {
    std::size_t lines = 0;
    std::size_t triples = 0;
    std::size_t duplicates = 0;
    std::size_t literals_skipped = 0;
    std::size_t labels_loaded = 0;
    std::size_t labels_unmatched = 0;
};

// Interning table: external identifier -> dense handle, plus optional label.
class SymbolTable {
public:
    std::uint32_t intern(std::string_view identifier);
    std::optional<std::uint32_t> find(std::string_view identifier) const;
    const std::string& identifier(std::uint32_t id) const;
    // label if one was loaded, else the external identifier
    const std::string& label_or_id(std::uint32_t id) const;
    bool has_label(std::uint32_t id) const;
    void set_label(std::uint32_t id, std::string label);
    std::size_t size() const { return ids_.size(); }

private:
    std::vector<std::string> ids_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::uint32_t> lookup_;
};

class KnowledgeGraph {
public:
    static KnowledgeGraph ingest(std::istream& in, TripleFormat format, IngestStats* stats = nullptr);
    static KnowledgeGraph ingest_file(const std::string& triples_path, TripleFormat format,
                                      const std::string& labels_path = "", IngestStats* stats = nullptr);
    void load_labels(std::istream& in, IngestStats* stats = nullptr);

    std::size_t triple_count() const { return triples_.size(); }
    std::size_t entity_count() const { return entities_.size(); }
    std::size_t relation_count() const { return relations_.size(); }

    const std::vector<Triple>& triples() const { return triples_; }
    const SymbolTable& entities() const { return entities_; }
    const SymbolTable& relations() const { return relations_; }
    SymbolTable& entities() { return entities_; }
    SymbolTable& relations() { return relations_; }

    bool contains(const Triple& t) const;

    // All edges touching e, sorted by (relation, role, neighbor).
    std::vector<IncidentEdge> incident_edges(EntityId e) const;
    std::size_t degree(EntityId e) const;

    // Neighbors of e over relation r where e plays `role`; sorted, may repeat
    // per parallel source triples (triples are unique, so values are unique).
    std::vector<EntityId> neighbors(EntityId e, RelationId r, Role role) const;
    std::size_t neighbor_count(EntityId e, RelationId r, Role role) const;

    // Triples where e is the subject, sorted by (relation, object).
    std::span<const Triple> edges_of_subject(EntityId e) const;
    // Triple indices where e is the object, sorted by (relation, subject).
    std::span<const std::uint32_t> edges_of_object(EntityId e) const;
    // Triple indices carrying relation r, sorted by (subject, object).
    std::span<const std::uint32_t> triples_with_relation(RelationId r) const;

    // Index rebuild used by tests to confirm determinism of the layout.
    void rebuild_indexes();
    const std::vector<std::uint32_t>& by_object_order() const { return by_object_; }
    const std::vector<std::uint32_t>& by_relation_order() const { return by_relation_; }

private:
    void check_entity(EntityId e) const;

    std::vector<Triple> triples_;                   // sorted (s, r, o), unique
    std::vector<std::uint32_t> subject_offsets_;    // CSR over triples_
    std::vector<std::uint32_t> by_object_;          // triple indices, sorted (o, r, s)
    std::vector<std::uint32_t> object_offsets_;
    std::vector<std::uint32_t> by_relation_;        // triple indices, sorted (r, s, o)
    std::vector<std::uint32_t> relation_offsets_;
    SymbolTable entities_;
    SymbolTable relations_;
};

}  // namespace epr
