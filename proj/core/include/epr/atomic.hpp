#pragma once

// Atomic adjacency patterns.
//
// An ER pattern fixes one entity and one incident relation; entity_role says
// which end of the edge the entity occupies (object role = "?v --rel--> e").
// An RR pattern is an unordered pair of relations meeting at a shared node;
// the two-letter tag gives the shared node's role w.r.t. rel1 then rel2.
// Storage keeps the canonical orientation only: relations ordered by handle,
// tag mirrored on swap (SS<->SS, OO<->OO, SO<->OS).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epr/kg.hpp"

namespace epr {

enum class LinkTag : std::uint8_t { SS = 0, SO = 1, OS = 2, OO = 3 };

const char* to_string(LinkTag tag);
std::optional<LinkTag> parse_tag(std::string_view text);
LinkTag make_tag(Role first, Role second);
LinkTag mirror(LinkTag tag);
Role tag_first(LinkTag tag);
Role tag_second(LinkTag tag);

struct ErAp {
    EntityId entity;
    RelationId relation;
    Role entity_role;

    friend auto operator<=>(const ErAp&, const ErAp&) = default;
};

struct RrAp {
    RelationId rel1;
    RelationId rel2;
    LinkTag tag;

    friend auto operator<=>(const RrAp&, const RrAp&) = default;
};

// rel1/rel2 exchanged, tag mirrored — denotes the same adjacency.
RrAp mirrored(const RrAp& ap);
RrAp canonical(const RrAp& ap);
bool is_canonical(const RrAp& ap);
RrAp make_rrap(RelationId r1, Role role1, RelationId r2, Role role2);  // canonical

// All RR patterns realized in the graph: every unordered pair of distinct
// co-incident edges, in canonical form, sorted, deduplicated. A single edge
// never pairs with itself (self-loops contribute two incidences of one edge).
std::vector<RrAp> extract_rraps(const KnowledgeGraph& kg);

// ER patterns of the given entities (one per incident (relation, role) kind,
// sorted, deduplicated). Unknown handles raise.
std::vector<ErAp> collect_eraps(const KnowledgeGraph& kg, std::span<const EntityId> entities);

// Relation rendering shared by every text surface: label when present else
// the external identifier, lowercased, dots replaced by spaces so dotted
// relation names split into their domain words.
std::string relation_text(const KnowledgeGraph& kg, RelationId r);
std::string entity_text(const KnowledgeGraph& kg, EntityId e);

// "rel1_text TAG rel2_text", preserving the orientation passed in.
std::string serialize_rrap(const RrAp& ap, const KnowledgeGraph& kg);
// Inverse of serialize_rrap for well-formed inputs (labels resolved back to
// relation handles; the tag token is the separator).
std::optional<RrAp> parse_rrap(std::string_view text, const KnowledgeGraph& kg);

// Dump format: one pattern per line, "rel1_id<TAB>tag<TAB>rel2_id".
void write_rrap_dump(std::ostream& out, std::span<const RrAp> aps, const KnowledgeGraph& kg);
std::vector<RrAp> read_rrap_dump(std::istream& in, const KnowledgeGraph& kg);

}  // namespace epr
