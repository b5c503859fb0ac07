#include "epr/atomic.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace epr {

const char* to_string(LinkTag tag) {
    switch (tag) {
        case LinkTag::SS: return "SS";
        case LinkTag::SO: return "SO";
        case LinkTag::OS: return "OS";
        case LinkTag::OO: return "OO";
    }
    throw Error("invalid link tag");
}

std::optional<LinkTag> parse_tag(std::string_view text) {
    if (text == "SS") return LinkTag::SS;
    if (text == "SO") return LinkTag::SO;
    if (text == "OS") return LinkTag::OS;
    if (text == "OO") return LinkTag::OO;
    return std::nullopt;
}

LinkTag make_tag(Role first, Role second) {
    int code = (first == Role::object ? 2 : 0) + (second == Role::object ? 1 : 0);
    return static_cast<LinkTag>(code);
}

LinkTag mirror(LinkTag tag) {
    switch (tag) {
        case LinkTag::SS: return LinkTag::SS;
        case LinkTag::SO: return LinkTag::OS;
        case LinkTag::OS: return LinkTag::SO;
        case LinkTag::OO: return LinkTag::OO;
    }
    throw Error("invalid link tag");
}

Role tag_first(LinkTag tag) {
    return (tag == LinkTag::OS || tag == LinkTag::OO) ? Role::object : Role::subject;
}

Role tag_second(LinkTag tag) {
    return (tag == LinkTag::SO || tag == LinkTag::OO) ? Role::object : Role::subject;
}

RrAp mirrored(const RrAp& ap) { return {ap.rel2, ap.rel1, mirror(ap.tag)}; }

RrAp canonical(const RrAp& ap) { return std::min(ap, mirrored(ap)); }

bool is_canonical(const RrAp& ap) { return ap == canonical(ap); }

RrAp make_rrap(RelationId r1, Role role1, RelationId r2, Role role2) {
    return canonical(RrAp{r1, r2, make_tag(role1, role2)});
}

std::vector<RrAp> extract_rraps(const KnowledgeGraph& kg) {
    std::vector<RrAp> out;
    // Incidence kinds per node: (relation, role) with edge multiplicity and a
    // witness edge, enough to honor the distinct-edge rule without a full
    // pairwise sweep. A self-loop is one edge appearing under both roles.
    struct Kind {
        RelationId rel;
        Role role;
        std::size_t count;
        std::uint64_t witness;
    };
    std::vector<Kind> kinds;
    const auto& triples = kg.triples();
    for (EntityId e = 0; e < kg.entity_count(); ++e) {
        kinds.clear();
        auto push = [&](RelationId rel, Role role, std::uint64_t edge) {
            if (!kinds.empty() && kinds.back().rel == rel && kinds.back().role == role) {
                ++kinds.back().count;
                return;
            }
            kinds.push_back({rel, role, 1, edge});
        };
        auto outgoing = kg.edges_of_subject(e);
        for (std::size_t i = 0; i < outgoing.size(); ++i)
            push(outgoing[i].relation, Role::subject, reinterpret_cast<std::uintptr_t>(&outgoing[i]));
        auto incoming = kg.edges_of_object(e);
        for (std::uint32_t idx : incoming)
            push(triples[idx].relation, Role::object, reinterpret_cast<std::uintptr_t>(&triples[idx]));
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (kinds[i].count >= 2) out.push_back(make_rrap(kinds[i].rel, kinds[i].role, kinds[i].rel, kinds[i].role));
            for (std::size_t j = i + 1; j < kinds.size(); ++j) {
                // the only way two kinds can share their sole edge is a self-loop
                if (kinds[i].count == 1 && kinds[j].count == 1 && kinds[i].witness == kinds[j].witness)
                    continue;
                out.push_back(make_rrap(kinds[i].rel, kinds[i].role, kinds[j].rel, kinds[j].role));
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<ErAp> collect_eraps(const KnowledgeGraph& kg, std::span<const EntityId> entities) {
    std::vector<ErAp> out;
    for (EntityId e : entities) {
        if (e >= kg.entity_count()) throw Error("unknown entity handle: " + std::to_string(e));
        for (const IncidentEdge& edge : kg.incident_edges(e))
            out.push_back({e, edge.relation, edge.role});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string relation_text(const KnowledgeGraph& kg, RelationId r) {
    std::string text = to_lower(kg.relations().label_or_id(r));
    std::replace(text.begin(), text.end(), '.', ' ');
    return text;
}

std::string entity_text(const KnowledgeGraph& kg, EntityId e) {
    return to_lower(kg.entities().label_or_id(e));
}

std::string serialize_rrap(const RrAp& ap, const KnowledgeGraph& kg) {
    return relation_text(kg, ap.rel1) + " " + to_string(ap.tag) + " " + relation_text(kg, ap.rel2);
}

std::optional<RrAp> parse_rrap(std::string_view text, const KnowledgeGraph& kg) {
    auto resolve = [&](std::string_view rendered) -> std::optional<RelationId> {
        for (RelationId r = 0; r < kg.relation_count(); ++r)
            if (relation_text(kg, r) == rendered) return r;
        return std::nullopt;
    };
    for (std::size_t pos = 0; pos + 4 <= text.size(); ++pos) {
        if (text[pos] != ' ') continue;
        auto tag = parse_tag(text.substr(pos + 1, 2));
        if (!tag || pos + 3 >= text.size() || text[pos + 3] != ' ') continue;
        auto left = resolve(text.substr(0, pos));
        auto right = resolve(text.substr(pos + 4));
        if (left && right) return RrAp{*left, *right, *tag};
    }
    return std::nullopt;
}

void write_rrap_dump(std::ostream& out, std::span<const RrAp> aps, const KnowledgeGraph& kg) {
    for (const RrAp& ap : aps) {
        out << kg.relations().identifier(ap.rel1) << '\t' << to_string(ap.tag) << '\t'
            << kg.relations().identifier(ap.rel2) << '\n';
    }
}

std::vector<RrAp> read_rrap_dump(std::istream& in, const KnowledgeGraph& kg) {
    std::vector<RrAp> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw Error("parse error at line " + std::to_string(lineno) + ": expected 3 fields");
        auto r1 = kg.relations().find(fields[0]);
        auto tag = parse_tag(fields[1]);
        auto r2 = kg.relations().find(fields[2]);
        if (!r1) throw Error("parse error at line " + std::to_string(lineno) + ": unknown relation " + fields[0]);
        if (!tag) throw Error("parse error at line " + std::to_string(lineno) + ": unknown tag " + fields[1]);
        if (!r2) throw Error("parse error at line " + std::to_string(lineno) + ": unknown relation " + fields[2]);
        out.push_back(RrAp{*r1, *r2, *tag});
    }
    return out;
}

}  // namespace epr
