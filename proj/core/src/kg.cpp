#include "epr/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

namespace epr {

const char* to_string(Role r) { return r == Role::subject ? "as_subject" : "as_object"; }

std::uint32_t SymbolTable::intern(std::string_view identifier) {
    auto it = lookup_.find(std::string(identifier));
    if (it != lookup_.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(ids_.size());
    ids_.emplace_back(identifier);
    labels_.emplace_back();
    lookup_.emplace(ids_.back(), id);
    return id;
}

std::optional<std::uint32_t> SymbolTable::find(std::string_view identifier) const {
    auto it = lookup_.find(std::string(identifier));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

const std::string& SymbolTable::identifier(std::uint32_t id) const {
    if (id >= ids_.size()) throw Error("symbol handle out of range: " + std::to_string(id));
    return ids_[id];
}

const std::string& SymbolTable::label_or_id(std::uint32_t id) const {
    if (id >= ids_.size()) throw Error("symbol handle out of range: " + std::to_string(id));
    return labels_[id].empty() ? ids_[id] : labels_[id];
}

bool SymbolTable::has_label(std::uint32_t id) const {
    return id < labels_.size() && !labels_[id].empty();
}

void SymbolTable::set_label(std::uint32_t id, std::string label) {
    if (id >= ids_.size()) throw Error("symbol handle out of range: " + std::to_string(id));
    labels_[id] = std::move(label);
}

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

[[noreturn]] void parse_fail(std::size_t lineno, const std::string& what) {
    throw Error("parse error at line " + std::to_string(lineno) + ": " + what);
}

// N-Triples terms. Literals are reported so the caller can skip/count them.
struct NtTerm {
    std::string value;
    bool is_literal = false;
};

NtTerm read_nt_term(std::string_view line, std::size_t& pos, std::size_t lineno) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) parse_fail(lineno, "unexpected end of statement");
    NtTerm term;
    char c = line[pos];
    if (c == '<') {
        std::size_t end = line.find('>', pos + 1);
        if (end == std::string_view::npos) parse_fail(lineno, "unterminated IRI");
        term.value = std::string(line.substr(pos + 1, end - pos - 1));
        pos = end + 1;
    } else if (c == '_') {
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        term.value = std::string(line.substr(pos, end - pos));
        pos = end;
    } else if (c == '"') {
        std::size_t end = pos + 1;
        while (end < line.size()) {
            if (line[end] == '\\') {
                end += 2;
                continue;
            }
            if (line[end] == '"') break;
            ++end;
        }
        if (end >= line.size()) parse_fail(lineno, "unterminated literal");
        ++end;
        // optional @lang or ^^<datatype>
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        term.value = std::string(line.substr(pos, end - pos));
        term.is_literal = true;
        pos = end;
    } else {
        parse_fail(lineno, std::string("unexpected character '") + c + "'");
    }
    if (term.value.empty()) parse_fail(lineno, "empty term");
    return term;
}

}  // namespace

KnowledgeGraph KnowledgeGraph::ingest(std::istream& in, TripleFormat format, IngestStats* stats) {
    KnowledgeGraph kg;
    IngestStats local;
    std::vector<Triple> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        ++local.lines;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        if (format == TripleFormat::tsv) {
            auto fields = split(line, '\t');
            if (fields.size() != 3)
                parse_fail(lineno, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
            for (const auto& f : fields)
                if (f.empty()) parse_fail(lineno, "empty field");
            Triple t;
            t.subject = kg.entities_.intern(fields[0]);
            t.relation = kg.relations_.intern(fields[1]);
            t.object = kg.entities_.intern(fields[2]);
            raw.push_back(t);
        } else {
            std::size_t pos = 0;
            NtTerm s = read_nt_term(line, pos, lineno);
            if (s.is_literal) parse_fail(lineno, "literal in subject position");
            NtTerm p = read_nt_term(line, pos, lineno);
            if (p.is_literal) parse_fail(lineno, "literal in predicate position");
            if (!p.value.empty() && p.value[0] == '_') parse_fail(lineno, "blank node in predicate position");
            NtTerm o = read_nt_term(line, pos, lineno);
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos >= line.size() || line[pos] != '.') parse_fail(lineno, "statement must end with '.'");
            if (o.is_literal) {
                ++local.literals_skipped;
                continue;
            }
            Triple t;
            t.subject = kg.entities_.intern(s.value);
            t.relation = kg.relations_.intern(p.value);
            t.object = kg.entities_.intern(o.value);
            raw.push_back(t);
        }
    }
    std::sort(raw.begin(), raw.end());
    auto last = std::unique(raw.begin(), raw.end());
    local.duplicates = static_cast<std::size_t>(raw.end() - last);
    raw.erase(last, raw.end());
    local.triples = raw.size();
    kg.triples_ = std::move(raw);
    kg.rebuild_indexes();
    if (stats) {
        stats->lines += local.lines;
        stats->triples = local.triples;
        stats->duplicates += local.duplicates;
        stats->literals_skipped += local.literals_skipped;
    }
    return kg;
}

KnowledgeGraph KnowledgeGraph::ingest_file(const std::string& triples_path, TripleFormat format,
                                           const std::string& labels_path, IngestStats* stats) {
    std::ifstream in(triples_path);
    if (!in) throw Error("cannot open triples file: " + triples_path);
    KnowledgeGraph kg = ingest(in, format, stats);
    if (!labels_path.empty()) {
        std::ifstream labels(labels_path);
        if (!labels) throw Error("cannot open labels file: " + labels_path);
        kg.load_labels(labels, stats);
    }
    return kg;
}

void KnowledgeGraph::load_labels(std::istream& in, IngestStats* stats) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t loaded = 0, unmatched = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 2)
            parse_fail(lineno, "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
        bool matched = false;
        if (auto e = entities_.find(fields[0])) {
            entities_.set_label(*e, fields[1]);
            matched = true;
        }
        if (auto r = relations_.find(fields[0])) {
            relations_.set_label(*r, fields[1]);
            matched = true;
        }
        matched ? ++loaded : ++unmatched;
    }
    if (stats) {
        stats->labels_loaded += loaded;
        stats->labels_unmatched += unmatched;
    }
}

void KnowledgeGraph::rebuild_indexes() {
    const std::uint32_t n_ent = static_cast<std::uint32_t>(entities_.size());
    const std::uint32_t n_rel = static_cast<std::uint32_t>(relations_.size());
    const std::uint32_t n = static_cast<std::uint32_t>(triples_.size());

    subject_offsets_.assign(n_ent + 1, 0);
    for (const Triple& t : triples_) ++subject_offsets_[t.subject + 1];
    for (std::uint32_t i = 0; i < n_ent; ++i) subject_offsets_[i + 1] += subject_offsets_[i];

    by_object_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) by_object_[i] = i;
    std::sort(by_object_.begin(), by_object_.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Triple& x = triples_[a];
        const Triple& y = triples_[b];
        if (x.object != y.object) return x.object < y.object;
        if (x.relation != y.relation) return x.relation < y.relation;
        return x.subject < y.subject;
    });
    object_offsets_.assign(n_ent + 1, 0);
    for (const Triple& t : triples_) ++object_offsets_[t.object + 1];
    for (std::uint32_t i = 0; i < n_ent; ++i) object_offsets_[i + 1] += object_offsets_[i];

    by_relation_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) by_relation_[i] = i;
    std::stable_sort(by_relation_.begin(), by_relation_.end(), [&](std::uint32_t a, std::uint32_t b) {
        return triples_[a].relation < triples_[b].relation;
    });
    relation_offsets_.assign(n_rel + 1, 0);
    for (const Triple& t : triples_) ++relation_offsets_[t.relation + 1];
    for (std::uint32_t i = 0; i < n_rel; ++i) relation_offsets_[i + 1] += relation_offsets_[i];
}

void KnowledgeGraph::check_entity(EntityId e) const {
    if (e >= entities_.size()) throw Error("unknown entity handle: " + std::to_string(e));
}

bool KnowledgeGraph::contains(const Triple& t) const {
    return std::binary_search(triples_.begin(), triples_.end(), t);
}

std::span<const Triple> KnowledgeGraph::edges_of_subject(EntityId e) const {
    check_entity(e);
    return {triples_.data() + subject_offsets_[e], triples_.data() + subject_offsets_[e + 1]};
}

std::span<const std::uint32_t> KnowledgeGraph::edges_of_object(EntityId e) const {
    check_entity(e);
    return {by_object_.data() + object_offsets_[e], by_object_.data() + object_offsets_[e + 1]};
}

std::span<const std::uint32_t> KnowledgeGraph::triples_with_relation(RelationId r) const {
    if (r >= relations_.size()) throw Error("unknown relation handle: " + std::to_string(r));
    return {by_relation_.data() + relation_offsets_[r], by_relation_.data() + relation_offsets_[r + 1]};
}

std::vector<IncidentEdge> KnowledgeGraph::incident_edges(EntityId e) const {
    std::vector<IncidentEdge> out;
    auto outgoing = edges_of_subject(e);
    auto incoming = edges_of_object(e);
    out.reserve(outgoing.size() + incoming.size());
    for (const Triple& t : outgoing) out.push_back({t.relation, Role::subject, t.object});
    for (std::uint32_t i : incoming) out.push_back({triples_[i].relation, Role::object, triples_[i].subject});
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t KnowledgeGraph::degree(EntityId e) const {
    return edges_of_subject(e).size() + edges_of_object(e).size();
}

std::vector<EntityId> KnowledgeGraph::neighbors(EntityId e, RelationId r, Role role) const {
    std::vector<EntityId> out;
    if (role == Role::subject) {
        auto span = edges_of_subject(e);
        auto lo = std::lower_bound(span.begin(), span.end(), r,
                                   [](const Triple& t, RelationId rel) { return t.relation < rel; });
        for (auto it = lo; it != span.end() && it->relation == r; ++it) out.push_back(it->object);
    } else {
        auto span = edges_of_object(e);
        auto lo = std::lower_bound(span.begin(), span.end(), r, [&](std::uint32_t idx, RelationId rel) {
            return triples_[idx].relation < rel;
        });
        for (auto it = lo; it != span.end() && triples_[*it].relation == r; ++it)
            out.push_back(triples_[*it].subject);
    }
    return out;
}

std::size_t KnowledgeGraph::neighbor_count(EntityId e, RelationId r, Role role) const {
    if (role == Role::subject) {
        auto span = edges_of_subject(e);
        auto range = std::equal_range(span.begin(), span.end(), Triple{e, r, 0},
                                      [](const Triple& a, const Triple& b) {
                                          return a.relation < b.relation;
                                      });
        return static_cast<std::size_t>(range.second - range.first);
    }
    auto span = edges_of_object(e);
    auto lo = std::lower_bound(span.begin(), span.end(), r, [&](std::uint32_t idx, RelationId rel) {
        return triples_[idx].relation < rel;
    });
    std::size_t count = 0;
    for (auto it = lo; it != span.end() && triples_[*it].relation == r; ++it) ++count;
    return count;
}

}  // namespace epr
