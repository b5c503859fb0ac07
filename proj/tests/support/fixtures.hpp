#pragma once

// Shared test fixtures: the small border-country graph most suites exercise,
// its candidate atomic-pattern sets, the gold evidence pattern, a question
// over it, random-graph generation, and scratch-directory helpers.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/kg.hpp"
#include "epr/pattern.hpp"
#include "epr/train.hpp"

namespace fixtures {

using namespace epr;

// Ground truth facts: _b borders Germany and the Netherlands; Stadhuis sits in
// Rotterdam which belongs to the Netherlands. Austria is a same-shaped decoy
// (a country touching Germany) that _b does not border.
inline std::string border_tsv() {
    return "_b\tadjoins\tGermany\n"
           "_b\tadjoins\tNetherlands\n"
           "Netherlands\ttype\tCountry\n"
           "Austria\ttype\tCountry\n"
           "Austria\tsurrounded_by\tGermany\n"
           "Stadhuis\tcontainedby\tRotterdam\n"
           "Rotterdam\tcountry\tNetherlands\n"
           "Netherlands\tpartially_containedby\tWesternEurope\n"
           "WesternEurope\tcontains\tAustria\n"
           "FrankSchinkels\tbirth_place\tRotterdam\n"
           "FrankSchinkels\tnationality\tAustria\n";
}

inline KnowledgeGraph border_kg(IngestStats* stats = nullptr) {
    std::istringstream in(border_tsv());
    return KnowledgeGraph::ingest(in, TripleFormat::tsv, stats);
}

inline EntityId ent(const KnowledgeGraph& kg, std::string_view name) {
    auto id = kg.entities().find(name);
    if (!id) throw std::runtime_error("fixture: unknown entity " + std::string(name));
    return *id;
}

inline RelationId rel(const KnowledgeGraph& kg, std::string_view name) {
    auto id = kg.relations().find(name);
    if (!id) throw std::runtime_error("fixture: unknown relation " + std::string(name));
    return *id;
}

inline std::string border_question_text() {
    return "What country, containing Stadhuis, does Germany border?";
}

inline std::vector<EntityId> border_topics(const KnowledgeGraph& kg) {
    std::vector<EntityId> t = {ent(kg, "Germany"), ent(kg, "Country"), ent(kg, "Stadhuis")};
    std::sort(t.begin(), t.end());
    return t;
}

inline Question border_question(const KnowledgeGraph& kg) {
    Question q;
    q.id = "q1";
    q.text = border_question_text();
    q.topic_raw = {"Germany", "Country", "Stadhuis"};
    q.answer_raw = {"Netherlands"};
    q.topics = border_topics(kg);
    q.answers = {ent(kg, "Netherlands")};
    return q;
}

inline std::string border_question_jsonl() {
    return R"({"id": "q1", "question": "What country, containing Stadhuis, does Germany border?", )"
           R"("topic_entities": ["Germany", "Country", "Stadhuis"], "answers": ["Netherlands"]})"
           "\n";
}

// ER candidates: the three topic anchors with their question-relevant edges.
inline std::vector<ErAp> border_eraps(const KnowledgeGraph& kg) {
    return {
        {ent(kg, "Germany"), rel(kg, "adjoins"), Role::object},
        {ent(kg, "Country"), rel(kg, "type"), Role::object},
        {ent(kg, "Stadhuis"), rel(kg, "containedby"), Role::subject},
    };
}

// RR candidates: exactly the adjacencies of the gold pattern's variable nodes.
inline std::vector<RrAp> border_rraps(const KnowledgeGraph& kg) {
    RelationId adjoins = rel(kg, "adjoins");
    RelationId type = rel(kg, "type");
    RelationId country = rel(kg, "country");
    RelationId containedby = rel(kg, "containedby");
    return {
        make_rrap(adjoins, Role::subject, adjoins, Role::subject),
        make_rrap(adjoins, Role::object, type, Role::subject),
        make_rrap(adjoins, Role::object, country, Role::object),
        make_rrap(type, Role::subject, country, Role::object),
        make_rrap(country, Role::subject, containedby, Role::object),
    };
}

// { ?x1 --adjoins--> Germany, ?x1 --adjoins--> ?x2, ?x2 --type--> Country,
//   ?x3 --country--> ?x2, Stadhuis --containedby--> ?x3 }
inline EvidencePattern gold_pattern(const KnowledgeGraph& kg) {
    EvidencePattern p;
    std::uint32_t x1 = p.add_variable();
    std::uint32_t x2 = p.add_variable();
    std::uint32_t x3 = p.add_variable();
    p.add_edge(PatternNode::var(x1), rel(kg, "adjoins"), PatternNode::ent(ent(kg, "Germany")));
    p.add_edge(PatternNode::var(x1), rel(kg, "adjoins"), PatternNode::var(x2));
    p.add_edge(PatternNode::var(x2), rel(kg, "type"), PatternNode::ent(ent(kg, "Country")));
    p.add_edge(PatternNode::var(x3), rel(kg, "country"), PatternNode::var(x2));
    p.add_edge(PatternNode::ent(ent(kg, "Stadhuis")), rel(kg, "containedby"),
               PatternNode::var(x3));
    return p;
}

// The five graph triples the gold pattern's matches cover.
inline std::set<Triple> gold_triples(const KnowledgeGraph& kg) {
    auto t = [&](std::string_view s, std::string_view r, std::string_view o) {
        return Triple{ent(kg, s), rel(kg, r), ent(kg, o)};
    };
    return {t("_b", "adjoins", "Germany"), t("_b", "adjoins", "Netherlands"),
            t("Netherlands", "type", "Country"), t("Rotterdam", "country", "Netherlands"),
            t("Stadhuis", "containedby", "Rotterdam")};
}

// Random graph over entities e0..e(n-1) and relations r0..r(m-1), fed through
// the normal ingest path (duplicates collapse, so counts are upper bounds).
inline KnowledgeGraph random_kg(std::mt19937_64& rng, std::size_t entities, std::size_t relations,
                                std::size_t triples) {
    std::uniform_int_distribution<std::size_t> pick_e(0, entities - 1);
    std::uniform_int_distribution<std::size_t> pick_r(0, relations - 1);
    std::ostringstream out;
    for (std::size_t i = 0; i < triples; ++i) {
        std::size_t s = pick_e(rng);
        std::size_t o = pick_e(rng);
        if (s == o) o = (o + 1) % entities;
        out << 'e' << s << '\t' << 'r' << pick_r(rng) << '\t' << 'e' << o << '\n';
    }
    std::istringstream in(out.str());
    return KnowledgeGraph::ingest(in, TripleFormat::tsv);
}

// Random connected pattern with 1..3 dense variables, each on some edge;
// usually unsatisfiable on a random graph.
inline EvidencePattern random_pattern(std::mt19937_64& rng, const KnowledgeGraph& kg) {
    std::uniform_int_distribution<std::uint32_t> nvars(1, 3);
    std::uniform_int_distribution<std::size_t> nedges(1, 4);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<EntityId> pick_ent(0, static_cast<EntityId>(kg.entity_count()) - 1);
    std::uniform_int_distribution<RelationId> pick_rel(0,
                                                       static_cast<RelationId>(kg.relation_count()) - 1);
    for (;;) {
        std::uint32_t v = nvars(rng);
        std::uniform_int_distribution<std::uint32_t> pick_var(0, v - 1);
        auto node = [&]() {
            return kind(rng) == 0 ? PatternNode::ent(pick_ent(rng)) : PatternNode::var(pick_var(rng));
        };
        std::vector<PatternEdge> edges;
        std::size_t m = nedges(rng);
        bool dup = false;
        for (std::size_t i = 0; i < m; ++i) {
            PatternEdge e{node(), pick_rel(rng), node()};
            if (std::find(edges.begin(), edges.end(), e) != edges.end()) {
                dup = true;
                break;
            }
            edges.push_back(e);
        }
        if (dup) continue;
        std::vector<bool> used(v, false);
        for (const PatternEdge& e : edges) {
            if (e.subject.is_var()) used[e.subject.id] = true;
            if (e.object.is_var()) used[e.object.id] = true;
        }
        if (std::find(used.begin(), used.end(), false) != used.end()) continue;
        EvidencePattern p;
        for (std::uint32_t i = 0; i < v; ++i) p.add_variable();
        for (const PatternEdge& e : edges) p.add_edge(e.subject, e.relation, e.object);
        if (!p.connected()) continue;
        return p;
    }
}

// Pattern built over an actual random walk, nodes turned into variables with
// probability 0.6, so the identity assignment is always a match.
inline EvidencePattern walk_pattern(std::mt19937_64& rng, const KnowledgeGraph& kg,
                                    std::size_t max_edges = 4) {
    std::uniform_int_distribution<EntityId> pick_ent(0, static_cast<EntityId>(kg.entity_count()) - 1);
    std::uniform_int_distribution<std::size_t> nedges(1, max_edges);
    std::uniform_int_distribution<int> var_roll(0, 4);
    for (;;) {
        EntityId at = pick_ent(rng);
        std::set<Triple> walked;
        std::size_t want = nedges(rng);
        for (std::size_t i = 0; i < want; ++i) {
            auto inc = kg.incident_edges(at);
            if (inc.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, inc.size() - 1);
            const IncidentEdge& e = inc[pick(rng)];
            walked.insert(e.role == Role::subject ? Triple{at, e.relation, e.neighbor}
                                                  : Triple{e.neighbor, e.relation, at});
            at = e.neighbor;
        }
        if (walked.empty()) continue;
        std::map<EntityId, PatternNode> as_node;
        EvidencePattern p;
        auto node_of = [&](EntityId e) {
            auto it = as_node.find(e);
            if (it != as_node.end()) return it->second;
            PatternNode n = var_roll(rng) < 3 ? PatternNode::var(p.add_variable())
                                              : PatternNode::ent(e);
            as_node.emplace(e, n);
            return n;
        };
        for (const Triple& t : walked) {
            PatternNode s = node_of(t.subject);
            PatternNode o = node_of(t.object);
            p.add_edge(s, t.relation, o);
        }
        return p;
    }
}

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        for (int i = 0; i < 64; ++i) {
            auto candidate = base / ("epr_test_" + std::to_string(rng()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("fixture: could not create scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(std::string_view name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("fixture: write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fixture: read failed: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace fixtures
