#include "epr/match.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace epr {

namespace {

struct Searcher {
    const KnowledgeGraph& kg;
    const std::vector<PatternEdge>& edges;
    std::uint32_t var_count;
    std::uint64_t budget;
    std::uint64_t& steps;

    std::vector<EntityId> value;
    std::vector<bool> known;
    std::vector<std::uint32_t> order;

    Searcher(const KnowledgeGraph& kg_, const EvidencePattern& p, std::uint64_t budget_, std::uint64_t& steps_)
        : kg(kg_), edges(p.edges()), var_count(p.variable_count()), budget(budget_), steps(steps_) {
        value.assign(var_count, 0);
        known.assign(var_count, false);
    }

    void pin(std::uint32_t var, EntityId e) {
        value[var] = e;
        known[var] = true;
    }

    void step() {
        if (++steps > budget)
            throw BudgetExceeded("match step budget exceeded after " + std::to_string(steps - 1) +
                                 " steps (" + std::to_string(edges.size()) + " pattern edges)");
    }

    bool node_value(const PatternNode& n, EntityId& out) const {
        if (!n.is_var()) {
            out = n.id;
            return true;
        }
        if (known[n.id]) {
            out = value[n.id];
            return true;
        }
        return false;
    }

    // edges whose endpoints are all determined must exist in the graph
    bool determined_edges_ok() const {
        for (const PatternEdge& e : edges) {
            EntityId s, o;
            if (node_value(e.subject, s) && node_value(e.object, o))
                if (!kg.contains({s, e.relation, o})) return false;
        }
        return true;
    }

    std::size_t estimate(std::uint32_t v) const {
        std::size_t best = SIZE_MAX;
        PatternNode node = PatternNode::var(v);
        for (const PatternEdge& e : edges) {
            if (e.subject == node) {
                EntityId o;
                if (e.object != node && node_value(e.object, o))
                    best = std::min(best, kg.neighbor_count(o, e.relation, Role::object));
                else
                    best = std::min(best, kg.triples_with_relation(e.relation).size());
            }
            if (e.object == node) {
                EntityId s;
                if (e.subject != node && node_value(e.subject, s))
                    best = std::min(best, kg.neighbor_count(s, e.relation, Role::subject));
                else
                    best = std::min(best, kg.triples_with_relation(e.relation).size());
            }
        }
        return best;
    }

    std::vector<EntityId> candidates_for(std::uint32_t v) const {
        PatternNode node = PatternNode::var(v);
        // prefer an incident edge whose far endpoint is already determined
        std::size_t best_count = SIZE_MAX;
        EntityId best_anchor = 0;
        RelationId best_rel = 0;
        Role best_anchor_role = Role::subject;
        bool have_anchor = false;
        for (const PatternEdge& e : edges) {
            EntityId anchor;
            if (e.subject == node && e.object != node && node_value(e.object, anchor)) {
                std::size_t c = kg.neighbor_count(anchor, e.relation, Role::object);
                if (c < best_count) {
                    best_count = c;
                    best_anchor = anchor;
                    best_rel = e.relation;
                    best_anchor_role = Role::object;
                    have_anchor = true;
                }
            }
            if (e.object == node && e.subject != node && node_value(e.subject, anchor)) {
                std::size_t c = kg.neighbor_count(anchor, e.relation, Role::subject);
                if (c < best_count) {
                    best_count = c;
                    best_anchor = anchor;
                    best_rel = e.relation;
                    best_anchor_role = Role::subject;
                    have_anchor = true;
                }
            }
        }
        if (have_anchor) return kg.neighbors(best_anchor, best_rel, best_anchor_role);

        // otherwise scan the smallest relation extent among incident edges
        std::size_t best_extent = SIZE_MAX;
        RelationId rel = 0;
        Role side = Role::subject;
        for (const PatternEdge& e : edges) {
            if (e.subject != node && e.object != node) continue;
            std::size_t extent = kg.triples_with_relation(e.relation).size();
            if (extent < best_extent) {
                best_extent = extent;
                rel = e.relation;
                side = (e.subject == node) ? Role::subject : Role::object;
            }
        }
        std::vector<EntityId> out;
        if (best_extent == SIZE_MAX) return out;  // isolated variable: no constraint source
        for (std::uint32_t idx : kg.triples_with_relation(rel)) {
            const Triple& t = kg.triples()[idx];
            bool self_loop_edge = false;
            for (const PatternEdge& e : edges)
                if (e.relation == rel && e.subject == node && e.object == node) self_loop_edge = true;
            if (self_loop_edge && t.subject != t.object) continue;
            out.push_back(side == Role::subject ? t.subject : t.object);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool consistent(std::uint32_t v, EntityId c) {
        value[v] = c;
        known[v] = true;
        bool ok = true;
        PatternNode node = PatternNode::var(v);
        for (const PatternEdge& e : edges) {
            if (e.subject != node && e.object != node) continue;
            EntityId s, o;
            if (node_value(e.subject, s) && node_value(e.object, o)) {
                if (!kg.contains({s, e.relation, o})) {
                    ok = false;
                    break;
                }
            }
        }
        known[v] = false;
        return ok;
    }

    bool extend(std::size_t k) {
        if (k == order.size()) return true;
        std::uint32_t v = order[k];
        for (EntityId c : candidates_for(v)) {
            step();
            if (!consistent(v, c)) continue;
            value[v] = c;
            known[v] = true;
            if (extend(k + 1)) return true;
            known[v] = false;
        }
        return false;
    }

    bool run() {
        if (!determined_edges_ok()) return false;
        order.clear();
        for (std::uint32_t v = 0; v < var_count; ++v)
            if (!known[v]) order.push_back(v);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return estimate(a) < estimate(b);
        });
        return extend(0);
    }
};

// per-edge candidate triples honoring fixed endpoints and shared-variable
// equality inside the edge itself
std::vector<Triple> edge_candidates(const KnowledgeGraph& kg, const PatternEdge& e) {
    std::vector<Triple> out;
    bool same_var = e.subject.is_var() && e.object.is_var() && e.subject == e.object;
    if (!e.subject.is_var() && !e.object.is_var()) {
        Triple t{e.subject.id, e.relation, e.object.id};
        if (kg.contains(t)) out.push_back(t);
    } else if (!e.subject.is_var()) {
        for (EntityId o : kg.neighbors(e.subject.id, e.relation, Role::subject))
            out.push_back({e.subject.id, e.relation, o});
    } else if (!e.object.is_var()) {
        for (EntityId s : kg.neighbors(e.object.id, e.relation, Role::object))
            out.push_back({s, e.relation, e.object.id});
    } else {
        for (std::uint32_t idx : kg.triples_with_relation(e.relation)) {
            const Triple& t = kg.triples()[idx];
            if (same_var && t.subject != t.object) continue;
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

bool exists_match(const KnowledgeGraph& kg, const EvidencePattern& p, const MatchConfig& cfg) {
    std::uint64_t steps = 0;
    Searcher s(kg, p, cfg.step_budget, steps);
    return s.run();
}

Subgraph instantiate(const KnowledgeGraph& kg, const EvidencePattern& p, const MatchConfig& cfg) {
    std::uint64_t steps = 0;
    const auto& edges = p.edges();
    std::vector<std::vector<Triple>> cand(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) cand[i] = edge_candidates(kg, edges[i]);

    // arc consistency: a candidate survives only while each of its variable
    // endpoints has support in every other edge touching that variable
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::vector<EntityId>> allowed(p.variable_count());
        std::vector<bool> constrained(p.variable_count(), false);
        for (std::uint32_t v = 0; v < p.variable_count(); ++v) {
            PatternNode node = PatternNode::var(v);
            for (std::size_t i = 0; i < edges.size(); ++i) {
                if (edges[i].subject != node && edges[i].object != node) continue;
                std::vector<EntityId> values;
                for (const Triple& t : cand[i]) {
                    if (edges[i].subject == node) values.push_back(t.subject);
                    if (edges[i].object == node) values.push_back(t.object);
                }
                std::sort(values.begin(), values.end());
                values.erase(std::unique(values.begin(), values.end()), values.end());
                if (!constrained[v]) {
                    allowed[v] = std::move(values);
                    constrained[v] = true;
                } else {
                    std::vector<EntityId> merged;
                    std::set_intersection(allowed[v].begin(), allowed[v].end(), values.begin(),
                                          values.end(), std::back_inserter(merged));
                    allowed[v] = std::move(merged);
                }
            }
        }
        for (std::size_t i = 0; i < edges.size(); ++i) {
            auto keep = [&](const Triple& t) {
                if (edges[i].subject.is_var()) {
                    const auto& a = allowed[edges[i].subject.id];
                    if (!std::binary_search(a.begin(), a.end(), t.subject)) return false;
                }
                if (edges[i].object.is_var()) {
                    const auto& a = allowed[edges[i].object.id];
                    if (!std::binary_search(a.begin(), a.end(), t.object)) return false;
                }
                return true;
            };
            std::size_t before = cand[i].size();
            cand[i].erase(std::remove_if(cand[i].begin(), cand[i].end(),
                                         [&](const Triple& t) { return !keep(t); }),
                          cand[i].end());
            if (cand[i].size() != before) changed = true;
        }
    }

    // pin each surviving triple and verify it extends to a full match; every
    // found match certifies its whole edge image set at once
    std::vector<std::set<Triple>> supported(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (const Triple& t : cand[i]) {
            if (supported[i].count(t)) continue;
            Searcher s(kg, p, cfg.step_budget, steps);
            if (edges[i].subject.is_var()) s.pin(edges[i].subject.id, t.subject);
            if (edges[i].object.is_var()) {
                if (edges[i].subject == edges[i].object && t.subject != t.object) continue;
                s.pin(edges[i].object.id, t.object);
            }
            if (!s.run()) continue;
            for (std::size_t j = 0; j < edges.size(); ++j) {
                EntityId sj, oj;
                if (!s.node_value(edges[j].subject, sj) || !s.node_value(edges[j].object, oj))
                    throw Error("internal: incomplete match assignment");
                supported[j].insert({sj, edges[j].relation, oj});
            }
        }
    }

    Subgraph out;
    out.bindings.assign(p.variable_count(), {});
    std::set<Triple> all;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (const Triple& t : supported[i]) {
            all.insert(t);
            if (edges[i].subject.is_var()) out.bindings[edges[i].subject.id].push_back(t.subject);
            if (edges[i].object.is_var()) out.bindings[edges[i].object.id].push_back(t.object);
        }
    }
    // a satisfiable pattern supports every edge; a failed one supports none
    bool any = false, every = true;
    for (const auto& s : supported) {
        if (s.empty()) every = false;
        else any = true;
    }
    if (any && !every) throw Error("internal: partial edge support");
    out.triples.assign(all.begin(), all.end());
    for (const Triple& t : out.triples) {
        out.nodes.push_back(t.subject);
        out.nodes.push_back(t.object);
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
    for (auto& b : out.bindings) {
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    return out;
}

}  // namespace epr
