#include "epr/pattern.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace epr {

EvidencePattern EvidencePattern::seed(const ErAp& ap) {
    EvidencePattern p;
    std::uint32_t v = p.add_variable();
    if (ap.entity_role == Role::object)
        p.add_edge(PatternNode::var(v), ap.relation, PatternNode::ent(ap.entity));
    else
        p.add_edge(PatternNode::ent(ap.entity), ap.relation, PatternNode::var(v));
    return p;
}

void EvidencePattern::add_edge(PatternNode subject, RelationId relation, PatternNode object) {
    PatternEdge edge{subject, relation, object};
    if (std::find(edges_.begin(), edges_.end(), edge) != edges_.end())
        throw Error("duplicate pattern edge");
    for (const PatternNode& n : {subject, object})
        if (n.is_var() && n.id >= var_count_) throw Error("pattern variable out of range");
    edges_.push_back(edge);
}

std::vector<EntityId> EvidencePattern::entity_nodes() const {
    std::vector<EntityId> out;
    for (const PatternEdge& e : edges_) {
        if (!e.subject.is_var()) out.push_back(e.subject.id);
        if (!e.object.is_var()) out.push_back(e.object.id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool EvidencePattern::contains_entity(EntityId e) const {
    for (const PatternEdge& edge : edges_)
        if ((!edge.subject.is_var() && edge.subject.id == e) || (!edge.object.is_var() && edge.object.id == e))
            return true;
    return false;
}

std::vector<PatternNode> EvidencePattern::nodes() const {
    std::vector<PatternNode> out;
    for (const PatternEdge& e : edges_) {
        out.push_back(e.subject);
        out.push_back(e.object);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t EvidencePattern::node_degree(const PatternNode& n) const {
    std::size_t deg = 0;
    for (const PatternEdge& e : edges_) {
        if (e.subject == n) ++deg;
        if (e.object == n) ++deg;
    }
    return deg;
}

bool EvidencePattern::connected() const {
    auto all = nodes();
    if (all.empty()) return true;
    std::vector<PatternNode> frontier{all[0]};
    std::vector<PatternNode> seen{all[0]};
    while (!frontier.empty()) {
        PatternNode n = frontier.back();
        frontier.pop_back();
        for (const PatternEdge& e : edges_) {
            PatternNode other;
            if (e.subject == n) other = e.object;
            else if (e.object == n) other = e.subject;
            else continue;
            if (std::find(seen.begin(), seen.end(), other) == seen.end()) {
                seen.push_back(other);
                frontier.push_back(other);
            }
        }
    }
    return seen.size() == all.size();
}

EvidencePattern EvidencePattern::substituted(std::uint32_t var, EntityId e) const {
    if (var >= var_count_) throw Error("pattern variable out of range");
    EvidencePattern out;
    out.var_count_ = var_count_ - 1;
    auto map_node = [&](PatternNode n) {
        if (!n.is_var()) return n;
        if (n.id == var) return PatternNode::ent(e);
        return PatternNode::var(n.id > var ? n.id - 1 : n.id);
    };
    out.edges_.reserve(edges_.size());
    for (const PatternEdge& edge : edges_)
        out.edges_.push_back({map_node(edge.subject), edge.relation, map_node(edge.object)});
    return out;
}

EvidencePattern EvidencePattern::canonicalized() const {
    if (var_count_ > 9) throw Error("pattern too large to canonicalize: " + std::to_string(var_count_) + " variables");
    std::vector<std::uint32_t> perm(var_count_);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<PatternEdge> best;
    std::vector<PatternEdge> trial(edges_.size());
    bool first = true;
    do {
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            auto map_node = [&](PatternNode n) {
                return n.is_var() ? PatternNode::var(perm[n.id]) : n;
            };
            trial[i] = {map_node(edges_[i].subject), edges_[i].relation, map_node(edges_[i].object)};
        }
        std::sort(trial.begin(), trial.end());
        if (first || trial < best) {
            best = trial;
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    EvidencePattern out;
    out.var_count_ = var_count_;
    out.edges_ = std::move(best);
    return out;
}

std::string EvidencePattern::canonical_key() const {
    EvidencePattern canon = canonicalized();
    std::string key;
    for (const PatternEdge& e : canon.edges_) {
        auto append_node = [&](const PatternNode& n) {
            key += n.is_var() ? '?' : 'e';
            key += std::to_string(n.id);
        };
        append_node(e.subject);
        key += ' ';
        key += std::to_string(e.relation);
        key += ' ';
        append_node(e.object);
        key += ';';
    }
    return key;
}

std::vector<ErAp> entity_incidences(const EvidencePattern& p) {
    std::vector<ErAp> out;
    for (const PatternEdge& e : p.edges()) {
        if (!e.subject.is_var()) out.push_back({e.subject.id, e.relation, Role::subject});
        if (!e.object.is_var()) out.push_back({e.object.id, e.relation, Role::object});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<RrAp> variable_rraps(const EvidencePattern& p) {
    std::vector<RrAp> out;
    for (std::uint32_t v = 0; v < p.variable_count(); ++v) {
        PatternNode node = PatternNode::var(v);
        // incidences of v: (edge index, role); a self-loop would contribute two
        std::vector<std::pair<std::size_t, Role>> inc;
        const auto& edges = p.edges();
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (edges[i].subject == node) inc.push_back({i, Role::subject});
            if (edges[i].object == node) inc.push_back({i, Role::object});
        }
        for (std::size_t a = 0; a < inc.size(); ++a)
            for (std::size_t b = a + 1; b < inc.size(); ++b) {
                if (inc[a].first == inc[b].first) continue;
                out.push_back(make_rrap(edges[inc[a].first].relation, inc[a].second,
                                        edges[inc[b].first].relation, inc[b].second));
            }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace epr
