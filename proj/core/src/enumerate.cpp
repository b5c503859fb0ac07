#include "epr/enumerate.hpp"

#include <algorithm>
#include <map>

namespace epr {

ApUniverse::ApUniverse(std::span<const ErAp> er, std::span<const RrAp> rr)
    : er_(er.begin(), er.end()) {
    std::sort(er_.begin(), er_.end());
    er_.erase(std::unique(er_.begin(), er_.end()), er_.end());
    rr_.reserve(rr.size());
    for (const RrAp& ap : rr) rr_.push_back(canonical(ap));
    std::sort(rr_.begin(), rr_.end());
    rr_.erase(std::unique(rr_.begin(), rr_.end()), rr_.end());
}

bool ApUniverse::has_er(const ErAp& ap) const {
    return std::binary_search(er_.begin(), er_.end(), ap);
}

bool ApUniverse::has_rr(const RrAp& ap) const {
    RrAp c = canonical(ap);
    return std::binary_search(rr_.begin(), rr_.end(), c);
}

bool pattern_closed(const EvidencePattern& p, const ApUniverse& aps) {
    for (const ErAp& inc : entity_incidences(p))
        if (!aps.has_er(inc)) return false;
    for (const RrAp& adj : variable_rraps(p))
        if (!aps.has_rr(adj)) return false;
    return true;
}

std::vector<EvidencePattern> er_expansions(const EvidencePattern& p, const ErAp& ap, const ApUniverse& aps) {
    std::vector<EvidencePattern> out;
    if (p.contains_entity(ap.entity)) return out;
    std::vector<std::string> seen;
    for (std::uint32_t v = 0; v < p.variable_count(); ++v) {
        PatternNode node = PatternNode::var(v);
        bool site = false;
        for (const PatternEdge& e : p.edges()) {
            // the variable must sit where the entity will: its incident edge
            // realizes (relation, entity_role) after substitution
            if (e.relation != ap.relation) continue;
            if (ap.entity_role == Role::object ? e.object == node : e.subject == node) {
                site = true;
                break;
            }
        }
        if (!site) continue;
        EvidencePattern next = p.substituted(v, ap.entity).canonicalized();
        if (!pattern_closed(next, aps)) continue;
        std::string key = next.canonical_key();
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        out.push_back(std::move(next));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<EvidencePattern> rr_expansions(const EvidencePattern& p, const RrAp& ap, const ApUniverse& aps) {
    std::vector<EvidencePattern> out;
    std::vector<std::string> seen;
    // a canonical RR pattern licenses attachment from either of its two sides
    RrAp sides[2] = {ap, mirrored(ap)};
    std::size_t n_sides = (sides[0] == sides[1]) ? 1 : 2;
    for (std::size_t s = 0; s < n_sides; ++s) {
        RelationId existing_rel = sides[s].rel1;
        Role shared_in_existing = tag_first(sides[s].tag);
        RelationId new_rel = sides[s].rel2;
        Role shared_in_new = tag_second(sides[s].tag);
        for (std::uint32_t v = 0; v < p.variable_count(); ++v) {
            PatternNode node = PatternNode::var(v);
            bool site = false;
            for (const PatternEdge& e : p.edges()) {
                if (e.relation != existing_rel) continue;
                if (shared_in_existing == Role::subject ? e.subject == node : e.object == node) {
                    site = true;
                    break;
                }
            }
            if (!site) continue;
            EvidencePattern next = p;
            std::uint32_t fresh = next.add_variable();
            if (shared_in_new == Role::subject)
                next.add_edge(node, new_rel, PatternNode::var(fresh));
            else
                next.add_edge(PatternNode::var(fresh), new_rel, node);
            next = next.canonicalized();
            if (!pattern_closed(next, aps)) continue;
            std::string key = next.canonical_key();
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            out.push_back(std::move(next));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool expandable(const EvidencePattern& p, const ErAp& ap, const ApUniverse& aps) {
    return !er_expansions(p, ap, aps).empty();
}

bool expandable(const EvidencePattern& p, const RrAp& ap, const ApUniverse& aps) {
    return !rr_expansions(p, ap, aps).empty();
}

bool is_valid_pattern(const KnowledgeGraph& kg, const EvidencePattern& p,
                      std::span<const EntityId> topics, const MatchConfig& cfg) {
    for (EntityId t : topics)
        if (!p.contains_entity(t)) return false;
    std::size_t dangling_vars = 0;
    for (const PatternNode& n : p.nodes()) {
        if (p.node_degree(n) != 1) continue;
        if (n.is_var()) {
            ++dangling_vars;
        } else if (std::find(topics.begin(), topics.end(), static_cast<EntityId>(n.id)) == topics.end()) {
            return false;  // a non-topic entity may not be an endpoint
        }
    }
    if (dangling_vars > 1) return false;
    return exists_match(kg, p, cfg);
}

EnumerationResult enumerate_candidates(const KnowledgeGraph& kg, std::span<const EntityId> topics,
                                       std::span<const ErAp> er_aps, std::span<const RrAp> rr_aps,
                                       const EnumerationConfig& cfg) {
    ApUniverse aps(er_aps, rr_aps);
    EnumerationResult result;
    std::unordered_map<std::string, bool> valid_memo;  // satisfiability is the pricey bit

    auto is_valid = [&](const EvidencePattern& p, const std::string& key) {
        auto it = valid_memo.find(key);
        if (it != valid_memo.end()) return it->second;
        bool v = is_valid_pattern(kg, p, topics, cfg.match);
        valid_memo.emplace(key, v);
        return v;
    };

    // level = patterns with a fixed edge count, keyed canonically
    std::map<std::string, EvidencePattern> level;
    for (const ErAp& ap : aps.er()) {
        EvidencePattern p = EvidencePattern::seed(ap).canonicalized();
        if (!pattern_closed(p, aps)) continue;
        level.emplace(p.canonical_key(), std::move(p));
    }

    for (std::uint32_t depth = 1; !level.empty(); ++depth) {
        // close the level under entity substitutions (map nodes are stable)
        std::vector<const EvidencePattern*> worklist;
        for (auto& [key, p] : level) worklist.push_back(&p);
        bool overflow = false;
        while (!worklist.empty() && !overflow) {
            const EvidencePattern p = *worklist.back();
            worklist.pop_back();
            for (const ErAp& ap : aps.er()) {
                for (EvidencePattern& next : er_expansions(p, ap, aps)) {
                    std::string key = next.canonical_key();
                    auto [it, inserted] = level.emplace(std::move(key), std::move(next));
                    if (inserted) worklist.push_back(&it->second);
                }
                if (result.states_visited + level.size() > cfg.state_cap) {
                    overflow = true;
                    break;
                }
            }
        }

        result.states_visited += level.size();
        if (overflow || result.states_visited > cfg.state_cap) {
            result.truncated = true;
            break;
        }

        // collect valid patterns in canonical key order
        bool capped = false;
        for (const auto& [key, p] : level) {
            if (!is_valid(p, key)) continue;
            if (result.candidates.size() >= cfg.candidate_cap) {
                result.truncated = true;
                capped = true;
                break;
            }
            result.candidates.push_back(p);
        }
        if (capped || depth >= cfg.tau) break;

        std::map<std::string, EvidencePattern> next_level;
        for (const auto& [key, p] : level) {
            for (const RrAp& ap : aps.rr()) {
                for (EvidencePattern& next : rr_expansions(p, ap, aps)) {
                    std::string nkey = next.canonical_key();
                    next_level.emplace(std::move(nkey), std::move(next));
                }
            }
            if (result.states_visited + next_level.size() > cfg.state_cap) {
                result.truncated = true;
                return result;
            }
        }
        level = std::move(next_level);
    }
    return result;
}

}  // namespace epr
