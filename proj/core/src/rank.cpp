#include "epr/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epr/util.hpp"

namespace epr {

std::vector<float> BaselineScorer::score(std::span<const ScoreRequest> requests) {
    std::vector<float> out;
    out.reserve(requests.size());
    for (const ScoreRequest& req : requests) {
        float mean = 0.0f;
        if (!req.rr_provenance.empty()) {
            for (const RrApScore& s : req.rr_provenance) mean += s.score;
            mean /= float(req.rr_provenance.size());
        }
        std::vector<float> q = provider_.embed(req.question);
        std::vector<float> p = provider_.embed(req.pattern_text);
        out.push_back(mean + cosine(q, p));
    }
    return out;
}

std::string variable_name(std::size_t i) {
    static constexpr const char* base[] = {"?u", "?v", "?w", "?x", "?y", "?z"};
    if (i < 6) return base[i];
    return "?z" + std::to_string(i - 5);
}

std::vector<std::string> variable_display_names(const EvidencePattern& p) {
    std::vector<std::string> names(p.variable_count());
    std::size_t next = 0;
    for (const PatternEdge& e : p.edges())
        for (const PatternNode* n : {&e.subject, &e.object})
            if (n->is_var() && names.at(n->id).empty()) names[n->id] = variable_name(next++);
    return names;
}

std::string serialize_ep_triplets(const EvidencePattern& p, const KnowledgeGraph& kg) {
    EvidencePattern c = p.canonicalized();
    std::vector<std::string> names = variable_display_names(c);
    auto node_text = [&](const PatternNode& n) -> std::string {
        if (!n.is_var()) return entity_text(kg, n.id);
        return names.at(n.id);
    };
    std::string out;
    for (const PatternEdge& e : c.edges()) {
        if (!out.empty()) out += " ; ";
        out += node_text(e.subject);
        out += ' ';
        out += relation_text(kg, e.relation);
        out += ' ';
        out += node_text(e.object);
    }
    out += " ;";
    return out;
}

std::string serialize_ep(const EvidencePattern& p, const KnowledgeGraph& kg,
                         std::string_view question_text) {
    return to_lower(question_text) + " [SEP] " + serialize_ep_triplets(p, kg);
}

std::vector<Candidate> attach_provenance(std::span<const EvidencePattern> patterns,
                                         std::span<const RetrievalHit> hits,
                                         const KnowledgeGraph& kg) {
    std::vector<Candidate> out;
    out.reserve(patterns.size());
    for (const EvidencePattern& p : patterns) {
        Candidate c;
        c.pattern = p;
        c.text = serialize_ep_triplets(p, kg);
        for (const RrAp& ap : variable_rraps(p)) {
            auto it = std::find_if(hits.begin(), hits.end(),
                                   [&](const RetrievalHit& h) { return h.ap == ap; });
            if (it == hits.end())
                throw Error("candidate uses a relation pair absent from the retrieved set: " +
                            serialize_rrap(ap, kg));
            c.provenance.push_back({ap, it->score});
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ScoredCandidate> rank_candidates(std::string_view question_text,
                                             std::span<const Candidate> candidates,
                                             PairScorer& scorer, std::size_t batch_size) {
    if (batch_size == 0) throw Error("rank: batch size must be positive");
    std::vector<float> scores(candidates.size());
    std::vector<ScoreRequest> batch;
    for (std::size_t done = 0; done < candidates.size();) {
        std::size_t n = std::min(batch_size, candidates.size() - done);
        batch.clear();
        batch.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            batch.push_back({std::string(question_text), candidates[done + i].text,
                             candidates[done + i].provenance});
        std::vector<float> got = scorer.score(batch);
        if (got.size() != n)
            throw Error("scorer '" + scorer.name() + "' returned " + std::to_string(got.size()) +
                        " scores for " + std::to_string(n) + " pairs");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(got[i]))
                throw Error("scorer '" + scorer.name() + "' returned a non-finite score");
            scores[done + i] = got[i];
        }
        done += n;
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a].pattern.edge_count() != candidates[b].pattern.edge_count())
            return candidates[a].pattern.edge_count() < candidates[b].pattern.edge_count();
        return candidates[a].text < candidates[b].text;
    });
    std::vector<ScoredCandidate> out;
    out.reserve(order.size());
    for (std::size_t i : order)
        out.push_back({candidates[i].pattern, candidates[i].text, candidates[i].provenance,
                       scores[i]});
    return out;
}

}  // namespace epr
