#include "epr/train.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "epr/util.hpp"

namespace epr {
namespace {

using nlohmann::json;

std::vector<EntityId> resolve_entities(const std::vector<std::string>& raw,
                                       const KnowledgeGraph& kg, std::size_t& unresolved) {
    std::vector<EntityId> out;
    for (const std::string& s : raw) {
        if (auto id = kg.entities().find(s))
            out.push_back(*id);
        else
            ++unresolved;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::string> string_array(const json& j, const char* key, std::size_t line_no,
                                      const std::string& path) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end()) return out;
    if (!it->is_array())
        throw Error(path + ":" + std::to_string(line_no) + ": \"" + key + "\" must be an array");
    for (const json& v : *it) {
        if (!v.is_string())
            throw Error(path + ":" + std::to_string(line_no) + ": \"" + key +
                        "\" entries must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

std::vector<Question> load_questions(const std::string& path, const KnowledgeGraph& kg,
                                     QuestionLoadStats* stats) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open questions file: " + path);
    QuestionLoadStats local;
    std::vector<Question> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("question"))
            throw Error(path + ":" + std::to_string(line_no) +
                        ": each line needs \"id\" and \"question\"");
        Question q;
        q.id = j.at("id").get<std::string>();
        q.text = j.at("question").get<std::string>();
        q.topic_raw = string_array(j, "topic_entities", line_no, path);
        q.answer_raw = string_array(j, "answers", line_no, path);
        q.topics = resolve_entities(q.topic_raw, kg, local.unresolved_topics);
        q.answers = resolve_entities(q.answer_raw, kg, local.unresolved_answers);
        if (q.topics.empty()) ++local.without_topics;
        ++local.total;
        out.push_back(std::move(q));
    }
    if (stats) *stats = local;
    return out;
}

namespace {

// All simple paths from `from` to `to`, at most `hops` edges, either direction
// per edge; ends as soon as `to` is reached.
void simple_paths(const KnowledgeGraph& kg, EntityId from, EntityId to, std::size_t hops,
                  std::vector<Triple>& edges, std::vector<EntityId>& visited,
                  std::vector<std::vector<Triple>>& out) {
    EntityId cur = visited.back();
    if (cur == to) {
        if (!edges.empty()) out.push_back(edges);
        return;
    }
    if (edges.size() >= hops) return;
    for (const IncidentEdge& ie : kg.incident_edges(cur)) {
        if (std::find(visited.begin(), visited.end(), ie.neighbor) != visited.end()) continue;
        Triple t = ie.role == Role::subject ? Triple{cur, ie.relation, ie.neighbor}
                                            : Triple{ie.neighbor, ie.relation, cur};
        edges.push_back(t);
        visited.push_back(ie.neighbor);
        simple_paths(kg, from, to, hops, edges, visited, out);
        visited.pop_back();
        edges.pop_back();
    }
}

}  // namespace

std::optional<PseudoEp> build_pseudo_ep(const KnowledgeGraph& kg, const Question& q,
                                        std::mt19937_64& rng, const PseudoEpConfig& cfg) {
    if (q.answers.empty() || q.topics.empty()) return std::nullopt;
    EntityId answer = q.answers[rng() % q.answers.size()];
    std::set<Triple> union_edges;
    for (EntityId topic : q.topics) {
        if (topic == answer) continue;
        std::vector<std::vector<Triple>> paths;
        std::vector<Triple> edges;
        std::vector<EntityId> visited{topic};
        simple_paths(kg, topic, answer, cfg.hops, edges, visited, paths);
        std::sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
            if (a.size() != b.size()) return a.size() < b.size();
            return a < b;
        });
        if (paths.size() > cfg.paths_per_pair) paths.resize(cfg.paths_per_pair);
        for (const auto& p : paths) union_edges.insert(p.begin(), p.end());
    }
    if (union_edges.empty()) return std::nullopt;
    EvidencePattern pattern;
    std::map<EntityId, std::uint32_t> vars;
    auto node_of = [&](EntityId e) -> PatternNode {
        if (std::binary_search(q.topics.begin(), q.topics.end(), e)) return PatternNode::ent(e);
        auto it = vars.find(e);
        if (it == vars.end()) it = vars.emplace(e, pattern.add_variable()).first;
        return PatternNode::var(it->second);
    };
    for (const Triple& t : union_edges)
        pattern.add_edge(node_of(t.subject), t.relation, node_of(t.object));
    return PseudoEp{pattern.canonicalized(), answer};
}

namespace {

// Uniform relation other than `old`; relation_count must be >= 2.
RelationId other_relation(std::mt19937_64& rng, std::size_t relation_count, RelationId old) {
    RelationId r = RelationId(rng() % (relation_count - 1));
    if (r >= old) ++r;
    return r;
}

}  // namespace

std::vector<ApSample> gen_ap_retriever_samples(const KnowledgeGraph& kg,
                                               std::span<const Question> questions,
                                               std::span<const RrAp> all_rraps,
                                               std::uint64_t global_seed,
                                               std::size_t negatives_per_positive,
                                               const PseudoEpConfig& cfg, ApSampleStats* stats) {
    ApSampleStats local;
    std::vector<ApSample> out;
    constexpr std::size_t kMaxAttempts = 100;
    for (const Question& q : questions) {
        std::mt19937_64 rng(question_seed(global_seed, q.id));
        std::optional<PseudoEp> pe = build_pseudo_ep(kg, q, rng, cfg);
        std::vector<RrAp> positives;
        if (pe) positives = variable_rraps(pe->pattern);
        if (positives.empty()) {
            ++local.questions_skipped;
            continue;
        }
        ++local.questions_used;
        auto is_positive = [&](const RrAp& ap) {
            return std::binary_search(positives.begin(), positives.end(), canonical(ap));
        };
        std::size_t n_perturb = (negatives_per_positive + 1) / 2;
        std::size_t n_uniform = negatives_per_positive / 2;
        for (const RrAp& pos : positives) {
            out.push_back({q.id, q.text, serialize_rrap(pos, kg), 1, pos, std::nullopt});
            ++local.positives;
            for (std::size_t j = 0; j < n_perturb; ++j) {
                bool placed = false;
                for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                    RrAp neg = pos;
                    switch (rng() % 3) {
                        case 0:
                            if (kg.relation_count() < 2) continue;
                            neg.rel1 = other_relation(rng, kg.relation_count(), pos.rel1);
                            break;
                        case 1:
                            if (kg.relation_count() < 2) continue;
                            neg.rel2 = other_relation(rng, kg.relation_count(), pos.rel2);
                            break;
                        default:
                            neg.tag = LinkTag((std::uint64_t(pos.tag) + 1 + rng() % 3) % 4);
                            break;
                    }
                    if (is_positive(neg)) continue;
                    out.push_back({q.id, q.text, serialize_rrap(neg, kg), 0, neg, pos});
                    ++local.perturb_negatives;
                    placed = true;
                }
                if (!placed) ++local.shortfall;
            }
            for (std::size_t j = 0; j < n_uniform; ++j) {
                bool placed = false;
                for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                    if (all_rraps.empty()) break;
                    RrAp neg = all_rraps[rng() % all_rraps.size()];
                    if (is_positive(neg)) continue;
                    out.push_back({q.id, q.text, serialize_rrap(neg, kg), 0, neg, std::nullopt});
                    ++local.uniform_negatives;
                    placed = true;
                }
                if (!placed) ++local.shortfall;
            }
        }
    }
    if (stats) *stats = local;
    return out;
}

std::vector<RankerSample> gen_ranker_samples(std::string_view qid, std::string_view question_text,
                                             std::span<const RankerCandidate> candidates,
                                             std::size_t max_neg_ratio) {
    std::size_t max_cov = 0;
    for (const RankerCandidate& c : candidates) max_cov = std::max(max_cov, c.coverage);
    if (max_cov == 0) return {};
    std::vector<const RankerCandidate*> positives, negatives;
    for (const RankerCandidate& c : candidates)
        (c.coverage == max_cov ? positives : negatives).push_back(&c);
    std::sort(negatives.begin(), negatives.end(),
              [](const RankerCandidate* a, const RankerCandidate* b) {
                  if (a->baseline_score != b->baseline_score)
                      return a->baseline_score > b->baseline_score;
                  return a->text < b->text;
              });
    std::size_t neg_cap = max_neg_ratio * positives.size();
    if (negatives.size() > neg_cap) negatives.resize(neg_cap);
    std::vector<RankerSample> out;
    out.reserve(positives.size() + negatives.size());
    for (const RankerCandidate* c : positives)
        out.push_back({std::string(qid), std::string(question_text), c->text, 1});
    for (const RankerCandidate* c : negatives)
        out.push_back({std::string(qid), std::string(question_text), c->text, 0});
    return out;
}

}  // namespace epr
