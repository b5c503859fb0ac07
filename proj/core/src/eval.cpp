#include "epr/eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "epr/util.hpp"

namespace epr {
namespace {

using nlohmann::json;

bool covers(const ExtractionRecord& r, const Question& q) {
    for (EntityId a : q.answers)
        if (std::binary_search(r.subgraph_entities.begin(), r.subgraph_entities.end(), a))
            return true;
    return false;
}

}  // namespace

double cover_rate(std::span<const ExtractionRecord> records, std::span<const Question> questions) {
    if (questions.empty()) throw Error("cover rate undefined for zero questions");
    if (records.size() != questions.size())
        throw Error("cover rate: " + std::to_string(records.size()) + " records for " +
                    std::to_string(questions.size()) + " questions");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (records[i].qid != questions[i].id)
            throw Error("cover rate: record " + std::to_string(i) + " is for qid '" +
                        records[i].qid + "', expected '" + questions[i].id + "'");
        if (covers(records[i], questions[i])) ++covered;
    }
    return double(covered) / double(questions.size());
}

EvalScores f1_hits_from_predictions(std::span<const Question> questions,
                                    const std::string& predictions_path) {
    std::ifstream is(predictions_path);
    if (!is) throw Error("cannot open predictions file: " + predictions_path);
    std::unordered_map<std::string, std::vector<std::string>> predicted;
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
            throw Error(predictions_path + ":" + std::to_string(line_no) + ": bad JSON: " +
                        e.what());
        }
        if (!j.is_object() || !j.contains("qid") || !j.contains("ranked_answers"))
            throw Error(predictions_path + ":" + std::to_string(line_no) +
                        ": each line needs \"qid\" and \"ranked_answers\"");
        std::vector<std::string> answers;
        for (const json& v : j.at("ranked_answers")) answers.push_back(v.get<std::string>());
        predicted[j.at("qid").get<std::string>()] = std::move(answers);
    }
    EvalScores scores;
    scores.questions = questions.size();
    if (questions.empty()) return scores;
    double hits = 0.0, f1_sum = 0.0;
    for (const Question& q : questions) {
        std::vector<std::string> pred;
        auto it = predicted.find(q.id);
        if (it == predicted.end())
            ++scores.missing_predictions;
        else
            pred = it->second;
        std::set<std::string> gold(q.answer_raw.begin(), q.answer_raw.end());
        if (!pred.empty() && gold.count(pred.front())) hits += 1.0;
        std::set<std::string> pred_set(pred.begin(), pred.end());
        std::size_t inter = 0;
        for (const std::string& p : pred_set) inter += gold.count(p);
        if (pred_set.empty() && gold.empty()) {
            f1_sum += 1.0;
        } else if (inter > 0) {
            double precision = double(inter) / double(pred_set.size());
            double recall = double(inter) / double(gold.size());
            f1_sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    scores.hits_at_1 = hits / double(questions.size());
    scores.f1 = f1_sum / double(questions.size());
    return scores;
}

std::vector<RelationId> pseudo_relation_vocab(const KnowledgeGraph& kg,
                                              std::span<const Question> questions,
                                              std::uint64_t global_seed,
                                              const PseudoEpConfig& cfg) {
    std::set<RelationId> vocab;
    for (const Question& q : questions) {
        std::mt19937_64 rng(question_seed(global_seed, q.id));
        if (auto pe = build_pseudo_ep(kg, q, rng, cfg))
            for (const PatternEdge& e : pe->pattern.edges()) vocab.insert(e.relation);
    }
    return {vocab.begin(), vocab.end()};
}

SplitReport split_report(std::span<const ExtractionRecord> records,
                         std::span<const Question> questions,
                         std::span<const RelationId> train_vocab) {
    if (records.size() != questions.size())
        throw Error("split report: record/question count mismatch");
    SplitReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ExtractionRecord& r = records[i];
        bool unseen = false;
        for (RelationId rel : r.pattern_relations)
            if (!std::binary_search(train_vocab.begin(), train_vocab.end(), rel)) unseen = true;
        SplitMetrics& bucket = unseen ? report.with_unseen : report.without_unseen;
        ++bucket.questions;
        if (covers(r, questions[i])) ++bucket.covered;
    }
    auto finish = [](SplitMetrics& m) {
        m.cover_rate = m.questions ? double(m.covered) / double(m.questions) : 0.0;
    };
    finish(report.with_unseen);
    finish(report.without_unseen);
    return report;
}

}  // namespace epr
