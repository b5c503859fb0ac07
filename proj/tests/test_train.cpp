#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "epr/train.hpp"
#include "fixtures.hpp"

using namespace epr;

namespace {

Question make_q(const KnowledgeGraph& kg, std::string id, std::string text,
                std::vector<std::string> topics, std::vector<std::string> answers) {
    Question q;
    q.id = std::move(id);
    q.text = std::move(text);
    q.topic_raw = topics;
    q.answer_raw = answers;
    for (const std::string& t : topics) q.topics.push_back(fixtures::ent(kg, t));
    for (const std::string& a : answers) q.answers.push_back(fixtures::ent(kg, a));
    std::sort(q.topics.begin(), q.topics.end());
    std::sort(q.answers.begin(), q.answers.end());
    return q;
}

bool same_sample(const ApSample& a, const ApSample& b) {
    return a.qid == b.qid && a.text_a == b.text_a && a.text_b == b.text_b && a.label == b.label &&
           a.ap == b.ap && a.perturbed_from == b.perturbed_from;
}

std::vector<ApSample> with_qid(const std::vector<ApSample>& all, std::string_view qid) {
    std::vector<ApSample> out;
    for (const ApSample& s : all)
        if (s.qid == qid) out.push_back(s);
    return out;
}

}  // namespace

TEST_CASE("questions load from JSONL with per-identifier resolution") {
    fixtures::TempDir dir;
    std::string path = dir.file("questions.jsonl");
    fixtures::write_file(
        path,
        fixtures::border_question_jsonl() +
            R"({"id": "q2", "question": "who?", "topic_entities": ["Nowhere", "Germany"], )"
            R"("answers": ["Atlantis"]})"
            "\r\n"
            "\n" +
            R"({"id": "q3", "question": "lost", "topic_entities": ["Atlantis"], "answers": []})"
            "\n" +
            R"({"id": "q4", "question": "twice", "topic_entities": ["Germany", "Germany"]})"
            "\n");

    KnowledgeGraph kg = fixtures::border_kg();
    QuestionLoadStats stats;
    std::vector<Question> qs = load_questions(path, kg, &stats);

    REQUIRE(qs.size() == 4);
    CHECK(stats.total == 4);
    CHECK(stats.without_topics == 1);      // q3 resolves no topic
    CHECK(stats.unresolved_topics == 2);   // Nowhere, Atlantis
    CHECK(stats.unresolved_answers == 1);  // Atlantis

    CHECK(qs[0].id == "q1");
    CHECK(qs[0].text == fixtures::border_question_text());
    CHECK(qs[0].topics == fixtures::border_topics(kg));
    CHECK(qs[0].answers == std::vector<EntityId>{fixtures::ent(kg, "Netherlands")});

    CHECK(qs[1].topic_raw == std::vector<std::string>{"Nowhere", "Germany"});
    CHECK(qs[1].topics == std::vector<EntityId>{fixtures::ent(kg, "Germany")});
    CHECK(qs[1].answers.empty());

    CHECK(qs[2].topics.empty());

    CHECK(qs[3].topics == std::vector<EntityId>{fixtures::ent(kg, "Germany")});  // deduplicated
    CHECK(qs[3].answer_raw.empty());  // missing array key means empty
}

TEST_CASE("question file errors carry path and line") {
    fixtures::TempDir dir;
    KnowledgeGraph kg = fixtures::border_kg();

    CHECK_THROWS_WITH_AS(load_questions(dir.file("absent.jsonl"), kg),
                         ("cannot open questions file: " + dir.file("absent.jsonl")).c_str(),
                         Error);

    std::string no_id = dir.file("no_id.jsonl");
    fixtures::write_file(no_id, R"({"question": "?"})"
                                "\n");
    CHECK_THROWS_WITH_AS(load_questions(no_id, kg),
                         (no_id + ":1: each line needs \"id\" and \"question\"").c_str(), Error);

    std::string bad_json = dir.file("bad.jsonl");
    fixtures::write_file(bad_json, "{\n");
    try {
        load_questions(bad_json, kg);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(bad_json + ":1: bad JSON:") == 0);
    }

    std::string bad_array = dir.file("bad_array.jsonl");
    fixtures::write_file(bad_array, R"({"id": "x", "question": "?", "topic_entities": "Germany"})"
                                    "\n");
    CHECK_THROWS_WITH_AS(load_questions(bad_array, kg),
                         (bad_array + ":1: \"topic_entities\" must be an array").c_str(), Error);

    std::string bad_entry = dir.file("bad_entry.jsonl");
    fixtures::write_file(bad_entry, R"({"id": "x", "question": "?", "answers": [3]})"
                                    "\n");
    CHECK_THROWS_WITH_AS(load_questions(bad_entry, kg),
                         (bad_entry + ":1: \"answers\" entries must be strings").c_str(), Error);
}

TEST_CASE("pseudo pattern of the border question is the gold pattern") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::mt19937_64 rng(7);
    std::optional<PseudoEp> pe = build_pseudo_ep(kg, fixtures::border_question(kg), rng);

    REQUIRE(pe.has_value());
    CHECK(pe->answer == fixtures::ent(kg, "Netherlands"));
    // union of the <=2-hop topic-to-answer paths, topics kept as constants
    CHECK(pe->pattern == fixtures::gold_pattern(kg).canonicalized());
}

TEST_CASE("pseudo pattern turns non-topic nodes into variables") {
    KnowledgeGraph kg = fixtures::border_kg();
    Question q = make_q(kg, "q", "where", {"Stadhuis"}, {"Netherlands"});
    std::mt19937_64 rng(3);
    std::optional<PseudoEp> pe = build_pseudo_ep(kg, q, rng);
    REQUIRE(pe.has_value());

    // Stadhuis -containedby-> ?u -country-> ?v ; the answer itself is a variable
    EvidencePattern expect;
    std::uint32_t rotterdam = expect.add_variable();
    std::uint32_t netherlands = expect.add_variable();
    expect.add_edge(PatternNode::ent(fixtures::ent(kg, "Stadhuis")),
                    fixtures::rel(kg, "containedby"), PatternNode::var(rotterdam));
    expect.add_edge(PatternNode::var(rotterdam), fixtures::rel(kg, "country"),
                    PatternNode::var(netherlands));
    CHECK(pe->pattern == expect.canonicalized());

    // one hop is not enough to reach the answer
    std::mt19937_64 rng2(3);
    CHECK_FALSE(build_pseudo_ep(kg, q, rng2, {.hops = 1}).has_value());
}

TEST_CASE("pseudo pattern returns nothing when no topic reaches the answer") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::mt19937_64 rng(5);

    Question unreachable = make_q(kg, "q", "?", {"Stadhuis"}, {"Germany"});  // 4 hops away
    CHECK_FALSE(build_pseudo_ep(kg, unreachable, rng).has_value());

    Question self = make_q(kg, "q", "?", {"Netherlands"}, {"Netherlands"});
    CHECK_FALSE(build_pseudo_ep(kg, self, rng).has_value());

    Question no_answers = make_q(kg, "q", "?", {"Germany"}, {});
    CHECK_FALSE(build_pseudo_ep(kg, no_answers, rng).has_value());

    Question no_topics = make_q(kg, "q", "?", {}, {"Germany"});
    CHECK_FALSE(build_pseudo_ep(kg, no_topics, rng).has_value());
}

TEST_CASE("pseudo pattern keeps the shortest paths up to the per-pair cap") {
    std::istringstream in(
        "t\tr0\ta\n"
        "t\tr\tm0\n"
        "m0\tr2\ta\n"
        "t\tr\tm1\n"
        "m1\tr2\ta\n"
        "t\tr\tm2\n"
        "m2\tr2\ta\n"
        "t\tr\tm3\n"
        "m3\tr2\ta\n");
    KnowledgeGraph kg = KnowledgeGraph::ingest(in, TripleFormat::tsv);
    Question q = make_q(kg, "q", "?", {"t"}, {"a"});

    // cap 3 keeps the direct edge plus the two lowest-handle detours
    std::mt19937_64 rng(11);
    std::optional<PseudoEp> capped = build_pseudo_ep(kg, q, rng, {.hops = 2, .paths_per_pair = 3});
    REQUIRE(capped.has_value());
    EvidencePattern expect;
    std::uint32_t a = expect.add_variable();
    std::uint32_t m0 = expect.add_variable();
    std::uint32_t m1 = expect.add_variable();
    EntityId t = fixtures::ent(kg, "t");
    expect.add_edge(PatternNode::ent(t), fixtures::rel(kg, "r0"), PatternNode::var(a));
    expect.add_edge(PatternNode::ent(t), fixtures::rel(kg, "r"), PatternNode::var(m0));
    expect.add_edge(PatternNode::var(m0), fixtures::rel(kg, "r2"), PatternNode::var(a));
    expect.add_edge(PatternNode::ent(t), fixtures::rel(kg, "r"), PatternNode::var(m1));
    expect.add_edge(PatternNode::var(m1), fixtures::rel(kg, "r2"), PatternNode::var(a));
    CHECK(capped->pattern == expect.canonicalized());

    // default cap of 8 admits all five paths
    std::mt19937_64 rng2(11);
    std::optional<PseudoEp> full = build_pseudo_ep(kg, q, rng2);
    REQUIRE(full.has_value());
    CHECK(full->pattern.edge_count() == 9);
    CHECK(full->pattern.variable_count() == 5);
}

TEST_CASE("pseudo pattern samples one answer deterministically") {
    KnowledgeGraph kg = fixtures::border_kg();
    Question q = make_q(kg, "q", "?", {"WesternEurope"}, {"Netherlands", "Austria"});

    std::mt19937_64 rng_a(42), rng_b(42);
    std::optional<PseudoEp> first = build_pseudo_ep(kg, q, rng_a);
    std::optional<PseudoEp> again = build_pseudo_ep(kg, q, rng_b);
    REQUIRE(first.has_value());
    REQUIRE(again.has_value());
    CHECK(first->answer == again->answer);
    CHECK(first->pattern == again->pattern);
    CHECK((first->answer == fixtures::ent(kg, "Netherlands") ||
           first->answer == fixtures::ent(kg, "Austria")));
}

TEST_CASE("retriever samples hold a one-in-twenty positive fraction") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::vector<RrAp> universe = extract_rraps(kg);
    std::vector<Question> qs = {fixtures::border_question(kg),
                                make_q(kg, "q2", "which country is the stadhuis in?", {"Stadhuis"},
                                       {"Netherlands"})};

    ApSampleStats stats;
    std::vector<ApSample> samples = gen_ap_retriever_samples(kg, qs, universe, 99, 19, {}, &stats);

    CHECK(stats.questions_used == 2);
    CHECK(stats.questions_skipped == 0);
    CHECK(stats.positives == 6);  // five gold adjacencies + one for q2
    CHECK(stats.perturb_negatives == 60);
    CHECK(stats.uniform_negatives == 54);
    CHECK(stats.shortfall == 0);
    REQUIRE(samples.size() == 120);

    std::size_t positives = 0;
    for (const ApSample& s : samples) positives += s.label == 1 ? 1 : 0;
    CHECK(positives == 6);
    CHECK(positives * 20 == samples.size());  // exactly 1 in 20

    // per-question positive sets are the pseudo pattern adjacencies
    std::map<std::string, std::set<RrAp>> pos_by_qid;
    for (const ApSample& s : samples)
        if (s.label == 1) pos_by_qid[s.qid].insert(s.ap);
    std::vector<RrAp> gold = variable_rraps(fixtures::gold_pattern(kg));
    CHECK(pos_by_qid["q1"] == std::set<RrAp>(gold.begin(), gold.end()));

    for (const ApSample& s : samples) {
        CHECK(s.text_b == serialize_rrap(s.ap, kg));
        CHECK(s.text_a == (s.qid == "q1" ? fixtures::border_question_text()
                                         : "which country is the stadhuis in?"));
        const std::set<RrAp>& pos = pos_by_qid[s.qid];
        if (s.label == 1) {
            CHECK(!s.perturbed_from.has_value());
            CHECK(pos.count(s.ap) == 1);
        } else {
            // negatives never collide with the question's positives
            CHECK(pos.count(canonical(s.ap)) == 0);
        }
        if (s.perturbed_from.has_value()) {
            CHECK(s.label == 0);
            CHECK(pos.count(*s.perturbed_from) == 1);
            int diffs = int(s.ap.rel1 != s.perturbed_from->rel1) +
                        int(s.ap.rel2 != s.perturbed_from->rel2) +
                        int(s.ap.tag != s.perturbed_from->tag);
            CHECK(diffs == 1);  // single-field mutation
        }
        if (s.label == 0 && !s.perturbed_from.has_value()) {
            // uniform negatives come from the extracted universe
            CHECK(std::find(universe.begin(), universe.end(), s.ap) != universe.end());
        }
    }

    // q2's positive is the containedby/country adjacency of its two-hop pattern
    std::vector<ApSample> q2 = with_qid(samples, "q2");
    REQUIRE(q2.size() == 20);
    CHECK(q2[0].label == 1);
    CHECK(q2[0].ap == make_rrap(fixtures::rel(kg, "containedby"), Role::object,
                                fixtures::rel(kg, "country"), Role::subject));
}

TEST_CASE("retriever samples are independent of question order") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::vector<RrAp> universe = extract_rraps(kg);
    Question q1 = fixtures::border_question(kg);
    Question q2 = make_q(kg, "q2", "which country is the stadhuis in?", {"Stadhuis"},
                         {"Netherlands"});

    std::vector<Question> fwd = {q1, q2}, rev = {q2, q1}, solo = {q1};
    std::vector<ApSample> a = gen_ap_retriever_samples(kg, fwd, universe, 99);
    std::vector<ApSample> b = gen_ap_retriever_samples(kg, rev, universe, 99);
    std::vector<ApSample> c = gen_ap_retriever_samples(kg, solo, universe, 99);

    for (const char* qid : {"q1", "q2"}) {
        std::vector<ApSample> sa = with_qid(a, qid), sb = with_qid(b, qid);
        REQUIRE(sa.size() == sb.size());
        for (std::size_t i = 0; i < sa.size(); ++i) CHECK(same_sample(sa[i], sb[i]));
    }
    std::vector<ApSample> a1 = with_qid(a, "q1");
    REQUIRE(a1.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(same_sample(a1[i], c[i]));
}

TEST_CASE("retriever sampling counts skipped questions and negative shortfall") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::vector<RrAp> universe = extract_rraps(kg);

    // no topic-to-answer path, and a one-edge pattern with no adjacency
    std::vector<Question> qs = {make_q(kg, "far", "?", {"Stadhuis"}, {"Germany"}),
                                make_q(kg, "thin", "?", {"Rotterdam"}, {"Netherlands"})};
    ApSampleStats stats;
    std::vector<ApSample> samples = gen_ap_retriever_samples(kg, qs, universe, 1, 19, {}, &stats);
    CHECK(samples.empty());
    CHECK(stats.questions_used == 0);
    CHECK(stats.questions_skipped == 2);

    // single-relation graph: the only extracted adjacency is the positive, so
    // every uniform draw collides and is counted as shortfall
    std::istringstream in("a\tr\tb\nb\tr\tc\n");
    KnowledgeGraph line = KnowledgeGraph::ingest(in, TripleFormat::tsv);
    std::vector<RrAp> line_universe = extract_rraps(line);
    REQUIRE(line_universe.size() == 1);
    std::vector<Question> lq = {make_q(line, "lq", "?", {"a"}, {"c"})};
    ApSampleStats line_stats;
    std::vector<ApSample> line_samples =
        gen_ap_retriever_samples(line, lq, line_universe, 7, 19, {}, &line_stats);
    CHECK(line_stats.questions_used == 1);
    CHECK(line_stats.positives == 1);
    CHECK(line_stats.perturb_negatives == 10);  // tag mutations still available
    CHECK(line_stats.uniform_negatives == 0);
    CHECK(line_stats.shortfall == 9);
    CHECK(line_samples.size() == 11);
}

TEST_CASE("retriever sampling honors the negatives-per-positive knob") {
    KnowledgeGraph kg = fixtures::border_kg();
    std::vector<RrAp> universe = extract_rraps(kg);
    std::vector<Question> qs = {fixtures::border_question(kg)};

    ApSampleStats none;
    CHECK(gen_ap_retriever_samples(kg, qs, universe, 1, 0, {}, &none).size() == 5);
    CHECK(none.perturb_negatives == 0);
    CHECK(none.uniform_negatives == 0);

    ApSampleStats one;
    CHECK(gen_ap_retriever_samples(kg, qs, universe, 1, 1, {}, &one).size() == 10);
    CHECK(one.perturb_negatives == 5);  // ceil(1/2) mutation per positive
    CHECK(one.uniform_negatives == 0);

    CHECK(gen_ap_retriever_samples(kg, {}, universe, 1).empty());
}

TEST_CASE("ranker samples split on maximum answer coverage") {
    std::vector<RankerCandidate> cands = {
        {"alpha ;", 0.1f, 2}, {"bravo ;", 0.9f, 2},   {"charlie ;", 5.0f, 1},
        {"delta ;", 9.9f, 0}, {"echo ;", 5.0f, 1},    {"foxtrot ;", -1.0f, 0},
    };
    std::vector<RankerSample> out = gen_ranker_samples("q9", "which?", cands);
    REQUIRE(out.size() == 6);
    for (const RankerSample& s : out) {
        CHECK(s.qid == "q9");
        CHECK(s.text_a == "which?");
    }
    // positives keep input order; negatives sort by (score desc, text asc)
    CHECK(out[0].text_b == "alpha ;");
    CHECK(out[0].label == 1);
    CHECK(out[1].text_b == "bravo ;");
    CHECK(out[1].label == 1);
    CHECK(out[2].text_b == "delta ;");
    CHECK(out[2].label == 0);
    CHECK(out[3].text_b == "charlie ;");
    CHECK(out[4].text_b == "echo ;");
    CHECK(out[5].text_b == "foxtrot ;");

    // the ratio caps how many negatives survive
    std::vector<RankerSample> capped = gen_ranker_samples("q9", "which?", cands, 1);
    REQUIRE(capped.size() == 4);  // 2 positives + 2 * 1 negatives
    CHECK(capped[2].text_b == "delta ;");
    CHECK(capped[3].text_b == "charlie ;");

    // nothing covers an answer: no training signal for this question
    std::vector<RankerCandidate> hopeless = {{"alpha ;", 1.0f, 0}, {"bravo ;", 2.0f, 0}};
    CHECK(gen_ranker_samples("q9", "which?", hopeless).empty());
    CHECK(gen_ranker_samples("q9", "which?", {}).empty());
}
