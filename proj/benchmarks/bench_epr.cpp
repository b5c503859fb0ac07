#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epr/atomic.hpp"
#include "epr/embed.hpp"
#include "epr/enumerate.hpp"
#include "epr/index.hpp"
#include "epr/kg.hpp"
#include "epr/match.hpp"
#include "epr/rank.hpp"

namespace {

using namespace epr;

KnowledgeGraph random_kg(std::mt19937_64& rng, std::size_t entities, std::size_t relations,
                         std::size_t triples) {
    std::uniform_int_distribution<std::size_t> pick_e(0, entities - 1), pick_r(0, relations - 1);
    std::ostringstream out;
    for (std::size_t i = 0; i < triples; ++i) {
        std::size_t s = pick_e(rng), o = pick_e(rng);
        if (s == o) o = (o + 1) % entities;
        out << 'e' << s << "\tr" << pick_r(rng) << "\te" << o << '\n';
    }
    std::istringstream in(out.str());
    return KnowledgeGraph::ingest(in, TripleFormat::tsv);
}

// the 11-triple country/border graph the unit tests build their golden
// answers on; dense enough to exercise every enumeration move
KnowledgeGraph border_kg() {
    std::istringstream in(
        "Germany\tadjoins\t_b\n"
        "Netherlands\tadjoins\t_b\n"
        "Germany\tadjoins\tAustria\n"
        "Netherlands\ttype\tCountry\n"
        "Austria\ttype\tCountry\n"
        "Rotterdam\tcountry\tNetherlands\n"
        "Stadhuis\tcontainedby\tRotterdam\n"
        "Stadhuis\tpartially_containedby\tWesternEurope\n"
        "WesternEurope\tcontains\tGermany\n"
        "FrankSchinkels\tbirth_place\tRotterdam\n"
        "FrankSchinkels\tnationality\tNetherlands\n");
    return KnowledgeGraph::ingest(in, TripleFormat::tsv);
}

EntityId ent(const KnowledgeGraph& kg, std::string_view name) { return *kg.entities().find(name); }
RelationId rel(const KnowledgeGraph& kg, std::string_view name) {
    return *kg.relations().find(name);
}

void bm_ingest(benchmark::State& state) {
    std::mt19937_64 rng(7);
    KnowledgeGraph kg = random_kg(rng, 2'000, 20, std::size_t(state.range(0)));
    std::ostringstream dump;
    for (const Triple& t : kg.triples())
        dump << kg.entities().identifier(t.subject) << '\t'
             << kg.relations().identifier(t.relation) << '\t'
             << kg.entities().identifier(t.object) << '\n';
    std::string text = dump.str();
    for (auto _ : state) {
        std::istringstream in(text);
        benchmark::DoNotOptimize(KnowledgeGraph::ingest(in, TripleFormat::tsv));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_ingest)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void bm_extract_rraps(benchmark::State& state) {
    std::mt19937_64 rng(11);
    KnowledgeGraph kg = random_kg(rng, 1'000, 16, std::size_t(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(extract_rraps(kg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_extract_rraps)->Arg(5'000)->Arg(20'000)->Unit(benchmark::kMillisecond);

void bm_baseline_embed(benchmark::State& state) {
    BaselineProvider provider(std::size_t(state.range(0)), 17);
    std::string text = "what country, containing stadhuis, does germany border?";
    for (auto _ : state) benchmark::DoNotOptimize(provider.embed(text));
}
BENCHMARK(bm_baseline_embed)->Arg(64)->Arg(256)->Arg(1024);

void bm_retrieve(benchmark::State& state) {
    std::size_t n = std::size_t(state.range(0)), dim = std::size_t(state.range(1));
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<float> coord(-1.0f, 1.0f);
    std::vector<float> flat(n * dim);
    for (auto& x : flat) x = coord(rng);
    std::vector<std::string> texts(n);
    std::vector<RrAp> aps(n);
    for (std::size_t i = 0; i < n; ++i) {
        texts[i] = "p" + std::to_string(i);
        aps[i] = RrAp{RelationId(i), RelationId(i + 1), LinkTag::SS};
    }
    VectorIndex idx =
        VectorIndex::from_raw(dim, "bench", std::move(aps), std::move(texts), std::move(flat));
    std::vector<float> q(dim);
    for (auto& x : q) x = coord(rng);
    for (auto _ : state) benchmark::DoNotOptimize(idx.retrieve(q, 100));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_retrieve)
    ->Args({10'000, 64})
    ->Args({10'000, 256})
    ->Args({100'000, 256})
    ->Unit(benchmark::kMillisecond);

void bm_enumerate(benchmark::State& state) {
    KnowledgeGraph kg = border_kg();
    std::vector<EntityId> topics = {ent(kg, "Germany"), ent(kg, "Country"), ent(kg, "Stadhuis")};
    std::sort(topics.begin(), topics.end());
    std::vector<ErAp> er = collect_eraps(kg, topics);
    std::vector<RrAp> rr = extract_rraps(kg);
    EnumerationConfig cfg;
    cfg.tau = std::uint32_t(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_candidates(kg, topics, er, rr, cfg));
}
BENCHMARK(bm_enumerate)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void bm_instantiate(benchmark::State& state) {
    KnowledgeGraph kg = border_kg();
    EvidencePattern gold;
    for (int i = 0; i < 3; ++i) gold.add_variable();
    gold.add_edge(PatternNode::var(0), rel(kg, "adjoins"), PatternNode::var(1));
    gold.add_edge(PatternNode::var(0), rel(kg, "adjoins"), PatternNode::ent(ent(kg, "Germany")));
    gold.add_edge(PatternNode::var(1), rel(kg, "type"), PatternNode::ent(ent(kg, "Country")));
    gold.add_edge(PatternNode::var(2), rel(kg, "country"), PatternNode::var(1));
    gold.add_edge(PatternNode::ent(ent(kg, "Stadhuis")), rel(kg, "containedby"),
                  PatternNode::var(2));
    gold = gold.canonicalized();
    for (auto _ : state) benchmark::DoNotOptimize(instantiate(kg, gold));
}
BENCHMARK(bm_instantiate);

void bm_serialize_candidates(benchmark::State& state) {
    KnowledgeGraph kg = border_kg();
    std::vector<EntityId> topics = {ent(kg, "Germany"), ent(kg, "Country"), ent(kg, "Stadhuis")};
    std::sort(topics.begin(), topics.end());
    std::vector<ErAp> er = collect_eraps(kg, topics);
    std::vector<RrAp> rr = extract_rraps(kg);
    EnumerationConfig cfg;
    cfg.tau = 5;
    EnumerationResult res = enumerate_candidates(kg, topics, er, rr, cfg);
    for (auto _ : state)
        for (const EvidencePattern& p : res.candidates)
            benchmark::DoNotOptimize(serialize_ep_triplets(p, kg));
    state.SetItemsProcessed(state.iterations() * res.candidates.size());
}
BENCHMARK(bm_serialize_candidates);

}  // namespace

BENCHMARK_MAIN();
