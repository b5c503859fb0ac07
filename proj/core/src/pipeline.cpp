#include "epr/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "epr/util.hpp"
#include "epr/wire.hpp"

namespace epr {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

std::string fmt(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

// ---- config keys ----------------------------------------------------------

std::size_t parse_size(std::string_view value) {
    std::string s(value);
    if (s.empty() || s[0] == '-' || s[0] == '+')
        throw Error("needs a non-negative integer, got '" + s + "'");
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return std::size_t(v);
    } catch (const std::exception&) {
        throw Error("needs a non-negative integer, got '" + s + "'");
    }
}

double parse_double(std::string_view value) {
    std::string s(value);
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw Error("needs a number, got '" + s + "'");
    }
}

struct KeyDef {
    const char* name;
    std::function<void(PipelineConfig&, std::string_view)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<KeyDef>& config_keys() {
    auto str = [](std::string PipelineConfig::* member) {
        return KeyDef{nullptr,
                      [member](PipelineConfig& c, std::string_view v) { c.*member = std::string(v); },
                      [member](const PipelineConfig& c) { return c.*member; }};
    };
    auto num = [](std::size_t PipelineConfig::* member) {
        return KeyDef{nullptr,
                      [member](PipelineConfig& c, std::string_view v) { c.*member = parse_size(v); },
                      [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
    };
    static const std::vector<KeyDef> keys = [&] {
        std::vector<KeyDef> k;
        auto add = [&](const char* name, KeyDef def) {
            def.name = name;
            auto inner = std::move(def.set);
            def.set = [name, inner](PipelineConfig& c, std::string_view v) {
                try {
                    inner(c, v);
                } catch (const Error& e) {
                    throw Error("config: '" + std::string(name) + "' " + e.what());
                }
            };
            k.push_back(std::move(def));
        };
        add("kg", str(&PipelineConfig::kg_path));
        add("labels", str(&PipelineConfig::labels_path));
        add("kg_format", str(&PipelineConfig::kg_format));
        add("questions", str(&PipelineConfig::questions_path));
        add("out_dir", str(&PipelineConfig::out_dir));
        add("index", str(&PipelineConfig::index_path));
        add("rraps", str(&PipelineConfig::rraps_path));
        add("predictions", str(&PipelineConfig::predictions_path));
        add("train_questions", str(&PipelineConfig::train_questions_path));
        add("k", num(&PipelineConfig::k));
        add("tau", num(&PipelineConfig::tau));
        add("dim", num(&PipelineConfig::dim));
        add("seed", {nullptr,
                     [](PipelineConfig& c, std::string_view v) {
                         c.seed = std::uint64_t(parse_size(v));
                     },
                     [](const PipelineConfig& c) { return std::to_string(c.seed); }});
        add("provider", str(&PipelineConfig::provider));
        add("scorer", str(&PipelineConfig::scorer));
        add("workers", num(&PipelineConfig::workers));
        add("candidate_cap", num(&PipelineConfig::candidate_cap));
        add("state_cap", num(&PipelineConfig::state_cap));
        add("match_budget", {nullptr,
                             [](PipelineConfig& c, std::string_view v) {
                                 c.match_budget = std::uint64_t(parse_size(v));
                             },
                             [](const PipelineConfig& c) { return std::to_string(c.match_budget); }});
        add("batch_size", num(&PipelineConfig::batch_size));
        add("timeout_seconds", {nullptr,
                                [](PipelineConfig& c, std::string_view v) {
                                    c.timeout_seconds = parse_double(v);
                                },
                                [](const PipelineConfig& c) { return fmt(c.timeout_seconds, 3); }});
        add("retries", num(&PipelineConfig::retries));
        add("hops", num(&PipelineConfig::hops));
        add("paths_per_pair", num(&PipelineConfig::paths_per_pair));
        add("negatives_per_positive", num(&PipelineConfig::negatives_per_positive));
        add("max_neg_ratio", num(&PipelineConfig::max_neg_ratio));
        add("sweep_k_min", num(&PipelineConfig::sweep_k_min));
        add("sweep_k_max", num(&PipelineConfig::sweep_k_max));
        add("sweep_k_step", num(&PipelineConfig::sweep_k_step));
        return k;
    }();
    return keys;
}

bool is_service_url(const std::string& s) {
    return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

std::string trimmed(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string_view::npos) return "";
    return std::string(s.substr(b, e - b + 1));
}

// ---- files ----------------------------------------------------------------

std::string artifact(const PipelineConfig& cfg, const char* name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

void require_file(const std::string& path, const char* producer) {
    if (!fs::exists(path))
        throw Error("missing artifact '" + path + "'; run `epr " + producer + "` first");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);  // binary: identical bytes on every platform
    if (!os) throw Error("cannot open '" + path + "' for writing");
    return os;
}

void for_each_json_line(const std::string& path,
                        const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

// ---- json codecs ----------------------------------------------------------

EntityId resolve_entity(const KnowledgeGraph& kg, const std::string& ident, const std::string& path) {
    if (auto id = kg.entities().find(ident)) return *id;
    throw Error(path + ": unknown entity '" + ident + "'; artifact from a different graph?");
}

RelationId resolve_relation(const KnowledgeGraph& kg, const std::string& ident,
                            const std::string& path) {
    if (auto id = kg.relations().find(ident)) return *id;
    throw Error(path + ": unknown relation '" + ident + "'; artifact from a different graph?");
}

json node_to_json(const PatternNode& n, const KnowledgeGraph& kg) {
    if (n.is_var()) return json{{"var", n.id}};
    return json{{"ent", kg.entities().identifier(n.id)}};
}

PatternNode node_from_json(const json& j, const KnowledgeGraph& kg, const std::string& path) {
    if (j.contains("var")) return PatternNode::var(j.at("var").get<std::uint32_t>());
    if (j.contains("ent"))
        return PatternNode::ent(resolve_entity(kg, j.at("ent").get<std::string>(), path));
    throw Error(path + ": pattern node needs \"var\" or \"ent\"");
}

json pattern_to_json(const EvidencePattern& p, const KnowledgeGraph& kg) {
    json edges = json::array();
    for (const PatternEdge& e : p.edges())
        edges.push_back(json{{"s", node_to_json(e.subject, kg)},
                             {"r", kg.relations().identifier(e.relation)},
                             {"o", node_to_json(e.object, kg)}});
    return edges;
}

EvidencePattern pattern_from_json(const json& edges, const KnowledgeGraph& kg,
                                  const std::string& path) {
    EvidencePattern p;
    std::uint32_t max_var = 0;
    bool has_var = false;
    for (const json& e : edges)
        for (const char* side : {"s", "o"})
            if (e.at(side).contains("var")) {
                has_var = true;
                max_var = std::max(max_var, e.at(side).at("var").get<std::uint32_t>());
            }
    if (has_var)
        for (std::uint32_t v = 0; v <= max_var; ++v) p.add_variable();
    for (const json& e : edges)
        p.add_edge(node_from_json(e.at("s"), kg, path),
                   resolve_relation(kg, e.at("r").get<std::string>(), path),
                   node_from_json(e.at("o"), kg, path));
    return p;
}

json hit_to_json(const RetrievalHit& h, const KnowledgeGraph& kg) {
    return json{{"rel1", kg.relations().identifier(h.ap.rel1)},
                {"tag", to_string(h.ap.tag)},
                {"rel2", kg.relations().identifier(h.ap.rel2)},
                {"score", double(h.score)}};
}

RetrievalHit hit_from_json(const json& j, const KnowledgeGraph& kg, const std::string& path) {
    RetrievalHit h;
    h.ap.rel1 = resolve_relation(kg, j.at("rel1").get<std::string>(), path);
    h.ap.rel2 = resolve_relation(kg, j.at("rel2").get<std::string>(), path);
    auto tag = parse_tag(j.at("tag").get<std::string>());
    if (!tag) throw Error(path + ": bad link tag '" + j.at("tag").get<std::string>() + "'");
    h.ap.tag = *tag;
    h.score = float(j.at("score").get<double>());
    h.text = serialize_rrap(h.ap, kg);
    return h;
}

// ---- timing files ---------------------------------------------------------

void write_stage_timings(const std::string& path, std::span<const Question> questions,
                         std::span<const double> ms) {
    std::ofstream os = open_out(path);
    os << "qid,ms\n";
    for (std::size_t i = 0; i < questions.size(); ++i)
        os << questions[i].id << ',' << fmt(ms[i], 3) << '\n';
}

std::unordered_map<std::string, double> read_stage_timings(const std::string& path,
                                                           const char* producer) {
    require_file(path, producer);
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path + "'");
    std::unordered_map<std::string, double> out;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::size_t comma = line.rfind(',');
        if (comma == std::string::npos) throw Error(path + ": bad timing row '" + line + "'");
        try {
            out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw Error(path + ": bad timing row '" + line + "'");
        }
    }
    return out;
}

double p95(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    std::size_t rank = (values.size() * 95 + 99) / 100;  // ceil(0.95 n)
    if (rank == 0) rank = 1;
    return values[std::min(rank, values.size()) - 1];
}

// ---- row alignment --------------------------------------------------------

template <class Row>
void check_alignment(const std::vector<Row>& rows, std::span<const Question> questions,
                     const char* what, const char* producer) {
    if (rows.size() != questions.size())
        throw Error(std::string(what) + " has " + std::to_string(rows.size()) + " rows for " +
                    std::to_string(questions.size()) + " questions; re-run `epr " + producer +
                    "`");
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].qid != questions[i].id)
            throw Error(std::string(what) + " row " + std::to_string(i) + " is for qid '" +
                        rows[i].qid + "', expected '" + questions[i].id + "'; re-run `epr " +
                        producer + "`");
}

}  // namespace

// ---- config ----------------------------------------------------------------

void PipelineConfig::validate() const {
    if (kg_format != "tsv" && kg_format != "ntriples")
        throw Error("config: kg_format must be 'tsv' or 'ntriples', got '" + kg_format + "'");
    if (tau < 1) throw Error("config: tau must be >= 1");
    if (k < 1) throw Error("config: k must be >= 1");
    if (dim < 16) throw Error("config: dim must be >= 16");
    if (workers < 1) throw Error("config: workers must be >= 1");
    if (batch_size < 1) throw Error("config: batch_size must be >= 1");
    if (retries < 1) throw Error("config: retries must be >= 1");
    if (candidate_cap < 1) throw Error("config: candidate_cap must be >= 1");
    if (state_cap < 1) throw Error("config: state_cap must be >= 1");
    if (match_budget < 1) throw Error("config: match_budget must be >= 1");
    if (hops < 1) throw Error("config: hops must be >= 1");
    if (paths_per_pair < 1) throw Error("config: paths_per_pair must be >= 1");
    if (max_neg_ratio < 1) throw Error("config: max_neg_ratio must be >= 1");
    if (!(timeout_seconds > 0)) throw Error("config: timeout_seconds must be positive");
    if (sweep_k_min < 1 || sweep_k_step < 1 || sweep_k_max < sweep_k_min)
        throw Error("config: sweep grid needs 1 <= sweep_k_min <= sweep_k_max, sweep_k_step >= 1");
    for (const auto& [kind, value] : {std::pair<const char*, const std::string&>{"provider", provider},
                                      {"scorer", scorer}})
        if (value != "baseline" && !is_service_url(value))
            throw Error(std::string("config: ") + kind + " must be 'baseline' or an http(s) URL, got '" +
                        value + "'");
}

std::string PipelineConfig::index_file() const {
    return index_path.empty() ? (fs::path(out_dir) / "rraps.idx").string() : index_path;
}

std::string PipelineConfig::rraps_file() const {
    return rraps_path.empty() ? (fs::path(out_dir) / "rraps.tsv").string() : rraps_path;
}

void apply_config_entry(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    for (const KeyDef& def : config_keys())
        if (key == def.name) {
            def.set(cfg, value);
            return;
        }
    throw Error("config: unknown key '" + std::string(key) + "'");
}

void load_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string entry = trimmed(line);
        if (entry.empty()) continue;
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            apply_config_entry(cfg, trimmed(entry.substr(0, eq)), trimmed(entry.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_env_overrides(PipelineConfig& cfg) {
    for (const KeyDef& def : config_keys()) {
        std::string var = "EPR_";
        for (const char* p = def.name; *p; ++p)
            var += char(std::toupper(static_cast<unsigned char>(*p)));
        if (const char* value = std::getenv(var.c_str())) def.set(cfg, value);
    }
}

std::string effective_config(const PipelineConfig& cfg) {
    std::string out;
    for (const KeyDef& def : config_keys()) out += std::string(def.name) + " = " + def.get(cfg) + "\n";
    return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& cfg) {
    if (cfg.provider == "baseline")
        return std::make_unique<BaselineProvider>(cfg.dim, cfg.seed);
    return std::make_unique<HttpEmbeddingProvider>(
        WireConfig{cfg.provider, cfg.batch_size, cfg.timeout_seconds, cfg.retries});
}

std::unique_ptr<PairScorer> make_scorer(const PipelineConfig& cfg) {
    if (cfg.scorer == "baseline")
        return std::make_unique<BaselineScorer>(BaselineProvider(cfg.dim, cfg.seed));
    return std::make_unique<HttpPairScorer>(
        WireConfig{cfg.scorer, cfg.batch_size, cfg.timeout_seconds, cfg.retries});
}

KnowledgeGraph load_graph(const PipelineConfig& cfg, IngestStats* stats) {
    if (cfg.kg_path.empty()) throw Error("no graph file configured; pass --kg");
    TripleFormat format = cfg.kg_format == "tsv" ? TripleFormat::tsv : TripleFormat::ntriples;
    return KnowledgeGraph::ingest_file(cfg.kg_path, format, cfg.labels_path, stats);
}

std::vector<Question> load_question_file(const PipelineConfig& cfg, const KnowledgeGraph& kg,
                                         QuestionLoadStats* stats) {
    if (cfg.questions_path.empty()) throw Error("no questions file configured; pass --questions");
    return load_questions(cfg.questions_path, kg, stats);
}

// ---- per-question units ----------------------------------------------------

std::vector<RetrievalHit> retrieve_question(const VectorIndex& index, EmbeddingProvider& provider,
                                            const Question& q, std::size_t k) {
    if (index.size() == 0) return {};
    return index.retrieve(provider.embed_question(q.text), k);
}

EnumerationResult enumerate_question(const KnowledgeGraph& kg, const Question& q,
                                     std::span<const RetrievalHit> hits,
                                     const PipelineConfig& cfg) {
    if (q.topics.empty()) return {};  // nothing to anchor on
    std::vector<ErAp> eraps = collect_eraps(kg, q.topics);
    std::vector<RrAp> rraps;
    rraps.reserve(hits.size());
    for (const RetrievalHit& h : hits) rraps.push_back(h.ap);
    EnumerationConfig ecfg;
    ecfg.tau = std::uint32_t(cfg.tau);
    ecfg.candidate_cap = cfg.candidate_cap;
    ecfg.state_cap = cfg.state_cap;
    ecfg.match.step_budget = cfg.match_budget;
    return enumerate_candidates(kg, q.topics, eraps, rraps, ecfg);
}

std::vector<ScoredCandidate> rank_question(const KnowledgeGraph& kg, const Question& q,
                                           std::span<const EvidencePattern> patterns,
                                           std::span<const RetrievalHit> hits, PairScorer& scorer,
                                           const PipelineConfig& cfg) {
    if (patterns.empty()) return {};
    std::vector<Candidate> candidates = attach_provenance(patterns, hits, kg);
    return rank_candidates(q.text, candidates, scorer, cfg.batch_size);
}

// ---- artifact io -----------------------------------------------------------

namespace {

void write_retrieved_file(const std::string& path, std::span<const RetrievedRow> rows,
                          const KnowledgeGraph& kg) {
    std::ofstream os = open_out(path);
    for (const RetrievedRow& r : rows) {
        json j{{"qid", r.qid}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        } else {
            json hits = json::array();
            for (const RetrievalHit& h : r.hits) hits.push_back(hit_to_json(h, kg));
            j["hits"] = std::move(hits);
        }
        os << j.dump() << '\n';
    }
}

void write_candidates_file(const std::string& path, std::span<const CandidateRow> rows,
                           const KnowledgeGraph& kg) {
    std::ofstream os = open_out(path);
    for (const CandidateRow& r : rows) {
        json j{{"qid", r.qid}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        } else {
            j["truncated"] = r.truncated;
            j["states"] = r.states_visited;
            json patterns = json::array();
            for (const EvidencePattern& p : r.patterns) patterns.push_back(pattern_to_json(p, kg));
            j["patterns"] = std::move(patterns);
        }
        os << j.dump() << '\n';
    }
}

void write_ranked_file(const std::string& path, std::span<const RankedRow> rows,
                       const KnowledgeGraph& kg) {
    std::ofstream os = open_out(path);
    for (const RankedRow& r : rows) {
        json j{{"qid", r.qid}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        } else {
            json cands = json::array();
            for (const ScoredCandidate& c : r.ranked) {
                json pv = json::array();
                for (const RrApScore& s : c.provenance)
                    pv.push_back(json{{"rel1", kg.relations().identifier(s.ap.rel1)},
                                      {"tag", to_string(s.ap.tag)},
                                      {"rel2", kg.relations().identifier(s.ap.rel2)},
                                      {"score", double(s.score)}});
                cands.push_back(json{{"text", c.text},
                                     {"score", double(c.score)},
                                     {"edges", pattern_to_json(c.pattern, kg)},
                                     {"provenance", std::move(pv)}});
            }
            j["candidates"] = std::move(cands);
        }
        os << j.dump() << '\n';
    }
}

void write_subgraphs_file(const std::string& path, std::span<const SubgraphRow> rows,
                          const KnowledgeGraph& kg) {
    std::ofstream os = open_out(path);
    for (const SubgraphRow& r : rows) {
        json j{{"qid", r.qid}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        } else {
            j["selected"] = r.selected;
            if (r.selected) {
                j["pattern"] = r.pattern_text;
                j["edges"] = pattern_to_json(r.pattern, kg);
                json triples = json::array();
                for (const Triple& t : r.subgraph.triples)
                    triples.push_back(json::array({kg.entities().identifier(t.subject),
                                                   kg.relations().identifier(t.relation),
                                                   kg.entities().identifier(t.object)}));
                j["triples"] = std::move(triples);
                json entities = json::array();
                for (EntityId e : r.subgraph.nodes) entities.push_back(kg.entities().identifier(e));
                j["entities"] = std::move(entities);
                std::vector<std::string> names = variable_display_names(r.pattern);
                json bindings = json::array();
                for (std::size_t v = 0; v < r.subgraph.bindings.size(); ++v) {
                    json ents = json::array();
                    for (EntityId e : r.subgraph.bindings[v])
                        ents.push_back(kg.entities().identifier(e));
                    bindings.push_back(json{{"var", v < names.size() ? names[v] : "?"},
                                            {"entities", std::move(ents)}});
                }
                j["bindings"] = std::move(bindings);
            }
        }
        os << j.dump() << '\n';
    }
}

void write_records_file(const std::string& path, std::span<const ExtractionRecord> records,
                        const KnowledgeGraph& kg) {
    std::ofstream os = open_out(path);
    for (const ExtractionRecord& r : records) {
        json j{{"qid", r.qid}};
        j["selected"] = r.selected;
        j["pattern"] = r.pattern_text;
        json rels = json::array();
        for (RelationId rel : r.pattern_relations) rels.push_back(kg.relations().identifier(rel));
        j["relations"] = std::move(rels);
        j["retrieved"] = r.retrieved_count;
        j["candidates"] = r.candidate_count;
        j["truncated"] = r.truncated;
        j["subgraph_triples"] = r.subgraph_triples;
        j["subgraph_nodes"] = r.subgraph_nodes;
        json ents = json::array();
        for (EntityId e : r.subgraph_entities) ents.push_back(kg.entities().identifier(e));
        j["entities"] = std::move(ents);
        j["error"] = r.error;
        os << j.dump() << '\n';
    }
}

}  // namespace

std::vector<RetrievedRow> read_retrieved(const std::string& path, const KnowledgeGraph& kg) {
    require_file(path, "retrieve");
    std::vector<RetrievedRow> rows;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        RetrievedRow r;
        r.qid = j.at("qid").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        if (j.contains("hits"))
            for (const json& h : j.at("hits")) r.hits.push_back(hit_from_json(h, kg, path));
        rows.push_back(std::move(r));
    });
    return rows;
}

std::vector<CandidateRow> read_candidates(const std::string& path, const KnowledgeGraph& kg) {
    require_file(path, "enumerate");
    std::vector<CandidateRow> rows;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        CandidateRow r;
        r.qid = j.at("qid").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        if (j.contains("truncated")) r.truncated = j.at("truncated").get<bool>();
        if (j.contains("states")) r.states_visited = j.at("states").get<std::size_t>();
        if (j.contains("patterns"))
            for (const json& p : j.at("patterns")) r.patterns.push_back(pattern_from_json(p, kg, path));
        rows.push_back(std::move(r));
    });
    return rows;
}

std::vector<RankedRow> read_ranked(const std::string& path, const KnowledgeGraph& kg) {
    require_file(path, "rank");
    std::vector<RankedRow> rows;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        RankedRow r;
        r.qid = j.at("qid").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        if (j.contains("candidates"))
            for (const json& c : j.at("candidates")) {
                ScoredCandidate sc;
                sc.text = c.at("text").get<std::string>();
                sc.score = float(c.at("score").get<double>());
                sc.pattern = pattern_from_json(c.at("edges"), kg, path);
                for (const json& pv : c.at("provenance")) {
                    RrApScore s;
                    s.ap.rel1 = resolve_relation(kg, pv.at("rel1").get<std::string>(), path);
                    s.ap.rel2 = resolve_relation(kg, pv.at("rel2").get<std::string>(), path);
                    auto tag = parse_tag(pv.at("tag").get<std::string>());
                    if (!tag) throw Error(path + ": bad link tag");
                    s.ap.tag = *tag;
                    s.score = float(pv.at("score").get<double>());
                    sc.provenance.push_back(s);
                }
                r.ranked.push_back(std::move(sc));
            }
        rows.push_back(std::move(r));
    });
    return rows;
}

std::vector<SubgraphRow> read_subgraphs(const std::string& path, const KnowledgeGraph& kg) {
    require_file(path, "extract-subgraph");
    std::vector<SubgraphRow> rows;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        SubgraphRow r;
        r.qid = j.at("qid").get<std::string>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        if (j.contains("selected")) r.selected = j.at("selected").get<bool>();
        if (r.selected) {
            r.pattern_text = j.at("pattern").get<std::string>();
            r.pattern = pattern_from_json(j.at("edges"), kg, path);
            for (const json& t : j.at("triples"))
                r.subgraph.triples.push_back(
                    Triple{resolve_entity(kg, t.at(0).get<std::string>(), path),
                           resolve_relation(kg, t.at(1).get<std::string>(), path),
                           resolve_entity(kg, t.at(2).get<std::string>(), path)});
            for (const json& e : j.at("entities"))
                r.subgraph.nodes.push_back(resolve_entity(kg, e.get<std::string>(), path));
            for (const json& b : j.at("bindings")) {
                std::vector<EntityId> ents;
                for (const json& e : b.at("entities"))
                    ents.push_back(resolve_entity(kg, e.get<std::string>(), path));
                r.subgraph.bindings.push_back(std::move(ents));
            }
        }
        rows.push_back(std::move(r));
    });
    return rows;
}

std::vector<ExtractionRecord> read_records(const std::string& path, const KnowledgeGraph& kg) {
    require_file(path, "evaluate");
    std::vector<ExtractionRecord> records;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        ExtractionRecord r;
        r.qid = j.at("qid").get<std::string>();
        r.selected = j.at("selected").get<bool>();
        r.pattern_text = j.at("pattern").get<std::string>();
        for (const json& rel : j.at("relations"))
            r.pattern_relations.push_back(resolve_relation(kg, rel.get<std::string>(), path));
        r.retrieved_count = j.at("retrieved").get<std::size_t>();
        r.candidate_count = j.at("candidates").get<std::size_t>();
        r.truncated = j.at("truncated").get<bool>();
        r.subgraph_triples = j.at("subgraph_triples").get<std::size_t>();
        r.subgraph_nodes = j.at("subgraph_nodes").get<std::size_t>();
        for (const json& e : j.at("entities"))
            r.subgraph_entities.push_back(resolve_entity(kg, e.get<std::string>(), path));
        r.error = j.at("error").get<std::string>();
        records.push_back(std::move(r));
    });
    return records;
}

// ---- stages -----------------------------------------------------------------

void stage_ingest(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    IngestStats stats;
    KnowledgeGraph kg = load_graph(cfg, &stats);
    out << "[ingest] " << kg.triple_count() << " triples, " << kg.entity_count() << " entities, "
        << kg.relation_count() << " relations (" << stats.duplicates << " duplicate triples, "
        << stats.literals_skipped << " literal objects skipped, " << stats.labels_loaded
        << " labels)\n";
}

void stage_extract_aps(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<RrAp> aps = extract_rraps(kg);
    std::ofstream os = open_out(cfg.rraps_file());
    write_rrap_dump(os, aps, kg);
    out << "[extract-aps] " << aps.size() << " relation-relation patterns -> " << cfg.rraps_file()
        << "\n";
}

void stage_build_index(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    require_file(cfg.rraps_file(), "extract-aps");
    std::ifstream is(cfg.rraps_file());
    if (!is) throw Error("cannot open '" + cfg.rraps_file() + "'");
    std::vector<RrAp> aps = read_rrap_dump(is, kg);
    std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
    VectorIndex index = VectorIndex::build(kg, aps, *provider);
    index.save(cfg.index_file());
    out << "[build-index] " << index.size() << " vectors, dim " << index.dim() << ", provider "
        << index.fingerprint() << " -> " << cfg.index_file() << "\n";
}

namespace {

VectorIndex load_index_checked(const PipelineConfig& cfg, const KnowledgeGraph& kg,
                               const EmbeddingProvider& provider) {
    require_file(cfg.index_file(), "build-index");
    VectorIndex index = VectorIndex::load(cfg.index_file(), kg);
    if (index.size() != 0 && index.fingerprint() != provider.fingerprint())
        throw Error("index '" + cfg.index_file() + "' was built with provider '" +
                    index.fingerprint() + "' but the configured provider is '" +
                    provider.fingerprint() + "'; re-run `epr build-index`");
    return index;
}

}  // namespace

void stage_retrieve(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
    VectorIndex index = load_index_checked(cfg, kg, *provider);
    std::vector<RetrievedRow> rows(questions.size());
    std::vector<double> ms(questions.size(), 0.0);
    parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
        auto t0 = clock_type::now();
        rows[i].qid = questions[i].id;
        try {
            rows[i].hits = retrieve_question(index, *provider, questions[i], cfg.k);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
        ms[i] = ms_since(t0);
    });
    write_retrieved_file(artifact(cfg, "retrieved.jsonl"), rows, kg);
    write_stage_timings(artifact(cfg, "timings_retrieve.csv"), questions, ms);
    std::size_t errors = 0;
    for (const RetrievedRow& r : rows) errors += !r.error.empty();
    out << "[retrieve] " << questions.size() << " questions, k=" << cfg.k << ", " << errors
        << " errors -> " << artifact(cfg, "retrieved.jsonl") << "\n";
}

void stage_enumerate(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::vector<RetrievedRow> retrieved = read_retrieved(artifact(cfg, "retrieved.jsonl"), kg);
    check_alignment(retrieved, questions, "retrieved.jsonl", "retrieve");
    std::vector<CandidateRow> rows(questions.size());
    std::vector<double> ms(questions.size(), 0.0);
    parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
        auto t0 = clock_type::now();
        rows[i].qid = questions[i].id;
        if (!retrieved[i].error.empty()) {
            rows[i].error = retrieved[i].error;
        } else {
            try {
                EnumerationResult res = enumerate_question(kg, questions[i], retrieved[i].hits, cfg);
                rows[i].patterns = std::move(res.candidates);
                rows[i].truncated = res.truncated;
                rows[i].states_visited = res.states_visited;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
        ms[i] = ms_since(t0);
    });
    write_candidates_file(artifact(cfg, "candidates.jsonl"), rows, kg);
    write_stage_timings(artifact(cfg, "timings_enumerate.csv"), questions, ms);
    std::size_t total = 0, truncated = 0, errors = 0;
    for (const CandidateRow& r : rows) {
        total += r.patterns.size();
        truncated += r.truncated;
        errors += !r.error.empty();
    }
    out << "[enumerate] tau=" << cfg.tau << ", " << total << " candidates over "
        << questions.size() << " questions, " << truncated << " truncated, " << errors
        << " errors -> " << artifact(cfg, "candidates.jsonl") << "\n";
}

void stage_rank(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::vector<RetrievedRow> retrieved = read_retrieved(artifact(cfg, "retrieved.jsonl"), kg);
    check_alignment(retrieved, questions, "retrieved.jsonl", "retrieve");
    std::vector<CandidateRow> candidates = read_candidates(artifact(cfg, "candidates.jsonl"), kg);
    check_alignment(candidates, questions, "candidates.jsonl", "enumerate");
    std::unique_ptr<PairScorer> scorer = make_scorer(cfg);
    std::vector<RankedRow> rows(questions.size());
    std::vector<double> ms(questions.size(), 0.0);
    parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
        auto t0 = clock_type::now();
        rows[i].qid = questions[i].id;
        if (!candidates[i].error.empty()) {
            rows[i].error = candidates[i].error;
        } else {
            try {
                rows[i].ranked = rank_question(kg, questions[i], candidates[i].patterns,
                                               retrieved[i].hits, *scorer, cfg);
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
        ms[i] = ms_since(t0);
    });
    write_ranked_file(artifact(cfg, "ranked.jsonl"), rows, kg);
    write_stage_timings(artifact(cfg, "timings_rank.csv"), questions, ms);
    std::size_t errors = 0;
    for (const RankedRow& r : rows) errors += !r.error.empty();
    out << "[rank] scorer " << scorer->name() << ", " << errors << " errors -> "
        << artifact(cfg, "ranked.jsonl") << "\n";
}

void stage_extract_subgraph(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::vector<RankedRow> ranked = read_ranked(artifact(cfg, "ranked.jsonl"), kg);
    check_alignment(ranked, questions, "ranked.jsonl", "rank");
    std::vector<SubgraphRow> rows(questions.size());
    std::vector<double> ms(questions.size(), 0.0);
    parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
        auto t0 = clock_type::now();
        rows[i].qid = questions[i].id;
        if (!ranked[i].error.empty()) {
            rows[i].error = ranked[i].error;
        } else if (!ranked[i].ranked.empty()) {
            const ScoredCandidate& top = ranked[i].ranked.front();
            try {
                Subgraph sg = instantiate(kg, top.pattern, MatchConfig{cfg.match_budget});
                if (sg.empty()) {
                    rows[i].error = "selected pattern has no match in the graph";
                } else {
                    rows[i].selected = true;
                    rows[i].pattern = top.pattern;
                    rows[i].pattern_text = top.text;
                    rows[i].subgraph = std::move(sg);
                }
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
        ms[i] = ms_since(t0);
    });
    write_subgraphs_file(artifact(cfg, "subgraphs.jsonl"), rows, kg);
    write_stage_timings(artifact(cfg, "timings_instantiate.csv"), questions, ms);
    std::size_t selected = 0, errors = 0;
    for (const SubgraphRow& r : rows) {
        selected += r.selected;
        errors += !r.error.empty();
    }
    out << "[extract-subgraph] " << selected << "/" << questions.size() << " questions selected, "
        << errors << " errors -> " << artifact(cfg, "subgraphs.jsonl") << "\n";
}

void stage_evaluate(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::vector<RetrievedRow> retrieved = read_retrieved(artifact(cfg, "retrieved.jsonl"), kg);
    check_alignment(retrieved, questions, "retrieved.jsonl", "retrieve");
    std::vector<CandidateRow> candidates = read_candidates(artifact(cfg, "candidates.jsonl"), kg);
    check_alignment(candidates, questions, "candidates.jsonl", "enumerate");
    std::vector<SubgraphRow> subgraphs = read_subgraphs(artifact(cfg, "subgraphs.jsonl"), kg);
    check_alignment(subgraphs, questions, "subgraphs.jsonl", "extract-subgraph");
    auto t_retrieve = read_stage_timings(artifact(cfg, "timings_retrieve.csv"), "retrieve");
    auto t_enumerate = read_stage_timings(artifact(cfg, "timings_enumerate.csv"), "enumerate");
    auto t_rank = read_stage_timings(artifact(cfg, "timings_rank.csv"), "rank");
    auto t_instantiate =
        read_stage_timings(artifact(cfg, "timings_instantiate.csv"), "extract-subgraph");

    std::vector<ExtractionRecord> records(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
        ExtractionRecord& r = records[i];
        r.qid = questions[i].id;
        r.retrieved_count = retrieved[i].hits.size();
        r.candidate_count = candidates[i].patterns.size();
        r.truncated = candidates[i].truncated;
        r.selected = subgraphs[i].selected;
        if (r.selected) {
            r.pattern_text = subgraphs[i].pattern_text;
            std::set<RelationId> rels;
            for (const PatternEdge& e : subgraphs[i].pattern.edges()) rels.insert(e.relation);
            r.pattern_relations.assign(rels.begin(), rels.end());
            r.subgraph_triples = subgraphs[i].subgraph.triples.size();
            r.subgraph_nodes = subgraphs[i].subgraph.nodes.size();
            r.subgraph_entities = subgraphs[i].subgraph.nodes;
        }
        for (const std::string* err :
             {&retrieved[i].error, &candidates[i].error, &subgraphs[i].error})
            if (r.error.empty() && !err->empty()) r.error = *err;
        auto time_of = [&](const std::unordered_map<std::string, double>& m) {
            auto it = m.find(r.qid);
            return it == m.end() ? 0.0 : it->second;
        };
        r.times.retrieve_ms = time_of(t_retrieve);
        r.times.enumerate_ms = time_of(t_enumerate);
        r.times.rank_ms = time_of(t_rank);
        r.times.instantiate_ms = time_of(t_instantiate);
    }
    write_records_file(artifact(cfg, "records.jsonl"), records, kg);

    // merged per-question timings + mean/p95 summary (separate files: every
    // other artifact must be byte-identical across reruns)
    {
        std::ofstream os = open_out(artifact(cfg, "timings.csv"));
        os << "qid,retrieve_ms,enumerate_ms,rank_ms,instantiate_ms\n";
        for (const ExtractionRecord& r : records)
            os << r.qid << ',' << fmt(r.times.retrieve_ms, 3) << ',' << fmt(r.times.enumerate_ms, 3)
               << ',' << fmt(r.times.rank_ms, 3) << ',' << fmt(r.times.instantiate_ms, 3) << '\n';
    }
    {
        std::ofstream os = open_out(artifact(cfg, "timing_summary.csv"));
        os << "stage,mean_ms,p95_ms\n";
        auto summarize = [&](const char* stage, auto member) {
            std::vector<double> values;
            values.reserve(records.size());
            for (const ExtractionRecord& r : records) values.push_back(r.times.*member);
            double mean =
                values.empty() ? 0.0
                               : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
            os << stage << ',' << fmt(mean, 3) << ',' << fmt(p95(values), 3) << '\n';
        };
        summarize("retrieve", &StageTimes::retrieve_ms);
        summarize("enumerate", &StageTimes::enumerate_ms);
        summarize("rank", &StageTimes::rank_ms);
        summarize("instantiate", &StageTimes::instantiate_ms);
    }

    double cover = cover_rate(records, questions);
    std::size_t selected = 0, errors = 0, truncated = 0, total_candidates = 0, total_retrieved = 0;
    for (const ExtractionRecord& r : records) {
        selected += r.selected;
        errors += !r.error.empty();
        truncated += r.truncated;
        total_candidates += r.candidate_count;
        total_retrieved += r.retrieved_count;
    }
    json metrics{{"questions", questions.size()},
                 {"selected", selected},
                 {"errors", errors},
                 {"truncated", truncated},
                 {"cover_rate", cover},
                 {"mean_retrieved", questions.empty() ? 0.0 : double(total_retrieved) / double(questions.size())},
                 {"mean_candidates", questions.empty() ? 0.0 : double(total_candidates) / double(questions.size())}};
    if (!cfg.predictions_path.empty()) {
        EvalScores scores = f1_hits_from_predictions(questions, cfg.predictions_path);
        metrics["predictions"] = json{{"hits_at_1", scores.hits_at_1},
                                      {"f1", scores.f1},
                                      {"missing", scores.missing_predictions}};
    }
    if (!cfg.train_questions_path.empty()) {
        std::vector<Question> train = load_questions(cfg.train_questions_path, kg);
        std::vector<RelationId> vocab = pseudo_relation_vocab(
            kg, train, cfg.seed, PseudoEpConfig{cfg.hops, cfg.paths_per_pair});
        SplitReport split = split_report(records, questions, vocab);
        auto bucket = [](const SplitMetrics& m) {
            return json{{"questions", m.questions}, {"covered", m.covered}, {"cover_rate", m.cover_rate}};
        };
        metrics["split"] = json{{"train_questions", train.size()},
                                {"vocab_relations", vocab.size()},
                                {"with_unseen", bucket(split.with_unseen)},
                                {"without_unseen", bucket(split.without_unseen)}};
    }
    {
        std::ofstream os = open_out(artifact(cfg, "metrics.json"));
        os << metrics.dump(2) << '\n';
    }
    out << "[evaluate] cover_rate=" << fmt(cover, 4) << " selected=" << selected << "/"
        << questions.size() << " errors=" << errors << " -> " << artifact(cfg, "metrics.json")
        << "\n";
}

void run_pipeline(const PipelineConfig& cfg, std::ostream& out) {
    stage_retrieve(cfg, out);
    stage_enumerate(cfg, out);
    stage_rank(cfg, out);
    stage_extract_subgraph(cfg, out);
    stage_evaluate(cfg, out);
}

void stage_gen_train(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    require_file(cfg.rraps_file(), "extract-aps");
    std::ifstream is(cfg.rraps_file());
    if (!is) throw Error("cannot open '" + cfg.rraps_file() + "'");
    std::vector<RrAp> all_rraps = read_rrap_dump(is, kg);
    std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
    VectorIndex index = load_index_checked(cfg, kg, *provider);
    PseudoEpConfig pcfg{cfg.hops, cfg.paths_per_pair};

    // pseudo patterns
    std::size_t built = 0;
    {
        std::ofstream os = open_out(artifact(cfg, "pseudo_eps.jsonl"));
        for (const Question& q : questions) {
            std::mt19937_64 rng(question_seed(cfg.seed, q.id));
            std::optional<PseudoEp> pe = build_pseudo_ep(kg, q, rng, pcfg);
            json j{{"qid", q.id}, {"built", bool(pe)}};
            if (pe) {
                ++built;
                j["answer"] = kg.entities().identifier(pe->answer);
                j["pattern"] = serialize_ep_triplets(pe->pattern, kg);
                j["edges"] = pattern_to_json(pe->pattern, kg);
            }
            os << j.dump() << '\n';
        }
    }
    out << "[gen-train] pseudo patterns built for " << built << "/" << questions.size()
        << " questions -> " << artifact(cfg, "pseudo_eps.jsonl") << "\n";

    // retriever samples
    ApSampleStats ap_stats;
    std::vector<ApSample> ap_samples =
        gen_ap_retriever_samples(kg, questions, all_rraps, cfg.seed, cfg.negatives_per_positive,
                                 pcfg, &ap_stats);
    {
        std::ofstream os = open_out(artifact(cfg, "ap_samples.jsonl"));
        for (const ApSample& s : ap_samples) {
            json j{{"qid", s.qid}, {"text_a", s.text_a}, {"text_b", s.text_b}, {"label", s.label}};
            os << j.dump() << '\n';
        }
    }
    out << "[gen-train] " << ap_stats.positives << " positive / "
        << (ap_stats.perturb_negatives + ap_stats.uniform_negatives)
        << " negative retriever samples";
    if (ap_stats.shortfall)
        out << " (warning: " << ap_stats.shortfall << " negatives could not be drawn)";
    out << " -> " << artifact(cfg, "ap_samples.jsonl") << "\n";

    // ranker samples: needs candidates plus their instantiations' coverage
    BaselineScorer baseline{BaselineProvider(cfg.dim, cfg.seed)};
    std::vector<std::vector<RankerSample>> per_question(questions.size());
    std::vector<std::string> failures(questions.size());
    parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
        const Question& q = questions[i];
        try {
            std::vector<RetrievalHit> hits = retrieve_question(index, *provider, q, cfg.k);
            EnumerationResult res = enumerate_question(kg, q, hits, cfg);
            std::vector<ScoredCandidate> ranked =
                rank_question(kg, q, res.candidates, hits, baseline, cfg);
            std::vector<RankerCandidate> cands;
            cands.reserve(ranked.size());
            for (const ScoredCandidate& sc : ranked) {
                Subgraph sg = instantiate(kg, sc.pattern, MatchConfig{cfg.match_budget});
                std::size_t coverage = 0;
                for (EntityId a : q.answers)
                    coverage += std::binary_search(sg.nodes.begin(), sg.nodes.end(), a);
                cands.push_back({sc.text, sc.score, coverage});
            }
            per_question[i] = gen_ranker_samples(q.id, q.text, cands, cfg.max_neg_ratio);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    std::size_t ranker_positive = 0, ranker_total = 0, skipped = 0, failed = 0;
    {
        std::ofstream os = open_out(artifact(cfg, "ranker_samples.jsonl"));
        for (std::size_t i = 0; i < questions.size(); ++i) {
            if (!failures[i].empty()) {
                ++failed;
                continue;
            }
            if (per_question[i].empty()) ++skipped;
            for (const RankerSample& s : per_question[i]) {
                json j{{"qid", s.qid}, {"text_a", s.text_a}, {"text_b", s.text_b}, {"label", s.label}};
                os << j.dump() << '\n';
                ++ranker_total;
                ranker_positive += s.label;
            }
        }
    }
    out << "[gen-train] " << ranker_positive << " positive / " << (ranker_total - ranker_positive)
        << " negative ranker samples, " << skipped << " questions without positives, " << failed
        << " failed -> " << artifact(cfg, "ranker_samples.jsonl") << "\n";
    for (std::size_t i = 0; i < questions.size(); ++i)
        if (!failures[i].empty())
            out << "[gen-train]   " << questions[i].id << ": " << failures[i] << "\n";
}

std::vector<SweepRow> k_sweep(const KnowledgeGraph& kg, std::span<const Question> questions,
                              const VectorIndex& index, EmbeddingProvider& provider,
                              PairScorer& scorer, const PipelineConfig& cfg,
                              std::span<const std::size_t> ks) {
    if (ks.empty()) throw Error("sweep: no k values given");
    for (std::size_t k : ks)
        if (k < 1) throw Error("sweep: k must be >= 1");
    std::vector<SweepRow> rows;
    rows.reserve(ks.size());
    for (std::size_t k : ks) {
        PipelineConfig kcfg = cfg;
        kcfg.k = k;
        SweepRow row;
        row.k = k;
        row.questions = questions.size();
        std::vector<std::size_t> covered(questions.size(), 0), truncated(questions.size(), 0),
            errors(questions.size(), 0), n_candidates(questions.size(), 0),
            n_retrieved(questions.size(), 0);
        std::vector<StageTimes> times(questions.size());
        parallel_for(questions.size(), cfg.workers, [&](std::size_t i) {
            const Question& q = questions[i];
            try {
                auto t0 = clock_type::now();
                std::vector<RetrievalHit> hits = retrieve_question(index, provider, q, k);
                times[i].retrieve_ms = ms_since(t0);
                n_retrieved[i] = hits.size();
                t0 = clock_type::now();
                EnumerationResult res = enumerate_question(kg, q, hits, kcfg);
                times[i].enumerate_ms = ms_since(t0);
                n_candidates[i] = res.candidates.size();
                truncated[i] = res.truncated;
                t0 = clock_type::now();
                std::vector<ScoredCandidate> ranked =
                    rank_question(kg, q, res.candidates, hits, scorer, kcfg);
                times[i].rank_ms = ms_since(t0);
                if (!ranked.empty()) {
                    t0 = clock_type::now();
                    Subgraph sg =
                        instantiate(kg, ranked.front().pattern, MatchConfig{cfg.match_budget});
                    times[i].instantiate_ms = ms_since(t0);
                    for (EntityId a : q.answers)
                        if (std::binary_search(sg.nodes.begin(), sg.nodes.end(), a)) {
                            covered[i] = 1;
                            break;
                        }
                }
            } catch (const std::exception&) {
                errors[i] = 1;
            }
        });
        for (std::size_t i = 0; i < questions.size(); ++i) {
            row.covered += covered[i];
            row.truncated += truncated[i];
            row.errors += errors[i];
            row.mean_candidates += double(n_candidates[i]);
            row.mean_retrieved += double(n_retrieved[i]);
            row.mean_times.retrieve_ms += times[i].retrieve_ms;
            row.mean_times.enumerate_ms += times[i].enumerate_ms;
            row.mean_times.rank_ms += times[i].rank_ms;
            row.mean_times.instantiate_ms += times[i].instantiate_ms;
        }
        if (!questions.empty()) {
            double n = double(questions.size());
            row.cover_rate = double(row.covered) / n;
            row.mean_candidates /= n;
            row.mean_retrieved /= n;
            row.mean_times.retrieve_ms /= n;
            row.mean_times.enumerate_ms /= n;
            row.mean_times.rank_ms /= n;
            row.mean_times.instantiate_ms /= n;
        }
        rows.push_back(row);
    }
    return rows;
}

void stage_sweep(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    ensure_out_dir(cfg);
    KnowledgeGraph kg = load_graph(cfg);
    std::vector<Question> questions = load_question_file(cfg, kg);
    std::unique_ptr<EmbeddingProvider> provider = make_provider(cfg);
    std::unique_ptr<PairScorer> scorer = make_scorer(cfg);
    VectorIndex index = load_index_checked(cfg, kg, *provider);
    std::vector<std::size_t> ks;
    for (std::size_t k = cfg.sweep_k_min; k <= cfg.sweep_k_max; k += cfg.sweep_k_step)
        ks.push_back(k);
    std::vector<SweepRow> rows = k_sweep(kg, questions, index, *provider, *scorer, cfg, ks);
    {
        std::ofstream os = open_out(artifact(cfg, "sweep.csv"));
        os << "k,questions,covered,cover_rate,mean_retrieved,mean_candidates,truncated,errors\n";
        for (const SweepRow& r : rows)
            os << r.k << ',' << r.questions << ',' << r.covered << ',' << fmt(r.cover_rate, 6)
               << ',' << fmt(r.mean_retrieved, 6) << ',' << fmt(r.mean_candidates, 6) << ','
               << r.truncated << ',' << r.errors << '\n';
    }
    {
        std::ofstream os = open_out(artifact(cfg, "sweep_timings.csv"));
        os << "k,retrieve_ms,enumerate_ms,rank_ms,instantiate_ms\n";
        for (const SweepRow& r : rows)
            os << r.k << ',' << fmt(r.mean_times.retrieve_ms, 3) << ','
               << fmt(r.mean_times.enumerate_ms, 3) << ',' << fmt(r.mean_times.rank_ms, 3) << ','
               << fmt(r.mean_times.instantiate_ms, 3) << '\n';
    }
    out << "[sweep] " << rows.size() << " rows (k " << cfg.sweep_k_min << ".." << cfg.sweep_k_max
        << " step " << cfg.sweep_k_step << ") -> " << artifact(cfg, "sweep.csv") << "\n";
}

}  // namespace epr
