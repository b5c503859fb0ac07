// Command-line front end: one subcommand per pipeline stage plus `pipeline`,
// which runs retrieve -> enumerate -> rank -> extract-subgraph -> evaluate.
// Option precedence: defaults < --config file < EPR_* environment < flags.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "epr/pipeline.hpp"
#include "epr/util.hpp"

namespace {

struct StageSpec {
    const char* name;
    const char* help;
    void (*run)(const epr::PipelineConfig&, std::ostream&);
};

const StageSpec kStages[] = {
    {"ingest", "load the graph and report its size", epr::stage_ingest},
    {"extract-aps", "dump all relation-relation patterns of the graph", epr::stage_extract_aps},
    {"build-index", "embed the pattern dump into a dense retrieval index", epr::stage_build_index},
    {"gen-train", "write pseudo patterns and weak-label training pairs", epr::stage_gen_train},
    {"retrieve", "top-k pattern retrieval per question", epr::stage_retrieve},
    {"enumerate", "grow candidate evidence patterns from retrieved sets", epr::stage_enumerate},
    {"rank", "score and order candidates per question", epr::stage_rank},
    {"extract-subgraph", "instantiate the top candidate into a subgraph", epr::stage_extract_subgraph},
    {"evaluate", "aggregate records, cover rate and metrics", epr::stage_evaluate},
    {"sweep", "rerun the pipeline in memory over a k grid", epr::stage_sweep},
    {"pipeline", "retrieve + enumerate + rank + extract-subgraph + evaluate", epr::run_pipeline},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evidence-pattern subgraph extraction"};
    app.require_subcommand(1);

    std::string config_file;
    app.add_option("--config", config_file, "flat key = value config file")
        ->check(CLI::ExistingFile);

    // every flag records into `overrides` so precedence stays simple:
    // defaults < config file < EPR_* environment < explicit flags
    std::map<std::string, std::string> overrides;
    auto opt = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                   const std::string& help) {
        cmd->add_option_function<std::string>(
               flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help)
            ->take_last();
    };

    for (const StageSpec& stage : kStages) {
        CLI::App* cmd = app.add_subcommand(stage.name, stage.help);
        opt(cmd, "--kg", "kg", "graph triples file");
        opt(cmd, "--labels", "labels", "optional tsv of id<TAB>label");
        opt(cmd, "--kg-format", "kg_format", "tsv | ntriples");
        opt(cmd, "--questions", "questions", "questions jsonl");
        opt(cmd, "--out-dir", "out_dir", "artifact directory");
        opt(cmd, "--index", "index", "retrieval index path");
        opt(cmd, "--rraps", "rraps", "pattern dump path");
        opt(cmd, "--predictions", "predictions", "ranked answers jsonl for evaluate");
        opt(cmd, "--train-questions", "train_questions", "training questions for the split report");
        opt(cmd, "--k", "k", "retrieval depth");
        opt(cmd, "--tau", "tau", "max candidate pattern edges");
        opt(cmd, "--dim", "dim", "baseline embedding width");
        opt(cmd, "--seed", "seed", "global random seed");
        opt(cmd, "--provider", "provider", "embedding provider: baseline | http(s) URL");
        opt(cmd, "--scorer", "scorer", "pair scorer: baseline | http(s) URL");
        opt(cmd, "--workers", "workers", "question-level parallelism");
        opt(cmd, "--cap,--candidate-cap", "candidate_cap", "max candidates per question");
        opt(cmd, "--state-cap", "state_cap", "max explored states per question");
        opt(cmd, "--match-budget", "match_budget", "matcher step budget");
        opt(cmd, "--batch-size", "batch_size", "wire batch size");
        opt(cmd, "--timeout-seconds", "timeout_seconds", "wire timeout");
        opt(cmd, "--retries", "retries", "wire retry attempts");
        opt(cmd, "--hops", "hops", "pseudo-pattern path length cap");
        opt(cmd, "--paths-per-pair", "paths_per_pair", "pseudo-pattern paths kept per pair");
        opt(cmd, "--negatives-per-positive", "negatives_per_positive", "retriever negatives per positive");
        opt(cmd, "--max-neg-ratio", "max_neg_ratio", "ranker negatives cap per positive");
        opt(cmd, "--sweep-k-min", "sweep_k_min", "sweep grid start");
        opt(cmd, "--sweep-k-max", "sweep_k_max", "sweep grid end");
        opt(cmd, "--sweep-k-step", "sweep_k_step", "sweep grid step");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        epr::PipelineConfig cfg;
        if (!config_file.empty()) epr::load_config_file(cfg, config_file);
        epr::apply_env_overrides(cfg);
        for (const auto& [key, value] : overrides) epr::apply_config_entry(cfg, key, value);
        cfg.validate();

        const StageSpec* chosen = nullptr;
        for (const StageSpec& stage : kStages)
            if (app.get_subcommand(stage.name)->parsed()) chosen = &stage;
        if (!chosen) {
            std::cerr << "error: no subcommand\n";
            return 2;
        }
        std::cout << "# epr " << chosen->name << "\n" << epr::effective_config(cfg) << std::flush;
        chosen->run(cfg, std::cout);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
