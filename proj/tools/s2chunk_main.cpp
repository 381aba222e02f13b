#include "s2chunk/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Flags shared by `chunk` and `bench`. Options left unset keep the config-file value.
void add_run_flags(CLI::App* cmd, s2chunk::ChunkOverrides& o, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON settings file");
    cmd->add_option("--max-tokens", o.max_tokens, "token budget per chunk");
    cmd->add_option("--tau", o.tau, "semantic baseline similarity threshold");
    cmd->add_option("--size", o.size, "fixed-size chunk length in tokens");
    cmd->add_option("--overlap", o.overlap, "fixed-size overlap in tokens");
    cmd->add_option("--seed", o.seed, "clustering seed");
    cmd->add_option("--provider", o.provider, "embedding provider: builtin or remote");
    cmd->add_option("--edge-policy", o.edge_policy, "graph edges: auto, complete or knn");
    cmd->add_option("--segmenter", o.segmenter, "semantic baseline segments: sentence or region");
    cmd->add_option("--link-threshold", o.link_threshold, "hybrid-baseline single-linkage threshold");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--no-normalize-distances", o.no_normalize_distances, "use raw page-unit distances");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layout-aware document chunking with graph spectral clustering"};
    app.require_subcommand(1);

    s2chunk::ChunkRequest chunk;
    auto* chunk_cmd = app.add_subcommand("chunk", "chunk documents");
    chunk_cmd->add_option("--input,-i", chunk.inputs, "document JSON files")->required();
    chunk_cmd->add_option("--method", chunk.overrides.method, "s2, fixed, recursive, semantic, hybrid-baseline");
    chunk_cmd->add_option("--out,-o", chunk.out, "output file (directory for several inputs)");
    chunk_cmd->add_option("--dump-graph", chunk.dump_graph, "write the combined affinity as Matrix Market");
    add_run_flags(chunk_cmd, chunk.overrides, chunk.config_path);

    s2chunk::EvalRequest eval;
    auto* eval_cmd = app.add_subcommand("eval", "score chunk files against a document");
    eval_cmd->add_option("--document,-d", eval.document, "document JSON")->required();
    eval_cmd->add_option("--predictions,-p", eval.predictions, "chunk files")->required();
    eval_cmd->add_option("--name", eval.names, "method name per chunk file");
    eval_cmd->add_option("--truth,-t", eval.truth, "ground-truth JSON");
    eval_cmd->add_option("--out,-o", eval.out, "table output file");
    eval_cmd->add_option("--csv", eval.csv, "CSV output file");
    eval_cmd->add_option("--config", eval.config_path, "JSON settings file (provider, layout)");

    s2chunk::GenRequest gen;
    std::string gen_profile = "mixed";
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "generate a labelled synthetic corpus");
    gen_cmd->add_option("--seed", gen.synthetic.seed, "corpus seed");
    gen_cmd->add_option("--n-docs", gen.synthetic.n_docs, "number of documents");
    gen_cmd->add_option("--profile", gen_profile, "single-column, two-column, figure-caption or mixed");
    gen_cmd->add_option("--group-tokens", gen.synthetic.group_tokens, "token size of each topic group");
    gen_cmd->add_option("--shared-vocabulary", gen.synthetic.shared_vocabulary,
                        "fraction of words from a document-wide theme");
    gen_cmd->add_option("--out,-o", gen.out_dir, "output directory")->required();

    s2chunk::BenchRequest bench;
    s2chunk::SyntheticConfig bench_synthetic;
    std::string bench_profile = "mixed";
    auto* bench_cmd = app.add_subcommand("bench", "compare methods over a corpus");
    bench_cmd->add_option("--corpus", bench.corpus_dir, "directory of documents and .truth.json files");
    bench_cmd->add_option("--synthetic-seed", bench_synthetic.seed, "generate the corpus with this seed");
    bench_cmd->add_option("--n-docs", bench_synthetic.n_docs, "synthetic corpus size");
    bench_cmd->add_option("--profile", bench_profile, "synthetic layout profile");
    bench_cmd->add_option("--shared-vocabulary", bench_synthetic.shared_vocabulary,
                          "synthetic fraction of words from a document-wide theme");
    bench_cmd->add_option("--methods", bench.methods, "methods to compare")->delimiter(',');
    bench_cmd->add_option("--out,-o", bench.out, "table output file");
    bench_cmd->add_option("--csv", bench.csv, "per-method CSV (method,metric,value)");
    bench_cmd->add_option("--per-document-csv", bench.per_document_csv, "per-document CSV");
    add_run_flags(bench_cmd, bench.overrides, bench.config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : s2chunk::kExitInput;
    }

    if (*chunk_cmd) return s2chunk::cmd_chunk(chunk, std::cout, std::cerr);
    if (*eval_cmd) return s2chunk::cmd_eval(eval, std::cout, std::cerr);

    auto profile_of = [](const std::string& name) {
        auto p = s2chunk::parse_profile(name);
        if (!p) std::cerr << "error: unknown profile \"" << name << "\"\n";
        return p;
    };
    if (*gen_cmd) {
        auto p = profile_of(gen_profile);
        if (!p) return s2chunk::kExitInput;
        gen.synthetic.profile = *p;
        return s2chunk::cmd_gen_synthetic(gen, std::cout, std::cerr);
    }
    if (*bench_cmd) {
        auto p = profile_of(bench_profile);
        if (!p) return s2chunk::kExitInput;
        bench_synthetic.profile = *p;
        bench_synthetic.group_tokens = bench.overrides.max_tokens.value_or(bench_synthetic.group_tokens);
        if (bench.corpus_dir.empty()) bench.synthetic = bench_synthetic;
        return s2chunk::cmd_bench(bench, std::cout, std::cerr);
    }
    return s2chunk::kExitFailure;
}
