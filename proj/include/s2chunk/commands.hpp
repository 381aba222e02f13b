#pragma once

#include "s2chunk/baselines.hpp"
#include "s2chunk/doc_model.hpp"
#include "s2chunk/embed.hpp"
#include "s2chunk/graph.hpp"
#include "s2chunk/metrics.hpp"
#include "s2chunk/spectral.hpp"
#include "s2chunk/synthetic.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s2chunk {

enum class Method { S2, Fixed, Recursive, Semantic, HybridBaseline };

std::string method_name(Method method);
/// Accepts "s2", "fixed", "recursive", "semantic" and "hybrid-baseline".
std::optional<Method> parse_method(std::string_view name);

/// Every tunable of a chunking run. The token budget lives in spectral.max_token_length and
/// is shared by recursive and hybrid-baseline; fixed-size uses fixed.size.
struct RunConfig {
    Method method = Method::S2;
    GraphConfig graph;
    SpectralConfig spectral;
    FixedSizeParams fixed;
    SemanticParams semantic;
    double link_threshold = 0.7;
};

/// Throws std::invalid_argument on any out-of-range setting.
void validate(const RunConfig& config);

/// Overlays a JSON settings object onto `config`. Recognized keys: max_tokens, seed,
/// separators, layout {page_gap, normalize_distances, band_height}, graph {edge_policy,
/// knn_k, threads}, spectral {eig_tolerance, max_jacobi_sweeps, kmeans_max_iters,
/// kmeans_restarts, split}, provider {kind, dimension, endpoint, batch_size, cache_path,
/// use_cache, max_parallel_requests, timeout_seconds}, fixed {size, overlap},
/// semantic {threshold, segmenter}, link_threshold. Unknown keys are rejected.
void apply_config_json(RunConfig& config, std::string_view payload);

/// Chunks one document with the configured method.
ChunkSet run_method(const Document& document, const RunConfig& config, EmbeddingService& service);

/// Embeddings of the document's regions in file order; regions without tokens get zeros.
std::vector<EmbeddingVector> region_embeddings(const Document& document, EmbeddingService& service);

struct LabeledDocument {
    Document document;
    std::optional<GroundTruth> truth;
};

/// Runs and scores every method on every document. Documents are processed on up to
/// `threads` workers; results do not depend on the thread count.
EvaluationReport benchmark(const std::vector<LabeledDocument>& corpus, const std::vector<Method>& methods,
                           const RunConfig& base, std::size_t threads);

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit status and reports failures on `err`.

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitInput = 2,
    kExitValidation = 3,
    kExitNumerical = 4,
};

/// Values given on the command line. Unset fields fall back to the config file, then to
/// RunConfig defaults.
struct ChunkOverrides {
    std::optional<std::string> method;
    std::optional<std::size_t> max_tokens;
    std::optional<double> tau;
    std::optional<std::size_t> size;
    std::optional<std::size_t> overlap;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> provider;
    std::optional<std::string> edge_policy;
    std::optional<std::string> segmenter;
    std::optional<double> link_threshold;
    std::optional<std::size_t> threads;
    bool no_normalize_distances = false;
};

struct ChunkRequest {
    std::vector<std::string> inputs;
    std::string out;          // file for one input, directory for several; empty = stdout
    std::string config_path;  // optional JSON settings file
    std::string dump_graph;   // Matrix Market file for the combined affinity (graph methods)
    ChunkOverrides overrides;
};

/// Builds the run configuration: defaults, then the config file, then S2_EMBED_ENDPOINT,
/// then command-line overrides.
RunConfig resolve_run_config(const std::string& config_path, const ChunkOverrides& overrides);

int cmd_chunk(const ChunkRequest& request, std::ostream& out, std::ostream& err);

struct EvalRequest {
    std::string document;
    std::vector<std::string> predictions;
    std::vector<std::string> names;  // one per prediction; default: file stem
    std::string truth;               // optional
    std::string out;                 // table; empty = stdout
    std::string csv;                 // optional
    std::string config_path;         // provider and layout settings
};

int cmd_eval(const EvalRequest& request, std::ostream& out, std::ostream& err);

struct GenRequest {
    SyntheticConfig synthetic;
    std::string out_dir;
};

/// Writes <doc_id>.json and <doc_id>.truth.json per generated document.
int cmd_gen_synthetic(const GenRequest& request, std::ostream& out, std::ostream& err);

struct BenchRequest {
    std::string corpus_dir;                    // documents with optional .truth.json siblings
    std::optional<SyntheticConfig> synthetic;  // used when corpus_dir is empty
    std::vector<std::string> methods;
    std::string config_path;
    ChunkOverrides overrides;
    std::string out;  // table; empty = stdout
    std::string csv;  // per-method means
    std::string per_document_csv;
};

int cmd_bench(const BenchRequest& request, std::ostream& out, std::ostream& err);

/// Writes via a temporary sibling file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace s2chunk
