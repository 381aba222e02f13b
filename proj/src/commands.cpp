#include "s2chunk/commands.hpp"

#include "s2chunk/error.hpp"
#include "s2chunk/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace s2chunk {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// A named input path that does not exist or cannot be read.
class InputNotFound : public Error {
public:
    using Error::Error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputNotFound("input not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int exit_code_for(std::exception_ptr error, std::ostream& err) {
    try {
        std::rethrow_exception(error);
    } catch (const InputNotFound& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ParseError& e) {
        err << "error: " << e.what();
        if (!e.field().empty()) err << " (field " << e.field() << ')';
        if (e.line() > 0) err << " (line " << e.line() << ')';
        err << '\n';
        return kExitInput;
    } catch (const ValidationError& e) {
        err << "error: invalid document: " << e.what() << '\n';
        return kExitValidation;
    } catch (const MismatchError& e) {
        err << "error: mismatch: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "error: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const TransportError& e) {
        err << "error: embedding provider (batch " << e.batch_index() << "): " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (...) {
        return exit_code_for(std::current_exception(), err);
    }
}

EdgePolicy parse_edge_policy(std::string_view name) {
    if (name == "auto") return EdgePolicy::Auto;
    if (name == "complete") return EdgePolicy::Complete;
    if (name == "knn") return EdgePolicy::Knn;
    throw std::invalid_argument("unknown edge policy \"" + std::string(name) + "\" (auto, complete, knn)");
}

ProviderKind parse_provider(std::string_view name) {
    if (name == "builtin") return ProviderKind::Builtin;
    if (name == "remote") return ProviderKind::Remote;
    throw std::invalid_argument("unknown provider \"" + std::string(name) + "\" (builtin, remote)");
}

Segmenter parse_segmenter(std::string_view name) {
    if (name == "sentence") return Segmenter::Sentence;
    if (name == "region") return Segmenter::Region;
    throw std::invalid_argument("unknown segmenter \"" + std::string(name) + "\" (sentence, region)");
}

SplitStrategy parse_split(std::string_view name) {
    if (name == "greedy") return SplitStrategy::GreedyPacking;
    if (name == "recluster") return SplitStrategy::Recluster;
    throw std::invalid_argument("unknown split strategy \"" + std::string(name) + "\" (greedy, recluster)");
}

Method require_method(std::string_view name) {
    auto m = parse_method(name);
    if (!m) {
        throw std::invalid_argument("unknown method \"" + std::string(name) +
                                    "\" (s2, fixed, recursive, semantic, hybrid-baseline)");
    }
    return *m;
}

// Reads config objects strictly: every key must be consumed by the caller.
class ConfigObject {
public:
    ConfigObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError("expected an object", 0, path_);
    }

    template <typename T>
    void get(const char* key, T& target) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            target = it->template get<T>();
        } catch (const json::exception&) {
            throw ParseError("wrong type for setting", 0, path_ + "." + key);
        }
    }

    template <typename T>
    void get_optional(const char* key, std::optional<T>& target) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (it->is_null()) {
            target.reset();
            return;
        }
        T value{};
        get(key, value);
        target = value;
    }

    template <typename Fn>
    void get_enum(const char* key, Fn&& assign) {
        std::string name;
        seen_.insert(key);
        if (!j_.contains(key)) return;
        get(key, name);
        assign(name);
    }

    std::optional<ConfigObject> child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return ConfigObject(*it, path_ + "." + key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ParseError("unknown setting", 0, path_ + "." + it.key());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string stem_of(const std::string& path) {
    std::string name = fs::path(path).filename().string();
    for (const char* suffix : {".chunks.json", ".truth.json", ".json"}) {
        const std::string s = suffix;
        if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
            return name.substr(0, name.size() - s.size());
        }
    }
    return name;
}

bool has_suffix(const std::string& name, std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void apply_overrides(RunConfig& config, const ChunkOverrides& o) {
    if (o.method) config.method = require_method(*o.method);
    if (o.max_tokens) config.spectral.max_token_length = *o.max_tokens;
    if (o.tau) config.semantic.threshold = *o.tau;
    if (o.size) config.fixed.size = *o.size;
    if (o.overlap) config.fixed.overlap = *o.overlap;
    if (o.seed) config.spectral.seed = *o.seed;
    if (o.provider) config.graph.provider.kind = parse_provider(*o.provider);
    if (o.edge_policy) config.graph.edge_policy = parse_edge_policy(*o.edge_policy);
    if (o.segmenter) config.semantic.segmenter = parse_segmenter(*o.segmenter);
    if (o.link_threshold) config.link_threshold = *o.link_threshold;
    if (o.threads) config.graph.threads = *o.threads;
    if (o.no_normalize_distances) config.graph.layout.normalize_distances = false;
}

std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

}  // namespace

std::string method_name(Method method) {
    switch (method) {
        case Method::S2: return "s2";
        case Method::Fixed: return "fixed";
        case Method::Recursive: return "recursive";
        case Method::Semantic: return "semantic";
        case Method::HybridBaseline: return "hybrid-baseline";
    }
    return "s2";
}

std::optional<Method> parse_method(std::string_view name) {
    for (auto m : {Method::S2, Method::Fixed, Method::Recursive, Method::Semantic, Method::HybridBaseline}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

void validate(const RunConfig& config) {
    validate(config.graph.layout);
    validate(config.graph.provider);
    validate(config.spectral);
    validate(config.fixed);
    if (config.graph.knn_k < 1) throw std::invalid_argument("knn_k must be at least 1");
    if (config.graph.threads < 1) throw std::invalid_argument("threads must be at least 1");
    if (!std::isfinite(config.semantic.threshold)) {
        throw std::invalid_argument("semantic threshold must be finite");
    }
    if (!std::isfinite(config.link_threshold)) throw std::invalid_argument("link threshold must be finite");
    if (config.graph.provider.kind == ProviderKind::Remote && config.graph.provider.endpoint.empty()) {
        throw std::invalid_argument("remote provider needs an endpoint (config or S2_EMBED_ENDPOINT)");
    }
}

void apply_config_json(RunConfig& config, std::string_view payload) {
    json root;
    try {
        root = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    ConfigObject top(root, "$");
    top.get("max_tokens", config.spectral.max_token_length);
    top.get("seed", config.spectral.seed);
    top.get("link_threshold", config.link_threshold);
    top.get_enum("method", [&](const std::string& s) { config.method = require_method(s); });
    {
        std::optional<std::vector<std::string>> seps;
        top.get_optional("separators", seps);
        if (seps) config.spectral.separators = SeparatorHierarchy(*seps);
    }
    if (auto layout = top.child("layout")) {
        layout->get_optional("page_gap", config.graph.layout.page_gap);
        layout->get("normalize_distances", config.graph.layout.normalize_distances);
        layout->get_optional("band_height", config.graph.layout.band_height);
        layout->finish();
    }
    if (auto graph = top.child("graph")) {
        graph->get_enum("edge_policy", [&](const std::string& s) { config.graph.edge_policy = parse_edge_policy(s); });
        graph->get("knn_k", config.graph.knn_k);
        graph->get("threads", config.graph.threads);
        graph->finish();
    }
    if (auto spectral = top.child("spectral")) {
        spectral->get("eig_tolerance", config.spectral.eig_tolerance);
        spectral->get("max_jacobi_sweeps", config.spectral.max_jacobi_sweeps);
        spectral->get("kmeans_max_iters", config.spectral.kmeans_max_iters);
        spectral->get("kmeans_restarts", config.spectral.kmeans_restarts);
        spectral->get_enum("split", [&](const std::string& s) { config.spectral.split = parse_split(s); });
        spectral->finish();
    }
    if (auto provider = top.child("provider")) {
        auto& p = config.graph.provider;
        provider->get_enum("kind", [&](const std::string& s) { p.kind = parse_provider(s); });
        provider->get("dimension", p.dimension);
        provider->get("endpoint", p.endpoint);
        provider->get("batch_size", p.batch_size);
        provider->get("cache_path", p.cache_path);
        provider->get("use_cache", p.use_cache);
        provider->get("max_parallel_requests", p.max_parallel_requests);
        provider->get("timeout_seconds", p.timeout_seconds);
        provider->finish();
    }
    if (auto fixed = top.child("fixed")) {
        fixed->get("size", config.fixed.size);
        fixed->get("overlap", config.fixed.overlap);
        fixed->finish();
    }
    if (auto semantic = top.child("semantic")) {
        semantic->get("threshold", config.semantic.threshold);
        semantic->get_enum("segmenter", [&](const std::string& s) { config.semantic.segmenter = parse_segmenter(s); });
        semantic->finish();
    }
    top.finish();
}

RunConfig resolve_run_config(const std::string& config_path, const ChunkOverrides& overrides) {
    RunConfig config;
    if (!config_path.empty()) apply_config_json(config, read_file(config_path));
    if (const char* endpoint = std::getenv("S2_EMBED_ENDPOINT"); endpoint && *endpoint) {
        config.graph.provider.endpoint = endpoint;
    }
    apply_overrides(config, overrides);
    validate(config);
    return config;
}

ChunkSet run_method(const Document& document, const RunConfig& config, EmbeddingService& service) {
    ChunkSet out;
    out.doc_id = document.doc_id();
    const LayoutConfig& layout = config.graph.layout;
    switch (config.method) {
        case Method::S2:
            out.chunks = run_s2(document, config.graph, config.spectral, service).chunks;
            break;
        case Method::Fixed:
            out.chunks = fixed_size_document(document, layout, config.fixed);
            break;
        case Method::Recursive:
            out.chunks = recursive_document(document, layout, config.spectral.separators,
                                            config.spectral.max_token_length);
            break;
        case Method::Semantic:
            out.chunks = semantic_document(document, layout, service, config.semantic);
            break;
        case Method::HybridBaseline:
            out.chunks = hybrid_baseline_document(document, config.graph, config.spectral, service,
                                                  config.link_threshold);
            break;
    }
    return out;
}

std::vector<EmbeddingVector> region_embeddings(const Document& document, EmbeddingService& service) {
    std::vector<std::string> texts;
    std::vector<std::size_t> slots;
    for (std::size_t r = 0; r < document.size(); ++r) {
        if (count_tokens(document.region(r).text) > 0) {
            texts.push_back(document.region(r).text);
            slots.push_back(r);
        }
    }
    std::vector<EmbeddingVector> out(document.size(), EmbeddingVector::zero(service.dimension()));
    auto vectors = service.embed(texts);
    for (std::size_t i = 0; i < slots.size(); ++i) out[slots[i]] = std::move(vectors[i]);
    return out;
}

EvaluationReport benchmark(const std::vector<LabeledDocument>& corpus, const std::vector<Method>& methods,
                           const RunConfig& base, std::size_t threads) {
    std::vector<std::vector<DocumentScores>> scores(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t d) {
        const auto& item = corpus[d];
        EmbeddingService service(base.graph.provider);
        const auto embeddings = region_embeddings(item.document, service);
        for (Method m : methods) {
            RunConfig config = base;
            config.method = m;
            config.graph.threads = 1;
            const ChunkSet chunks = run_method(item.document, config, service);
            scores[d].push_back(evaluate_document(chunks.chunks, item.document, embeddings, base.graph.layout,
                                                  item.truth ? &*item.truth : nullptr));
        }
    });
    EvaluationReport report;
    for (std::size_t k = 0; k < methods.size(); ++k) {
        MethodReport mr;
        mr.method = method_name(methods[k]);
        for (const auto& doc : scores) mr.documents.push_back(doc[k]);
        report.methods.push_back(std::move(mr));
    }
    return report;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path temp = target;
    temp += ".tmp";
    {
        std::ofstream f(temp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + temp.string());
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!f) throw std::runtime_error("cannot write " + temp.string());
    }
    fs::rename(temp, target);
}

int cmd_chunk(const ChunkRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (request.inputs.empty()) throw std::invalid_argument("no input documents");
        if (request.inputs.size() > 1 && !request.dump_graph.empty()) {
            throw std::invalid_argument("--dump-graph takes a single input");
        }
        if (request.inputs.size() > 1 && request.out.empty()) {
            throw std::invalid_argument("several inputs need --out <directory>");
        }
        RunConfig config = resolve_run_config(request.config_path, request.overrides);
        for (const auto& path : request.inputs) {
            if (!fs::exists(path)) throw InputNotFound("input not found: " + path);
        }

        const bool batch = request.inputs.size() > 1;
        const std::size_t doc_threads = batch ? config.graph.threads : 1;
        if (batch) config.graph.threads = 1;

        struct Result {
            ChunkSet chunks;
            double seconds = 0.0;
        };
        std::vector<Result> results(request.inputs.size());
        parallel_for(request.inputs.size(), doc_threads, [&](std::size_t i) {
            const Document document = parse_document(read_file(request.inputs[i]));
            EmbeddingService service(config.graph.provider);
            const auto start = std::chrono::steady_clock::now();
            results[i].chunks = run_method(document, config, service);
            results[i].seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (!request.dump_graph.empty()) {
                GraphConfig graph_config = config.graph;
                if (config.method == Method::HybridBaseline) graph_config.edge_policy = EdgePolicy::Complete;
                if (config.method != Method::S2 && config.method != Method::HybridBaseline) {
                    throw std::invalid_argument("--dump-graph needs a graph method (s2, hybrid-baseline)");
                }
                const DocumentGraph graph = build_graph(document, graph_config, service);
                std::ostringstream mm;
                write_matrix_market(mm, graph.combined);
                write_file_atomic(request.dump_graph, mm.str());
            }
        });

        std::ostream& summary = request.out.empty() ? err : out;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const ChunkSet& cs = results[i].chunks;
            const std::string payload = serialize_chunks(cs);
            if (request.out.empty()) {
                out << payload;
            } else if (batch) {
                write_file_atomic((fs::path(request.out) / (stem_of(request.inputs[i]) + ".chunks.json")).string(),
                                  payload);
            } else {
                write_file_atomic(request.out, payload);
            }
            std::size_t max_tokens = 0;
            for (const auto& c : cs.chunks) max_tokens = std::max(max_tokens, c.token_count);
            summary << cs.doc_id << ": method=" << method_name(config.method) << " chunks=" << cs.chunks.size()
                    << " max_tokens=" << max_tokens << " runtime=" << format_seconds(results[i].seconds) << "s\n";
        }
        return kExitOk;
    });
}

int cmd_eval(const EvalRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (request.predictions.empty()) throw std::invalid_argument("no prediction files");
        if (!request.names.empty() && request.names.size() != request.predictions.size()) {
            throw std::invalid_argument("give one --name per --predictions file");
        }
        const RunConfig config = resolve_run_config(request.config_path, {});
        const Document document = parse_document(read_file(request.document));
        std::optional<GroundTruth> truth;
        if (!request.truth.empty()) {
            truth = parse_ground_truth(read_file(request.truth));
            if (truth->doc_id != document.doc_id()) {
                throw MismatchError("truth is for \"" + truth->doc_id + "\", document is \"" +
                                    document.doc_id() + "\"");
            }
        }
        EmbeddingService service(config.graph.provider);
        const auto embeddings = region_embeddings(document, service);

        EvaluationReport report;
        for (std::size_t i = 0; i < request.predictions.size(); ++i) {
            const ChunkSet chunks = parse_chunks(read_file(request.predictions[i]));
            if (chunks.doc_id != document.doc_id()) {
                throw MismatchError("predictions are for \"" + chunks.doc_id + "\", document is \"" +
                                    document.doc_id() + "\"");
            }
            MethodReport mr;
            mr.method = request.names.empty() ? stem_of(request.predictions[i]) : request.names[i];
            mr.documents.push_back(evaluate_document(chunks.chunks, document, embeddings, config.graph.layout,
                                                     truth ? &*truth : nullptr));
            report.methods.push_back(std::move(mr));
        }
        if (request.out.empty()) {
            out << report.table();
        } else {
            write_file_atomic(request.out, report.table());
        }
        if (!request.csv.empty()) write_file_atomic(request.csv, report.csv());
        return kExitOk;
    });
}

int cmd_gen_synthetic(const GenRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(request.synthetic);
        if (request.out_dir.empty()) throw std::invalid_argument("--out <directory> is required");
        const fs::path dir(request.out_dir);
        for (std::size_t i = 0; i < request.synthetic.n_docs; ++i) {
            const SyntheticDocument doc = generate_document(request.synthetic, i);
            const std::string& id = doc.document.doc_id();
            write_file_atomic((dir / (id + ".json")).string(), serialize_document(doc.document));
            write_file_atomic((dir / (id + ".truth.json")).string(), serialize_ground_truth(doc.truth));
        }
        out << "wrote " << request.synthetic.n_docs << " documents to " << dir.string() << '\n';
        return kExitOk;
    });
}

int cmd_bench(const BenchRequest& request, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig config = resolve_run_config(request.config_path, request.overrides);
        std::vector<Method> methods;
        for (const auto& name : request.methods) methods.push_back(require_method(name));
        if (methods.empty()) {
            methods = {Method::S2, Method::Fixed, Method::Recursive, Method::Semantic};
        }

        std::vector<LabeledDocument> corpus;
        if (!request.corpus_dir.empty()) {
            if (!fs::is_directory(request.corpus_dir)) throw InputNotFound("input not found: " + request.corpus_dir);
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(request.corpus_dir)) {
                const std::string name = entry.path().filename().string();
                if (entry.is_regular_file() && has_suffix(name, ".json") && !has_suffix(name, ".truth.json") &&
                    !has_suffix(name, ".chunks.json")) {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) {
                LabeledDocument item{parse_document(read_file(file.string())), std::nullopt};
                fs::path truth_path = file.parent_path() / (stem_of(file.string()) + ".truth.json");
                if (fs::exists(truth_path)) item.truth = parse_ground_truth(read_file(truth_path.string()));
                corpus.push_back(std::move(item));
            }
            if (corpus.empty()) throw InputNotFound("input not found: no documents in " + request.corpus_dir);
        } else if (request.synthetic) {
            for (auto& doc : generate_corpus(*request.synthetic)) {
                corpus.push_back({std::move(doc.document), std::move(doc.truth)});
            }
        } else {
            throw std::invalid_argument("give --corpus <directory> or synthetic corpus settings");
        }

        const auto start = std::chrono::steady_clock::now();
        const EvaluationReport report = benchmark(corpus, methods, config, config.graph.threads);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::string table = report.table();
        if (request.out.empty()) {
            out << table;
        } else {
            write_file_atomic(request.out, table);
        }
        if (!request.csv.empty()) write_file_atomic(request.csv, report.csv());
        if (!request.per_document_csv.empty()) {
            std::ostringstream rows;
            rows << "method,doc_id,metric,value\n";
            for (const auto& m : report.methods) {
                for (const auto& d : m.documents) {
                    auto row = [&](const char* metric, double v) {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.6f", v);
                        rows << m.method << ',' << d.doc_id << ',' << metric << ',' << buf << '\n';
                    };
                    row("cohesion", d.cohesion);
                    row("layout_consistency", d.layout_consistency);
                    if (d.purity) row("purity", *d.purity);
                    if (d.nmi) row("nmi", *d.nmi);
                    row("chunks", static_cast<double>(d.n_chunks));
                }
            }
            write_file_atomic(request.per_document_csv, rows.str());
        }
        err << corpus.size() << " documents, " << methods.size() << " methods, " << format_seconds(seconds)
            << "s\n";
        return kExitOk;
    });
}

}  // namespace s2chunk
