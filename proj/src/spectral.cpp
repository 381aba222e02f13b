#include "s2chunk/spectral.hpp"

#include "s2chunk/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace s2chunk {

void validate(const SpectralConfig& config) {
    if (config.max_token_length < 1) {
        throw std::invalid_argument("max_token_length must be at least 1");
    }
    if (!(config.eig_tolerance > 0.0)) {
        throw std::invalid_argument("eig_tolerance must be positive");
    }
    if (config.max_jacobi_sweeps < 1 || config.kmeans_max_iters < 1 || config.kmeans_restarts < 1) {
        throw std::invalid_argument("iteration limits must be positive");
    }
}

std::size_t calculate_n_clusters(std::span<const std::size_t> token_counts,
                                 std::size_t max_token_length) {
    if (token_counts.empty()) {
        throw std::invalid_argument("calculate_n_clusters needs at least one node");
    }
    if (max_token_length == 0) {
        throw std::invalid_argument("max_token_length must be at least 1");
    }
    const std::size_t total = std::accumulate(token_counts.begin(), token_counts.end(), std::size_t{0});
    const std::size_t k = (total + max_token_length - 1) / max_token_length;
    return std::clamp<std::size_t>(k, 1, token_counts.size());
}

Matrix normalized_laplacian(const Matrix& weights) {
    const std::size_t n = weights.rows();
    if (weights.cols() != n) {
        throw std::invalid_argument("affinity matrix must be square");
    }
    if (!weights.is_symmetric(1e-12 * std::max(1.0, weights.max_abs()))) {
        throw std::invalid_argument("affinity matrix must be symmetric");
    }
    std::vector<double> inv_sqrt_degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = weights(i, j);
            if (w < 0.0 || !std::isfinite(w)) {
                throw std::invalid_argument("affinity matrix must be finite and non-negative");
            }
            degree += w;
        }
        inv_sqrt_degree[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
    }
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double scaled = weights(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];
            l(i, j) = (i == j ? 1.0 : 0.0) - scaled;
        }
    }
    return l;
}

Matrix spectral_embed(const Matrix& laplacian, std::size_t k, const SpectralConfig& config,
                      std::vector<double>* eigenvalues) {
    const std::size_t n = laplacian.rows();
    if (k < 1 || k > n) {
        throw std::invalid_argument("spectral_embed requires 1 <= k <= n");
    }
    EigenDecomposition eig =
        symmetric_eigendecomposition(laplacian, config.eig_tolerance, config.max_jacobi_sweeps);
    if (eigenvalues) {
        *eigenvalues = eig.values;
    }
    Matrix embedding(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            embedding(i, c) = eig.vectors(i, c);
            norm += embedding(i, c) * embedding(i, c);
        }
        if (norm > 0.0) {
            const double inv = 1.0 / std::sqrt(norm);
            for (std::size_t c = 0; c < k; ++c) embedding(i, c) *= inv;
        }
    }
    return embedding;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::uint64_t restart_seed(std::uint64_t seed, std::uint64_t restart) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (restart + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct KMeansRun {
    std::vector<std::size_t> labels;
    double wcss = std::numeric_limits<double>::infinity();
};

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(point, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Moves points into empty clusters: each empty cluster takes the point farthest from its
// own centroid among clusters that can spare one (ties: lowest point index).
void fill_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& labels) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t l : labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] > 0) continue;
        std::size_t donor = labels.size();
        double far = -1.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (sizes[labels[i]] < 2) continue;
            const double d = squared_distance(points.row(i), centroids.row(labels[i]));
            if (d > far) {
                far = d;
                donor = i;
            }
        }
        --sizes[labels[donor]];
        labels[donor] = c;
        sizes[c] = 1;
        std::copy(points.row(donor).begin(), points.row(donor).end(), centroids.row(c).begin());
    }
}

void update_centroids(const Matrix& points, const std::vector<std::size_t>& labels, Matrix& centroids) {
    const std::size_t k = centroids.rows();
    const std::size_t dim = points.cols();
    Matrix sums(k, dim);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++sizes[labels[i]];
        auto src = points.row(i);
        auto dst = sums.row(labels[i]);
        for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d) centroids(c, d) = sums(c, d) / static_cast<double>(sizes[c]);
    }
}

KMeansRun lloyd(const Matrix& points, std::size_t k, std::size_t start, int max_iters) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();

    // Farthest-point initialization.
    Matrix centroids(k, dim);
    std::vector<bool> chosen(n, false);
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::size_t pick = start;
    for (std::size_t c = 0; c < k; ++c) {
        chosen[pick] = true;
        std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
        std::size_t next = n;
        double far = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_d[i] = std::min(min_d[i], squared_distance(points.row(i), centroids.row(c)));
            if (!chosen[i] && min_d[i] > far) {
                far = min_d[i];
                next = i;
            }
        }
        pick = next;
    }

    KMeansRun run;
    run.labels.assign(n, 0);
    std::vector<std::size_t> previous;
    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) run.labels[i] = nearest_centroid(points.row(i), centroids);
        fill_empty_clusters(points, centroids, run.labels);
        if (run.labels == previous) break;
        previous = run.labels;
        update_centroids(points, run.labels, centroids);
    }
    update_centroids(points, run.labels, centroids);
    run.wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        run.wcss += squared_distance(points.row(i), centroids.row(run.labels[i]));
    }
    return run;
}

std::vector<std::size_t> relabel_by_first_appearance(const std::vector<std::size_t>& labels) {
    std::map<std::size_t, std::size_t> remap;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = remap.try_emplace(labels[i], remap.size());
        out[i] = it->second;
    }
    return out;
}

}  // namespace

ClusterAssignment kmeans(const Matrix& points, std::size_t k, const SpectralConfig& config) {
    const std::size_t n = points.rows();
    if (k < 1 || k > n) {
        throw std::invalid_argument("kmeans requires 1 <= k <= n");
    }
    if (k == n) {
        // Every cluster must be used, so each point is its own cluster.
        std::vector<std::size_t> labels(n);
        std::iota(labels.begin(), labels.end(), std::size_t{0});
        return ClusterAssignment{labels, k};
    }
    KMeansRun best;
    for (int r = 0; r < config.kmeans_restarts; ++r) {
        const std::size_t start = restart_seed(config.seed, static_cast<std::uint64_t>(r)) % n;
        KMeansRun run = lloyd(points, k, start, config.kmeans_max_iters);
        if (run.wcss < best.wcss) {
            best = std::move(run);
        }
    }
    return ClusterAssignment{relabel_by_first_appearance(best.labels), k};
}

ClusterAssignment spectral_clustering(const Matrix& affinity, std::size_t k,
                                      const SpectralConfig& config, std::vector<double>* eigenvalues) {
    const std::size_t n = affinity.rows();
    if (k == 1) {
        // Normalization is still checked so invalid input fails the same way for every k.
        const Matrix l = normalized_laplacian(affinity);
        if (eigenvalues) {
            *eigenvalues =
                symmetric_eigendecomposition(l, config.eig_tolerance, config.max_jacobi_sweeps).values;
        }
        return ClusterAssignment{std::vector<std::size_t>(n, 0), 1};
    }
    const Matrix embedding = spectral_embed(normalized_laplacian(affinity), k, config, eigenvalues);
    return kmeans(embedding, k, config);
}

std::vector<Chunk> split_clusters_by_token_length(const ClusterAssignment& assignment,
                                                  std::span<const PackNode> nodes,
                                                  std::size_t max_token_length,
                                                  const SeparatorHierarchy& separators) {
    if (assignment.labels.size() != nodes.size()) {
        throw std::invalid_argument("cluster assignment does not cover every node");
    }
    if (max_token_length == 0) {
        throw std::invalid_argument("max_token_length must be at least 1");
    }
    struct Unit {
        std::string id;
        std::string_view text;
        std::size_t tokens;
    };
    struct Draft {
        std::size_t first_node;
        std::size_t first_part;
        std::vector<Unit> units;
        std::size_t tokens = 0;
    };

    std::vector<std::vector<std::size_t>> members(assignment.k);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        members.at(assignment.labels[i]).push_back(i);
    }

    // split_text results must outlive the string_views held by units.
    std::vector<std::vector<TextPiece>> piece_store;
    piece_store.reserve(nodes.size());
    std::vector<Draft> drafts;
    for (const auto& cluster : members) {
        Draft open{};
        bool has_open = false;
        auto add = [&](std::size_t node, std::size_t part, Unit unit) {
            if (has_open && open.tokens + unit.tokens <= max_token_length) {
                open.tokens += unit.tokens;
                open.units.push_back(std::move(unit));
                return;
            }
            if (has_open) drafts.push_back(std::move(open));
            open = Draft{node, part, {}, unit.tokens};
            open.units.push_back(std::move(unit));
            has_open = true;
        };
        for (std::size_t node : cluster) {
            const PackNode& pn = nodes[node];
            if (pn.tokens <= max_token_length) {
                add(node, 0, Unit{pn.id, pn.text, pn.tokens});
                continue;
            }
            piece_store.push_back(split_text(pn.text, separators, max_token_length));
            const auto& pieces = piece_store.back();
            for (std::size_t p = 0; p < pieces.size(); ++p) {
                add(node, p, Unit{part_region_id(pn.id, p), pieces[p].text, pieces[p].tokens});
            }
        }
        if (has_open) drafts.push_back(std::move(open));
    }

    std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
        if (a.first_node != b.first_node) return a.first_node < b.first_node;
        return a.first_part < b.first_part;
    });

    std::vector<Chunk> chunks;
    chunks.reserve(drafts.size());
    for (std::size_t c = 0; c < drafts.size(); ++c) {
        Chunk chunk;
        chunk.chunk_id = "c" + std::to_string(c);
        std::vector<std::string_view> texts;
        for (auto& unit : drafts[c].units) {
            chunk.region_ids.push_back(std::move(unit.id));
            texts.push_back(unit.text);
        }
        chunk.text = join_chunk_text(texts);
        chunk.token_count = count_tokens(chunk.text);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<PackNode> pack_nodes(const DocumentGraph& graph, const Document& document) {
    std::vector<PackNode> nodes;
    nodes.reserve(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const Region& r = document.region(graph.region_index[i]);
        nodes.push_back(PackNode{r.id, r.text, graph.token_counts[i]});
    }
    return nodes;
}

namespace {

Matrix submatrix(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = m(idx[a], idx[b]);
    return out;
}

// Re-clusters every cluster whose token total exceeds the budget until all fit or are single nodes.
ClusterAssignment recluster_oversize(const DocumentGraph& graph, const ClusterAssignment& initial,
                                     const SpectralConfig& config) {
    std::vector<std::vector<std::size_t>> pending(initial.k);
    for (std::size_t i = 0; i < initial.labels.size(); ++i) pending[initial.labels[i]].push_back(i);

    std::vector<std::vector<std::size_t>> done;
    while (!pending.empty()) {
        std::vector<std::size_t> members = std::move(pending.back());
        pending.pop_back();
        std::vector<std::size_t> tokens;
        for (std::size_t i : members) tokens.push_back(graph.token_counts[i]);
        const std::size_t total = std::accumulate(tokens.begin(), tokens.end(), std::size_t{0});
        if (members.size() < 2 || total <= config.max_token_length) {
            done.push_back(std::move(members));
            continue;
        }
        const std::size_t k = calculate_n_clusters(tokens, config.max_token_length);
        const ClusterAssignment sub = spectral_clustering(submatrix(graph.combined, members), k, config);
        std::vector<std::vector<std::size_t>> parts(sub.k);
        for (std::size_t a = 0; a < members.size(); ++a) parts[sub.labels[a]].push_back(members[a]);
        for (auto& p : parts) pending.push_back(std::move(p));
    }

    std::vector<std::size_t> labels(initial.labels.size());
    for (std::size_t c = 0; c < done.size(); ++c)
        for (std::size_t i : done[c]) labels[i] = c;
    std::vector<std::size_t> canonical(labels.size());
    std::map<std::size_t, std::size_t> remap;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        canonical[i] = remap.try_emplace(labels[i], remap.size()).first->second;
    }
    return ClusterAssignment{canonical, done.size()};
}

}  // namespace

S2Result run_s2(const Document& document, const GraphConfig& graph_config,
                const SpectralConfig& spectral_config, EmbeddingService& service) {
    validate(spectral_config);
    S2Result result;
    result.graph = build_graph(document, graph_config, service);
    const std::size_t k =
        calculate_n_clusters(result.graph.token_counts, spectral_config.max_token_length);
    result.clusters =
        spectral_clustering(result.graph.combined, k, spectral_config, &result.eigenvalues);
    ClusterAssignment packing = result.clusters;
    if (spectral_config.split == SplitStrategy::Recluster) {
        packing = recluster_oversize(result.graph, result.clusters, spectral_config);
    }
    const auto nodes = pack_nodes(result.graph, document);
    result.chunks = split_clusters_by_token_length(packing, nodes, spectral_config.max_token_length,
                                                   spectral_config.separators);
    return result;
}

std::vector<Chunk> s2_chunk(const Document& document, const GraphConfig& graph_config,
                            const SpectralConfig& spectral_config) {
    EmbeddingService service(graph_config.provider);
    return run_s2(document, graph_config, spectral_config, service).chunks;
}

}  // namespace s2chunk
