#pragma once

#include "s2chunk/doc_model.hpp"
#include "s2chunk/eigen.hpp"
#include "s2chunk/graph.hpp"
#include "s2chunk/matrix.hpp"
#include "s2chunk/tokenize.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace s2chunk {

/// labels[i] in [0, k) for node i; every label is used at least once.
struct ClusterAssignment {
    std::vector<std::size_t> labels;
    std::size_t k = 0;

    bool operator==(const ClusterAssignment&) const = default;
};

enum class SplitStrategy {
    GreedyPacking,  // pack each cluster's regions in reading order
    Recluster,      // re-run spectral clustering on oversize clusters first
};

struct SpectralConfig {
    std::size_t max_token_length = 512;
    std::uint64_t seed = 0;
    double eig_tolerance = 1e-10;
    int max_jacobi_sweeps = 100;
    int kmeans_max_iters = 300;
    int kmeans_restarts = 8;
    SplitStrategy split = SplitStrategy::GreedyPacking;
    SeparatorHierarchy separators;
};

/// Throws std::invalid_argument on out-of-range settings.
void validate(const SpectralConfig& config);

/// clamp(ceil(sum / max_token_length), 1, n). The affinity matrix does not enter this rule.
std::size_t calculate_n_clusters(std::span<const std::size_t> token_counts,
                                 std::size_t max_token_length);

/// I - D^-1/2 W D^-1/2. Isolated nodes get a unit diagonal and zero row.
Matrix normalized_laplacian(const Matrix& weights);

/// Rows of the eigenvectors for the k smallest eigenvalues, each row L2-normalized.
Matrix spectral_embed(const Matrix& laplacian, std::size_t k, const SpectralConfig& config,
                      std::vector<double>* eigenvalues = nullptr);

/// Seeded k-means: farthest-point initialization, best of `kmeans_restarts` by
/// within-cluster sum of squares. Labels are renumbered by first appearance.
ClusterAssignment kmeans(const Matrix& points, std::size_t k, const SpectralConfig& config);

/// normalized_laplacian -> spectral_embed -> kmeans.
ClusterAssignment spectral_clustering(const Matrix& affinity, std::size_t k,
                                      const SpectralConfig& config,
                                      std::vector<double>* eigenvalues = nullptr);

/// A graph node as seen by the packing step.
struct PackNode {
    std::string id;
    std::string_view text;
    std::size_t tokens = 0;
};

/// Greedy reading-order packing of each cluster into chunks of at most
/// `max_token_length` tokens. `nodes` must be in reading order. A region larger than
/// the budget is cut with split_text into parts "<id>#<n>" before packing. Chunks are
/// ordered by the reading position of their first region and named "c0", "c1", ...
std::vector<Chunk> split_clusters_by_token_length(const ClusterAssignment& assignment,
                                                  std::span<const PackNode> nodes,
                                                  std::size_t max_token_length,
                                                  const SeparatorHierarchy& separators);

std::vector<PackNode> pack_nodes(const DocumentGraph& graph, const Document& document);

struct S2Result {
    DocumentGraph graph;
    ClusterAssignment clusters;      // before token splitting
    std::vector<double> eigenvalues;  // of the Laplacian, ascending
    std::vector<Chunk> chunks;
};

/// Full pipeline: graph, cluster count, spectral clustering, token-bounded splitting.
S2Result run_s2(const Document& document, const GraphConfig& graph_config,
                const SpectralConfig& spectral_config, EmbeddingService& service);

std::vector<Chunk> s2_chunk(const Document& document, const GraphConfig& graph_config,
                            const SpectralConfig& spectral_config);

}  // namespace s2chunk
