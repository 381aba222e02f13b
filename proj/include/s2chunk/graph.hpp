#pragma once

#include "s2chunk/doc_model.hpp"
#include "s2chunk/embed.hpp"
#include "s2chunk/layout.hpp"
#include "s2chunk/matrix.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace s2chunk {

enum class EdgePolicy {
    Auto,      // complete up to kAutoCompleteLimit nodes, knn above
    Complete,
    Knn,
};

inline constexpr std::size_t kAutoCompleteLimit = 500;

struct GraphConfig {
    EdgePolicy edge_policy = EdgePolicy::Auto;
    std::size_t knn_k = 10;
    LayoutConfig layout;
    ProviderConfig provider;
    std::size_t threads = 1;
};

/// Nodes are regions in reading order. `spatial` and `semantic` hold the weight of
/// every pair; `combined` holds (spatial + semantic) / 2 on the edges kept by the
/// edge policy and 0 elsewhere. All three are symmetric with zero diagonal.
struct DocumentGraph {
    std::vector<std::string> node_ids;
    std::vector<std::size_t> region_index;  // node -> index into document.regions()
    Matrix spatial;
    Matrix semantic;
    Matrix combined;
    std::vector<std::size_t> token_counts;
    std::vector<EmbeddingVector> embeddings;

    std::size_t size() const { return node_ids.size(); }
};

/// 1 / (1 + d). Throws std::invalid_argument for negative or non-finite d.
double spatial_weight(double distance);

/// Cosine similarity clamped below at 0.
double semantic_weight(const EmbeddingVector& u, const EmbeddingVector& v);

/// Arithmetic mean. Throws std::invalid_argument unless both inputs lie in [0, 1].
double combined_weight(double spatial, double semantic);

/// Row-wise selection of each node's `k` strongest off-diagonal weights (ties: lower
/// column first), before symmetrization. mask(i, j) = 1 for kept entries.
Matrix knn_row_mask(const Matrix& weights, std::size_t k);

/// Embeds region texts through `service` and fills all weight matrices.
DocumentGraph build_graph(const Document& document, const GraphConfig& config,
                          EmbeddingService& service);

DocumentGraph build_graph(const Document& document, const GraphConfig& config);

/// Matrix Market coordinate dump (symmetric, lower triangle, 1-based) of `weights`.
void write_matrix_market(std::ostream& out, const Matrix& weights);

}  // namespace s2chunk
