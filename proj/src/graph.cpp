#include "s2chunk/graph.hpp"

#include "s2chunk/parallel.hpp"
#include "s2chunk/tokenize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace s2chunk {

double spatial_weight(double distance) {
    if (!std::isfinite(distance) || distance < 0.0) {
        throw std::invalid_argument("spatial_weight: distance must be finite and non-negative");
    }
    return 1.0 / (1.0 + distance);
}

double semantic_weight(const EmbeddingVector& u, const EmbeddingVector& v) {
    return std::max(0.0, cosine_similarity(u, v));
}

double combined_weight(double spatial, double semantic) {
    if (!(spatial >= 0.0 && spatial <= 1.0) || !(semantic >= 0.0 && semantic <= 1.0)) {
        throw std::invalid_argument("combined_weight: inputs must lie in [0, 1]");
    }
    return (spatial + semantic) / 2.0;
}

Matrix knn_row_mask(const Matrix& weights, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("knn_k must be at least 1");
    }
    const std::size_t n = weights.rows();
    Matrix mask(n, n);
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < n; ++i) {
        cols.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) cols.push_back(j);
        }
        const std::size_t keep = std::min(k, cols.size());
        std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(keep), cols.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (weights(i, a) != weights(i, b)) return weights(i, a) > weights(i, b);
                              return a < b;
                          });
        for (std::size_t c = 0; c < keep; ++c) {
            mask(i, cols[c]) = 1.0;
        }
    }
    return mask;
}

DocumentGraph build_graph(const Document& document, const GraphConfig& config,
                          EmbeddingService& service) {
    DocumentGraph g;
    g.region_index = reading_order_indices(document, config.layout);
    const std::size_t n = g.region_index.size();

    std::vector<std::string> texts;
    std::vector<std::size_t> embedded_nodes;
    g.node_ids.reserve(n);
    g.token_counts.reserve(n);
    for (std::size_t node = 0; node < n; ++node) {
        const Region& r = document.region(g.region_index[node]);
        g.node_ids.push_back(r.id);
        g.token_counts.push_back(count_tokens(r.text));
        if (g.token_counts.back() > 0) {
            texts.push_back(r.text);
            embedded_nodes.push_back(node);
        }
    }
    // Regions without text get the zero vector and thus semantic weight 0 to everything.
    g.embeddings.assign(n, EmbeddingVector::zero(service.dimension()));
    auto vectors = service.embed(texts);
    for (std::size_t e = 0; e < embedded_nodes.size(); ++e) {
        g.embeddings[embedded_nodes[e]] = std::move(vectors[e]);
    }

    const PageFrame frame(document, config.layout);
    g.spatial = Matrix(n, n);
    g.semantic = Matrix(n, n);
    g.combined = Matrix(n, n);
    parallel_for(n, config.threads, [&](std::size_t i) {
        const Region& ri = document.region(g.region_index[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const Region& rj = document.region(g.region_index[j]);
            const double ws = spatial_weight(frame.distance(ri, rj));
            const double wsem = semantic_weight(g.embeddings[i], g.embeddings[j]);
            const double wc = combined_weight(ws, wsem);
            g.spatial(i, j) = g.spatial(j, i) = ws;
            g.semantic(i, j) = g.semantic(j, i) = wsem;
            g.combined(i, j) = g.combined(j, i) = wc;
        }
    });

    const bool knn = config.edge_policy == EdgePolicy::Knn ||
                     (config.edge_policy == EdgePolicy::Auto && n > kAutoCompleteLimit);
    if (knn) {
        const Matrix mask = knn_row_mask(g.combined, config.knn_k);
        // max(W, W^T) of the row-pruned matrix: keep an edge chosen by either endpoint.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (mask(i, j) == 0.0 && mask(j, i) == 0.0) {
                    g.combined(i, j) = g.combined(j, i) = 0.0;
                }
            }
        }
    }
    return g;
}

DocumentGraph build_graph(const Document& document, const GraphConfig& config) {
    EmbeddingService service(config.provider);
    return build_graph(document, config, service);
}

void write_matrix_market(std::ostream& out, const Matrix& weights) {
    const std::size_t n = weights.rows();
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (weights(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << n << ' ' << n << ' ' << nnz << '\n';
    char buf[64];
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = j + 1; i < n; ++i) {
            if (weights(i, j) != 0.0) {
                std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i + 1, j + 1, weights(i, j));
                out << buf;
            }
        }
    }
}

}  // namespace s2chunk
