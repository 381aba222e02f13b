#pragma once

#include "s2chunk/doc_model.hpp"
#include "s2chunk/embed.hpp"
#include "s2chunk/layout.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace s2chunk {

/// Mean over chunks of the mean clamped cosine similarity over unordered region pairs.
/// A chunk with a single region scores 1.0. Chunks list region indices.
double cohesion_score(std::span<const std::vector<std::size_t>> chunks,
                      std::span<const EmbeddingVector> embeddings);

/// Same with region ids; throws std::invalid_argument naming a region without an embedding.
double cohesion_score(std::span<const Chunk> chunks,
                      const std::map<std::string, EmbeddingVector>& embeddings);

/// Mean over chunks of the mean 1/(1+d) over unordered region pairs; singletons score 1.0.
double layout_consistency_score(std::span<const std::vector<std::size_t>> chunks,
                                const Document& document, const LayoutConfig& layout);

double layout_consistency_score(std::span<const Chunk> chunks, const Document& document,
                                const LayoutConfig& layout);

/// (1/N) * sum over predicted clusters of the largest overlap with one truth label.
double purity(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

/// 2 I(X;Y) / (H(X) + H(Y)) with natural logs. 1.0 when both partitions are trivial,
/// 0.0 when exactly one is.
double nmi(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

/// String-labelled forms. Throw MismatchError unless both cover the same region ids.
double purity(const std::map<std::string, std::string>& predicted,
              const std::map<std::string, std::string>& truth);
double nmi(const std::map<std::string, std::string>& predicted,
           const std::map<std::string, std::string>& truth);

/// Tokens each listed region contributes to `chunk`, recovered by aligning the chunk's
/// tokens against the listed regions' token sequences. Entries follow region_ids
/// order and hold document region indices. Throws MismatchError when the text cannot
/// be explained by the listed regions.
std::vector<std::pair<std::size_t, std::size_t>> chunk_token_attribution(const Chunk& chunk,
                                                                         const Document& document);

/// Region -> chunk index by majority token ownership (ties: earliest chunk). Regions
/// without tokens go to the first chunk listing them. Throws MismatchError if a region
/// is never listed or a chunk names an unknown region.
std::vector<std::size_t> region_assignment(std::span<const Chunk> chunks, const Document& document);

/// Groups of region indices (one per non-empty chunk index) from an assignment.
std::vector<std::vector<std::size_t>> groups_of(std::span<const std::size_t> assignment);

struct DocumentScores {
    std::string doc_id;
    double cohesion = 0.0;
    double layout_consistency = 0.0;
    std::optional<double> purity;
    std::optional<double> nmi;
    std::size_t n_chunks = 0;
    double mean_chunk_regions = 0.0;
    std::size_t max_chunk_tokens = 0;
};

struct MethodReport {
    std::string method;
    std::vector<DocumentScores> documents;

    double mean_cohesion() const;
    double mean_layout_consistency() const;
    std::optional<double> mean_purity() const;
    std::optional<double> mean_nmi() const;
    double mean_chunk_regions() const;
};

struct EvaluationReport {
    std::vector<MethodReport> methods;

    /// Fixed-width comparison table, one row per method.
    std::string table() const;
    /// "method,metric,value" rows of the per-method means.
    std::string csv() const;
};

/// Scores one document's chunks. Purity and NMI are computed when `truth` is given.
DocumentScores evaluate_document(std::span<const Chunk> chunks, const Document& document,
                                 std::span<const EmbeddingVector> region_embeddings,
                                 const LayoutConfig& layout, const GroundTruth* truth);

}  // namespace s2chunk
