#pragma once

#include "s2chunk/doc_model.hpp"
#include "s2chunk/embed.hpp"
#include "s2chunk/graph.hpp"
#include "s2chunk/layout.hpp"
#include "s2chunk/spectral.hpp"
#include "s2chunk/tokenize.hpp"

#include <span>
#include <string>
#include <vector>

namespace s2chunk {

struct FixedSizeParams {
    std::size_t size = 512;
    std::size_t overlap = 0;
};

/// Throws std::invalid_argument unless size >= 1 and overlap < size.
void validate(const FixedSizeParams& params);

/// Half-open token ranges. overlap == 0: [i*s, (i+1)*s) without an empty trailing slice.
/// overlap > 0: [i*(s-o), i*(s-o)+s) for i = 0..floor((n-s)/(s-o)) when n >= s, then one
/// tail slice starting at the next stride if tokens are still uncovered.
std::vector<std::pair<std::size_t, std::size_t>> fixed_size_slices(std::size_t n_tokens,
                                                                   const FixedSizeParams& params);

std::vector<std::vector<std::string>> fixed_size_chunk(std::span<const std::string> tokens,
                                                       const FixedSizeParams& params);

/// Delegates to split_text; pieces concatenate back to `text`.
std::vector<std::string> recursive_chunk(std::string_view text, const SeparatorHierarchy& separators,
                                         std::size_t budget);

enum class Segmenter { Sentence, Region };

struct SemanticParams {
    double threshold = 0.7;
    Segmenter segmenter = Segmenter::Sentence;
};

/// Groups of consecutive segment indices. A new group starts wherever the cosine
/// similarity of consecutive segments drops below the threshold.
std::vector<std::vector<std::size_t>> semantic_chunk(std::span<const std::string> segments,
                                                     EmbeddingService& service,
                                                     const SemanticParams& params);

/// Splits after ". ", "! ", "? " and line breaks; pieces concatenate back to `text`.
std::vector<std::string> split_sentences(std::string_view text);

// ---------------------------------------------------------------------------
// Document-level drivers. Baselines see the reading-order text of the document
// (region texts joined by a blank line) and their chunks are mapped back to regions.

/// Reading-order text with per-token region ownership.
struct DocumentText {
    std::string text;
    std::vector<std::pair<std::size_t, std::size_t>> token_spans;  // byte ranges
    std::vector<std::size_t> token_owner;                          // region index per token
    std::vector<std::size_t> order;                                // region indices, reading order
    std::vector<std::size_t> region_begin;                         // byte offset per region index
};

DocumentText document_text(const Document& document, const LayoutConfig& layout);

/// A baseline chunk as a token range of DocumentText.
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Converts token ranges to chunks: text is the covered substring, region_ids the owners in
/// reading order.
std::vector<Chunk> chunks_from_token_ranges(const DocumentText& doc_text, const Document& document,
                                            std::span<const TokenRange> ranges);

std::vector<Chunk> fixed_size_document(const Document& document, const LayoutConfig& layout,
                                       const FixedSizeParams& params);

std::vector<Chunk> recursive_document(const Document& document, const LayoutConfig& layout,
                                      const SeparatorHierarchy& separators, std::size_t budget);

std::vector<Chunk> semantic_document(const Document& document, const LayoutConfig& layout,
                                     EmbeddingService& service, const SemanticParams& params);

/// Same graph as S2, but clusters are the connected components of edges with
/// combined weight >= link_threshold (single linkage), then packed to the budget.
std::vector<Chunk> hybrid_baseline_document(const Document& document, const GraphConfig& graph_config,
                                            const SpectralConfig& spectral_config,
                                            EmbeddingService& service, double link_threshold);

}  // namespace s2chunk
