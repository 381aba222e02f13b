#include "s2chunk/baselines.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace s2chunk {

void validate(const FixedSizeParams& params) {
    if (params.size < 1) {
        throw std::invalid_argument("fixed-size chunk size must be at least 1");
    }
    if (params.overlap >= params.size) {
        throw std::invalid_argument("fixed-size overlap must be smaller than the chunk size");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> fixed_size_slices(std::size_t n_tokens,
                                                                   const FixedSizeParams& params) {
    validate(params);
    const std::size_t s = params.size;
    const std::size_t o = params.overlap;
    std::vector<std::pair<std::size_t, std::size_t>> slices;
    if (n_tokens == 0) {
        return slices;
    }
    if (o == 0) {
        for (std::size_t i = 0; i * s < n_tokens; ++i) {
            slices.emplace_back(i * s, std::min((i + 1) * s, n_tokens));
        }
        return slices;
    }
    const std::size_t stride = s - o;
    std::size_t covered = 0;
    if (n_tokens >= s) {
        const std::size_t last = (n_tokens - s) / stride;
        for (std::size_t i = 0; i <= last; ++i) {
            slices.emplace_back(i * stride, i * stride + s);
        }
        covered = last * stride + s;
    }
    if (covered < n_tokens) {
        slices.emplace_back(slices.size() * stride, n_tokens);
    }
    return slices;
}

std::vector<std::vector<std::string>> fixed_size_chunk(std::span<const std::string> tokens,
                                                       const FixedSizeParams& params) {
    std::vector<std::vector<std::string>> out;
    for (auto [begin, end] : fixed_size_slices(tokens.size(), params)) {
        out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                         tokens.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::vector<std::string> recursive_chunk(std::string_view text, const SeparatorHierarchy& separators,
                                         std::size_t budget) {
    std::vector<std::string> out;
    for (auto& piece : split_text(text, separators, budget)) {
        out.push_back(std::move(piece.text));
    }
    return out;
}

std::vector<std::vector<std::size_t>> semantic_chunk(std::span<const std::string> segments,
                                                     EmbeddingService& service,
                                                     const SemanticParams& params) {
    std::vector<std::vector<std::size_t>> groups;
    if (segments.empty()) {
        return groups;
    }
    const auto vectors = service.embed(segments);
    groups.push_back({0});
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (cosine_similarity(vectors[i - 1], vectors[i]) < params.threshold) {
            groups.emplace_back();
        }
        groups.back().push_back(i);
    }
    return groups;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        std::size_t cut = std::string_view::npos;
        if (c == '\n') {
            cut = i + 1;
        } else if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() && text[i + 1] == ' ') {
            cut = i + 2;
        }
        if (cut != std::string_view::npos) {
            out.emplace_back(text.substr(begin, cut - begin));
            begin = cut;
            i = cut - 1;
        }
    }
    if (begin < text.size()) {
        out.emplace_back(text.substr(begin));
    }
    return out;
}

DocumentText document_text(const Document& document, const LayoutConfig& layout) {
    DocumentText dt;
    dt.order = reading_order_indices(document, layout);
    dt.region_begin.assign(document.size(), 0);
    for (std::size_t k = 0; k < dt.order.size(); ++k) {
        const std::size_t r = dt.order[k];
        if (k > 0) {
            dt.text += "\n\n";
        }
        dt.region_begin[r] = dt.text.size();
        const std::string& text = document.region(r).text;
        for (auto [b, e] : token_spans(text)) {
            dt.token_spans.emplace_back(dt.text.size() + b, dt.text.size() + e);
            dt.token_owner.push_back(r);
        }
        dt.text += text;
    }
    return dt;
}

std::vector<Chunk> chunks_from_token_ranges(const DocumentText& doc_text, const Document& document,
                                            std::span<const TokenRange> ranges) {
    std::vector<Chunk> chunks;
    if (ranges.empty()) {
        // No tokens at all: one chunk holding every region.
        Chunk c;
        c.chunk_id = "c0";
        std::vector<std::string_view> texts;
        for (std::size_t r : doc_text.order) {
            c.region_ids.push_back(document.region(r).id);
            texts.push_back(document.region(r).text);
        }
        c.text = join_chunk_text(texts);
        c.token_count = count_tokens(c.text);
        chunks.push_back(std::move(c));
        return chunks;
    }

    // Regions without tokens join the chunk holding the next token in reading order.
    std::vector<std::vector<std::size_t>> attached(ranges.size());
    std::size_t next_token = 0;
    std::vector<std::size_t> first_token_of(document.size(), 0);
    for (std::size_t k = 0; k < doc_text.order.size(); ++k) {
        const std::size_t r = doc_text.order[k];
        first_token_of[r] = next_token;
        next_token += count_tokens(document.region(r).text);
    }
    for (std::size_t r : doc_text.order) {
        if (count_tokens(document.region(r).text) > 0) continue;
        const std::size_t t = first_token_of[r];
        std::size_t target = ranges.size() - 1;
        for (std::size_t c = 0; c < ranges.size(); ++c) {
            if (t >= ranges[c].begin && t < ranges[c].end) {
                target = c;
                break;
            }
        }
        attached[target].push_back(r);
    }

    std::vector<std::size_t> position(document.size());
    for (std::size_t k = 0; k < doc_text.order.size(); ++k) position[doc_text.order[k]] = k;

    for (std::size_t c = 0; c < ranges.size(); ++c) {
        const TokenRange& range = ranges[c];
        Chunk chunk;
        chunk.chunk_id = "c" + std::to_string(c);
        std::vector<std::size_t> members = attached[c];
        for (std::size_t t = range.begin; t < range.end; ++t) {
            const std::size_t owner = doc_text.token_owner[t];
            if (std::find(members.begin(), members.end(), owner) == members.end()) {
                members.push_back(owner);
            }
        }
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return position[a] < position[b]; });
        for (std::size_t r : members) chunk.region_ids.push_back(document.region(r).id);
        if (range.end > range.begin) {
            const std::size_t b = doc_text.token_spans[range.begin].first;
            const std::size_t e = doc_text.token_spans[range.end - 1].second;
            chunk.text = doc_text.text.substr(b, e - b);
        }
        chunk.token_count = count_tokens(chunk.text);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<Chunk> fixed_size_document(const Document& document, const LayoutConfig& layout,
                                       const FixedSizeParams& params) {
    const DocumentText dt = document_text(document, layout);
    std::vector<TokenRange> ranges;
    for (auto [b, e] : fixed_size_slices(dt.token_spans.size(), params)) {
        ranges.push_back({b, e});
    }
    return chunks_from_token_ranges(dt, document, ranges);
}

namespace {

// Token ranges of consecutive text pieces that tile `dt.text`. A token belongs to the piece
// containing its first byte; pieces without tokens are dropped.
std::vector<TokenRange> ranges_of_pieces(const DocumentText& dt, const std::vector<std::size_t>& piece_ends) {
    std::vector<TokenRange> ranges;
    std::size_t t = 0;
    for (std::size_t end : piece_ends) {
        const std::size_t begin_token = t;
        while (t < dt.token_spans.size() && dt.token_spans[t].first < end) ++t;
        if (t > begin_token) ranges.push_back({begin_token, t});
    }
    return ranges;
}

}  // namespace

std::vector<Chunk> recursive_document(const Document& document, const LayoutConfig& layout,
                                      const SeparatorHierarchy& separators, std::size_t budget) {
    const DocumentText dt = document_text(document, layout);
    std::vector<std::size_t> ends;
    std::size_t offset = 0;
    for (const auto& piece : split_text(dt.text, separators, budget)) {
        offset += piece.text.size();
        ends.push_back(offset);
    }
    const auto ranges = ranges_of_pieces(dt, ends);
    return chunks_from_token_ranges(dt, document, ranges);
}

std::vector<Chunk> semantic_document(const Document& document, const LayoutConfig& layout,
                                     EmbeddingService& service, const SemanticParams& params) {
    const DocumentText dt = document_text(document, layout);
    // Segments as byte ranges of dt.text, in reading order.
    std::vector<std::size_t> ends;
    std::vector<std::string> segments;
    for (std::size_t r : dt.order) {
        const std::string& text = document.region(r).text;
        const std::size_t base = dt.region_begin[r];
        if (params.segmenter == Segmenter::Region) {
            if (count_tokens(text) > 0) {
                segments.push_back(text);
                ends.push_back(base + text.size());
            }
            continue;
        }
        std::size_t offset = base;
        for (auto& sentence : split_sentences(text)) {
            offset += sentence.size();
            if (count_tokens(sentence) > 0) {
                segments.push_back(std::move(sentence));
                ends.push_back(offset);
            }
        }
    }
    const auto segment_ranges = ranges_of_pieces(dt, ends);
    const auto groups = semantic_chunk(segments, service, params);
    std::vector<TokenRange> ranges;
    for (const auto& g : groups) {
        ranges.push_back({segment_ranges[g.front()].begin, segment_ranges[g.back()].end});
    }
    return chunks_from_token_ranges(dt, document, ranges);
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

std::vector<Chunk> hybrid_baseline_document(const Document& document, const GraphConfig& graph_config,
                                            const SpectralConfig& spectral_config,
                                            EmbeddingService& service, double link_threshold) {
    GraphConfig complete = graph_config;
    complete.edge_policy = EdgePolicy::Complete;
    const DocumentGraph graph = build_graph(document, complete, service);
    const std::size_t n = graph.size();

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (graph.combined(i, j) >= link_threshold) {
                const std::size_t a = find_root(parent, i);
                const std::size_t b = find_root(parent, j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    ClusterAssignment assignment;
    std::map<std::size_t, std::size_t> label_of_root;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find_root(parent, i);
        auto [it, fresh] = label_of_root.try_emplace(root, label_of_root.size());
        assignment.labels.push_back(it->second);
    }
    assignment.k = label_of_root.size();
    const auto nodes = pack_nodes(graph, document);
    return split_clusters_by_token_length(assignment, nodes, spectral_config.max_token_length,
                                          spectral_config.separators);
}

}  // namespace s2chunk
