#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace s2chunk {

/// Axis-aligned box in page coordinates. Origin top-left, y grows downward.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }

    bool operator==(const BBox&) const = default;
};

struct Region {
    std::string id;
    std::size_t page_index = 0;
    BBox bbox;
    std::string text;  // may be empty (figures)
    std::optional<std::string> label;

    bool operator==(const Region&) const = default;
};

struct Page {
    std::size_t index = 0;
    double width = 0.0;
    double height = 0.0;

    bool operator==(const Page&) const = default;
};

/// Pages and regions of one document. Regions keep file order; reading order is computed by layout.
class Document {
public:
    Document() = default;
    Document(std::string doc_id, std::vector<Page> pages, std::vector<Region> regions);

    const std::string& doc_id() const { return doc_id_; }
    const std::vector<Page>& pages() const { return pages_; }
    const std::vector<Region>& regions() const { return regions_; }
    const Region& region(std::size_t i) const { return regions_.at(i); }
    std::size_t size() const { return regions_.size(); }

    std::optional<std::size_t> index_of(std::string_view region_id) const;

    /// Maps a chunk region reference back to a region index. Accepts plain ids and
    /// the "<id>#<part>" ids produced when an oversize region is split.
    std::optional<std::size_t> resolve(std::string_view region_ref) const;

    bool operator==(const Document& other) const {
        return doc_id_ == other.doc_id_ && pages_ == other.pages_ && regions_ == other.regions_;
    }

private:
    std::string doc_id_;
    std::vector<Page> pages_;
    std::vector<Region> regions_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Throws ValidationError on the first violated invariant. Called by the Document constructor.
void validate(const std::string& doc_id, const std::vector<Page>& pages,
              const std::vector<Region>& regions);

struct Chunk {
    std::string chunk_id;
    std::vector<std::string> region_ids;  // reading order
    std::string text;                     // region texts joined by '\n'
    std::size_t token_count = 0;

    bool operator==(const Chunk&) const = default;
};

struct ChunkSet {
    std::string doc_id;
    std::vector<Chunk> chunks;

    bool operator==(const ChunkSet&) const = default;
};

struct GroundTruth {
    std::string doc_id;
    std::map<std::string, std::string> assignment;  // region id -> truth label

    bool operator==(const GroundTruth&) const = default;
};

/// Id given to part `part` of a region that was split to fit the token budget.
std::string part_region_id(std::string_view region_id, std::size_t part);

/// Joins texts with a single newline, the chunk text convention.
std::string join_chunk_text(const std::vector<std::string_view>& texts);

Document parse_document(std::string_view payload);
std::string serialize_document(const Document& document);

/// Parses and validates (see validate(const ChunkSet&)).
ChunkSet parse_chunks(std::string_view payload);
std::string serialize_chunks(const ChunkSet& chunks);

/// Throws ValidationError for a chunk with no regions, a repeated region id, or a
/// token_count that differs from count_tokens(text).
void validate(const ChunkSet& chunks);

GroundTruth parse_ground_truth(std::string_view payload);
std::string serialize_ground_truth(const GroundTruth& truth);

/// Checks that every truth key names a region of the document.
void validate_ground_truth(const GroundTruth& truth, const Document& document);

}  // namespace s2chunk
