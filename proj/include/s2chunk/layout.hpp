#pragma once

#include "s2chunk/doc_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace s2chunk {

struct LayoutConfig {
    /// Vertical gap inserted between stacked pages. Unset: 10% of the preceding page's height.
    std::optional<double> page_gap;
    /// Divide distances by the diagonal of the stacked-page area.
    bool normalize_distances = true;
    /// Row tolerance for reading order. Unset: 1% of the region's page height.
    std::optional<double> band_height;
};

/// Throws std::invalid_argument for a negative gap or non-positive band height.
void validate(const LayoutConfig& config);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Pages of a document stacked top to bottom into one coordinate frame.
class PageFrame {
public:
    PageFrame(const Document& document, const LayoutConfig& config);

    double page_offset(std::size_t page) const { return offsets_.at(page); }
    /// Diagonal of the stacked area: widest page by total stacked height.
    double diagonal() const { return diagonal_; }

    Point centroid(const Region& region) const;
    double distance(const Region& a, const Region& b) const;

private:
    std::vector<double> offsets_;
    double diagonal_ = 0.0;
    bool normalize_ = true;
};

Point global_centroid(const Region& region, const Document& document, const LayoutConfig& config);

/// Euclidean distance between global centroids, optionally normalized by the stacked diagonal.
double pairwise_distance(const Region& a, const Region& b, const Document& document,
                         const LayoutConfig& config);

/// Stable sort by (page, floor(global y0 / band height), x0). Returns region ids.
std::vector<std::string> reading_order(const std::vector<Region>& regions, const Document& document,
                                       const LayoutConfig& config);

/// Same ordering expressed as indices into document.regions().
std::vector<std::size_t> reading_order_indices(const Document& document, const LayoutConfig& config);

}  // namespace s2chunk
