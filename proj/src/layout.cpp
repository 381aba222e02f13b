#include "s2chunk/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace s2chunk {

namespace {

double gap_after(const Page& page, const LayoutConfig& config) {
    return config.page_gap.value_or(0.1 * page.height);
}

double band_height_for(const Page& page, const LayoutConfig& config) {
    return config.band_height.value_or(0.01 * page.height);
}

}  // namespace

void validate(const LayoutConfig& config) {
    if (config.page_gap && !(*config.page_gap >= 0.0 && std::isfinite(*config.page_gap))) {
        throw std::invalid_argument("page_gap must be a finite non-negative number");
    }
    if (config.band_height && !(*config.band_height > 0.0 && std::isfinite(*config.band_height))) {
        throw std::invalid_argument("band_height must be a finite positive number");
    }
}

PageFrame::PageFrame(const Document& document, const LayoutConfig& config)
    : normalize_(config.normalize_distances) {
    validate(config);
    const auto& pages = document.pages();
    offsets_.reserve(pages.size());
    double offset = 0.0;
    double max_width = 0.0;
    for (std::size_t p = 0; p < pages.size(); ++p) {
        offsets_.push_back(offset);
        max_width = std::max(max_width, pages[p].width);
        offset += pages[p].height;
        if (p + 1 < pages.size()) {
            offset += gap_after(pages[p], config);
        }
    }
    diagonal_ = std::hypot(max_width, offset);
}

Point PageFrame::centroid(const Region& region) const {
    const BBox& b = region.bbox;
    return Point{(b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0 + offsets_.at(region.page_index)};
}

double PageFrame::distance(const Region& a, const Region& b) const {
    const Point ca = centroid(a);
    const Point cb = centroid(b);
    const double d = std::hypot(ca.x - cb.x, ca.y - cb.y);
    return normalize_ ? d / diagonal_ : d;
}

Point global_centroid(const Region& region, const Document& document, const LayoutConfig& config) {
    return PageFrame(document, config).centroid(region);
}

double pairwise_distance(const Region& a, const Region& b, const Document& document,
                         const LayoutConfig& config) {
    return PageFrame(document, config).distance(a, b);
}

namespace {

template <typename RegionAt>
std::vector<std::size_t> banded_order(std::size_t n, RegionAt region_at, const Document& document,
                                      const LayoutConfig& config) {
    const PageFrame frame(document, config);
    struct Key {
        std::size_t page;
        double band;
        double x0;
    };
    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Region& r = region_at(i);
        const Page& page = document.pages().at(r.page_index);
        const double global_y0 = r.bbox.y0 + frame.page_offset(r.page_index);
        keys[i] = Key{r.page_index, std::floor(global_y0 / band_height_for(page, config)), r.bbox.x0};
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Key& ka = keys[a];
        const Key& kb = keys[b];
        if (ka.page != kb.page) return ka.page < kb.page;
        if (ka.band != kb.band) return ka.band < kb.band;
        return ka.x0 < kb.x0;
    });
    return order;
}

}  // namespace

std::vector<std::string> reading_order(const std::vector<Region>& regions, const Document& document,
                                       const LayoutConfig& config) {
    auto order = banded_order(
        regions.size(), [&](std::size_t i) -> const Region& { return regions[i]; }, document, config);
    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (std::size_t i : order) {
        ids.push_back(regions[i].id);
    }
    return ids;
}

std::vector<std::size_t> reading_order_indices(const Document& document, const LayoutConfig& config) {
    return banded_order(
        document.size(), [&](std::size_t i) -> const Region& { return document.region(i); }, document,
        config);
}

}  // namespace s2chunk
