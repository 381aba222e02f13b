#pragma once

#include "s2chunk/doc_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s2chunk {

enum class LayoutProfile { SingleColumn, TwoColumn, FigureCaption, Mixed };

std::string profile_name(LayoutProfile profile);
/// Accepts "single-column", "two-column", "figure-caption" and "mixed".
std::optional<LayoutProfile> parse_profile(std::string_view name);

struct SyntheticConfig {
    std::uint64_t seed = 0;
    std::size_t n_docs = 1;
    LayoutProfile profile = LayoutProfile::Mixed;
    /// Token budget the topic groups are sized against. Each group holds between 90% and
    /// 100% of it, so ceil(total / budget) equals the number of groups.
    std::size_t group_tokens = 512;
    std::size_t min_groups = 2;
    std::size_t max_groups = 6;
    /// Fraction of content words drawn from one document-wide theme instead of the
    /// section's own theme. Higher values make sections harder to tell apart by wording.
    double shared_vocabulary = 0.0;
};

/// Throws std::invalid_argument for n_docs == 0, group_tokens < 32, a bad group range or a
/// shared_vocabulary outside [0, 1].
void validate(const SyntheticConfig& config);

struct SyntheticDocument {
    Document document;
    GroundTruth truth;
    LayoutProfile profile = LayoutProfile::SingleColumn;
};

/// Document `index` of the corpus described by `config`. Depends only on (seed, index,
/// profile, sizes), so a corpus can be generated in any order or in parallel.
SyntheticDocument generate_document(const SyntheticConfig& config, std::size_t index);

std::vector<SyntheticDocument> generate_corpus(const SyntheticConfig& config);

}  // namespace s2chunk
