#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace s2chunk {

/// Number of maximal non-whitespace runs. 0 for empty or whitespace-only text.
std::size_t count_tokens(std::string_view text);

/// Byte ranges [begin, end) of each whitespace-delimited token, in order.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text);

bool is_token_space(char c);

/// Pluggable counter for model-specific tokenizers. Must satisfy
/// count(a + b) <= count(a) + count(b) for the split bound to hold.
using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Ordered separators, most significant first.
class SeparatorHierarchy {
public:
    /// Paragraph break, newline, sentence terminator, space.
    SeparatorHierarchy();
    explicit SeparatorHierarchy(std::vector<std::string> separators);

    const std::vector<std::string>& separators() const { return separators_; }
    std::size_t size() const { return separators_.size(); }
    const std::string& operator[](std::size_t i) const { return separators_[i]; }

private:
    std::vector<std::string> separators_;
};

struct TextPiece {
    std::string text;
    std::size_t tokens = 0;
    /// Set when the piece exceeds the budget but no separator can break it further.
    bool oversize = false;
};

/// Recursive separator splitting.
///
/// The text is cut after every occurrence of the most significant separator that
/// occurs strictly inside it; each separator stays attached to the end of the
/// piece on its left, so concatenating the returned pieces reproduces `text`
/// byte-for-byte. Adjacent pieces are then packed left-to-right while the packed
/// token count stays within `max_tokens`; a piece that is still too large on its
/// own is split again with the remaining, less significant separators.
std::vector<TextPiece> split_text(std::string_view text, const SeparatorHierarchy& separators,
                                  std::size_t max_tokens, const TokenCounter& counter = {});

}  // namespace s2chunk
