#include "s2chunk/tokenize.hpp"

#include <stdexcept>

namespace s2chunk {

bool is_token_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::size_t count_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_token_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_token_space(text[i])) {
            ++i;
        }
        if (i == text.size()) {
            break;
        }
        std::size_t begin = i;
        while (i < text.size() && !is_token_space(text[i])) {
            ++i;
        }
        spans.emplace_back(begin, i);
    }
    return spans;
}

SeparatorHierarchy::SeparatorHierarchy() : separators_{"\n\n", "\n", ". ", " "} {}

SeparatorHierarchy::SeparatorHierarchy(std::vector<std::string> separators)
    : separators_(std::move(separators)) {
    if (separators_.empty()) {
        throw std::invalid_argument("separator hierarchy must not be empty");
    }
    for (const auto& s : separators_) {
        if (s.empty()) {
            throw std::invalid_argument("separator must not be empty");
        }
    }
}

namespace {

// Cut positions just past each non-overlapping occurrence of `sep`, excluding the end of text.
std::vector<std::size_t> interior_cuts(std::string_view text, std::string_view sep) {
    std::vector<std::size_t> cuts;
    std::size_t pos = 0;
    while ((pos = text.find(sep, pos)) != std::string_view::npos) {
        pos += sep.size();
        if (pos >= text.size()) {
            break;
        }
        cuts.push_back(pos);
    }
    return cuts;
}

class Splitter {
public:
    Splitter(const SeparatorHierarchy& separators, std::size_t max_tokens, const TokenCounter& counter)
        : separators_(separators), max_tokens_(max_tokens), counter_(counter) {}

    void split(std::string_view text, std::size_t level, std::vector<TextPiece>& out) const {
        const std::size_t tokens = count(text);
        if (tokens <= max_tokens_) {
            out.push_back({std::string(text), tokens, false});
            return;
        }
        std::vector<std::size_t> cuts;
        while (level < separators_.size()) {
            cuts = interior_cuts(text, separators_[level]);
            if (!cuts.empty()) {
                break;
            }
            ++level;
        }
        if (cuts.empty()) {
            out.push_back({std::string(text), tokens, true});
            return;
        }
        cuts.push_back(text.size());

        // Pack consecutive siblings; `open` is the byte range of the piece being built.
        std::size_t open_begin = 0;
        std::size_t open_end = 0;
        std::size_t open_tokens = 0;
        auto flush = [&] {
            if (open_end > open_begin) {
                std::string_view piece = text.substr(open_begin, open_end - open_begin);
                out.push_back({std::string(piece), count(piece), false});
            }
            open_begin = open_end;
            open_tokens = 0;
        };

        std::size_t begin = 0;
        for (std::size_t cut : cuts) {
            std::string_view sibling = text.substr(begin, cut - begin);
            const std::size_t t = count(sibling);
            if (t > max_tokens_) {
                flush();
                split(sibling, level + 1, out);
                open_begin = open_end = cut;
            } else if (open_tokens + t <= max_tokens_) {
                open_end = cut;
                open_tokens += t;
            } else {
                flush();
                open_end = cut;
                open_tokens = t;
            }
            begin = cut;
        }
        flush();
    }

private:
    std::size_t count(std::string_view text) const {
        return counter_ ? counter_(text) : count_tokens(text);
    }

    const SeparatorHierarchy& separators_;
    std::size_t max_tokens_;
    const TokenCounter& counter_;
};

}  // namespace

std::vector<TextPiece> split_text(std::string_view text, const SeparatorHierarchy& separators,
                                  std::size_t max_tokens, const TokenCounter& counter) {
    if (max_tokens == 0) {
        throw std::invalid_argument("max_tokens must be at least 1");
    }
    std::vector<TextPiece> out;
    Splitter(separators, max_tokens, counter).split(text, 0, out);
    return out;
}

}  // namespace s2chunk
