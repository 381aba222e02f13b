#include "s2chunk/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

namespace s2chunk {

namespace {

constexpr double kPageWidth = 612.0;
constexpr double kPageHeight = 792.0;
constexpr double kMarginX = 54.0;
constexpr double kMarginY = 72.0;
constexpr double kColumnGap = 18.0;
constexpr double kLineHeight = 12.0;
constexpr double kGapWithinGroup = 8.0;
constexpr double kGapBetweenGroups = 30.0;
constexpr std::size_t kThemes = 16;
constexpr std::size_t kWordsPerTheme = 48;
constexpr std::size_t kMaxParagraphTokens = 180;
constexpr std::size_t kHeadingVocabulary = 6;

const std::array<const char*, 14> kStopwords = {"the", "of",  "and", "to", "in",   "a",    "is",
                                                "that", "for", "with", "as", "on", "by", "from"};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Thin wrapper so results do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

const std::vector<std::vector<std::string>>& theme_vocabularies() {
    static const std::vector<std::vector<std::string>> themes = [] {
        static const std::array<const char*, 24> syllables = {"ka", "lo", "mi", "ne", "ro", "su", "ta", "vi",
                                                              "zo", "pe", "da", "fu", "gi", "ha", "ju", "ke",
                                                              "li", "mo", "nu", "pi", "ra", "se", "to", "vu"};
        Rng rng(0x5eedULL);
        std::set<std::string> used;
        std::vector<std::vector<std::string>> out(kThemes);
        for (auto& words : out) {
            while (words.size() < kWordsPerTheme) {
                std::string w;
                const std::size_t n = rng.between(2, 4);
                for (std::size_t s = 0; s < n; ++s) w += syllables[rng.below(syllables.size())];
                if (used.insert(w).second) words.push_back(w);
            }
        }
        return out;
    }();
    return themes;
}

std::string capitalized(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
}

// Zipf-distributed rank (exponent 1) over a theme's vocabulary, so a few key terms recur.
std::size_t zipf_rank(Rng& rng, std::size_t n) {
    static const std::vector<double> cumulative = [] {
        std::vector<double> c(kWordsPerTheme);
        double sum = 0.0;
        for (std::size_t r = 0; r < kWordsPerTheme; ++r) c[r] = (sum += 1.0 / static_cast<double>(r + 1));
        for (auto& v : c) v /= sum;
        return c;
    }();
    const double u = rng.unit() * cumulative[n - 1];
    return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.begin() + static_cast<std::ptrdiff_t>(n), u) -
                                    cumulative.begin());
}

std::string theme_word(Rng& rng, std::size_t theme, std::size_t top = kWordsPerTheme) {
    const auto& words = theme_vocabularies()[theme];
    return words[std::min(zipf_rank(rng, top), words.size() - 1)];
}

// Content words come from the section's theme, or with probability `shared` from the
// document-wide theme.
struct Voice {
    std::size_t theme = 0;
    std::size_t domain = 0;
    double shared = 0.0;
};

std::string content_word(Rng& rng, const Voice& voice) {
    return theme_word(rng, rng.unit() < voice.shared ? voice.domain : voice.theme);
}

// Sentences of themed words and shared stopwords, exactly `tokens` tokens long.
std::string prose(Rng& rng, const Voice& voice, std::size_t tokens) {
    std::string text;
    std::size_t left_in_sentence = 0;
    for (std::size_t t = 0; t < tokens; ++t) {
        const bool starts = left_in_sentence == 0;
        if (starts) left_in_sentence = rng.between(8, 16);
        std::string w = rng.unit() < 0.35 ? kStopwords[rng.below(kStopwords.size())] : content_word(rng, voice);
        if (starts) w = capitalized(w);
        if (t > 0) text += ' ';
        text += w;
        --left_in_sentence;
        if (left_in_sentence == 0 || t + 1 == tokens) {
            text += '.';
            left_in_sentence = 0;
        }
    }
    return text;
}

std::string heading(Rng& rng, std::size_t theme, std::size_t tokens) {
    std::string text;
    for (std::size_t t = 0; t < tokens; ++t) {
        if (t > 0) text += ' ';
        text += capitalized(theme_word(rng, theme, kHeadingVocabulary));
    }
    return text;
}

struct Geometry {
    std::size_t columns = 1;
    double column_width = 0.0;
    std::size_t words_per_line = 16;
};

Geometry geometry_of(LayoutProfile profile) {
    Geometry g;
    g.columns = profile == LayoutProfile::TwoColumn ? 2 : 1;
    const double usable = kPageWidth - 2.0 * kMarginX;
    g.column_width = g.columns == 1 ? usable : (usable - kColumnGap) / 2.0;
    g.words_per_line = g.columns == 1 ? 16 : 8;
    return g;
}

// Flows boxes down columns and pages.
class Cursor {
public:
    explicit Cursor(Geometry geometry) : geometry_(geometry) {}

    std::pair<std::size_t, BBox> place(double width, double height, double gap) {
        double y = fresh_ ? y_ : y_ + gap;
        if (!fresh_ && y + height > kPageHeight - kMarginY) {
            advance();
            y = y_;
        }
        const double column_x =
            kMarginX + static_cast<double>(column_) * (geometry_.column_width + kColumnGap);
        const double x0 = column_x + (geometry_.column_width - width) / 2.0;
        BBox box{x0, y, x0 + width, y + height};
        y_ = y + height;
        fresh_ = false;
        return {page_, box};
    }

    std::size_t pages() const { return page_ + 1; }

private:
    void advance() {
        if (++column_ == geometry_.columns) {
            column_ = 0;
            ++page_;
        }
        y_ = kMarginY;
        fresh_ = true;
    }

    Geometry geometry_;
    std::size_t page_ = 0;
    std::size_t column_ = 0;
    double y_ = kMarginY;
    bool fresh_ = true;
};

double text_height(std::size_t tokens, const Geometry& g) {
    const std::size_t lines = std::max<std::size_t>(1, (tokens + g.words_per_line - 1) / g.words_per_line);
    return static_cast<double>(lines) * kLineHeight + 2.0;
}

// Splits `total` into `parts` positive sizes, each within about 30% of the mean.
std::vector<std::size_t> split_sizes(Rng& rng, std::size_t total, std::size_t parts) {
    std::vector<double> weights(parts);
    double sum = 0.0;
    for (auto& w : weights) sum += (w = rng.uniform(0.7, 1.3));
    std::vector<std::size_t> sizes(parts);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i + 1 < parts; ++i) {
        sizes[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(total * weights[i] / sum)));
        assigned += sizes[i];
    }
    sizes.back() = total - assigned;
    return sizes;
}

}  // namespace

std::string profile_name(LayoutProfile profile) {
    switch (profile) {
        case LayoutProfile::SingleColumn: return "single-column";
        case LayoutProfile::TwoColumn: return "two-column";
        case LayoutProfile::FigureCaption: return "figure-caption";
        case LayoutProfile::Mixed: return "mixed";
    }
    return "mixed";
}

std::optional<LayoutProfile> parse_profile(std::string_view name) {
    for (auto p : {LayoutProfile::SingleColumn, LayoutProfile::TwoColumn, LayoutProfile::FigureCaption,
                   LayoutProfile::Mixed}) {
        if (profile_name(p) == name) return p;
    }
    return std::nullopt;
}

void validate(const SyntheticConfig& config) {
    if (config.n_docs == 0) throw std::invalid_argument("n_docs must be at least 1");
    if (config.group_tokens < 32) throw std::invalid_argument("group_tokens must be at least 32");
    if (!(config.shared_vocabulary >= 0.0 && config.shared_vocabulary <= 1.0)) {
        throw std::invalid_argument("shared_vocabulary must lie in [0, 1]");
    }
    if (config.min_groups == 0 || config.min_groups > config.max_groups || config.max_groups > 9) {
        throw std::invalid_argument("group range must satisfy 1 <= min_groups <= max_groups <= 9");
    }
}

SyntheticDocument generate_document(const SyntheticConfig& config, std::size_t index) {
    validate(config);
    Rng rng(splitmix(config.seed ^ splitmix(index + 1)));

    LayoutProfile profile = config.profile;
    if (profile == LayoutProfile::Mixed) {
        static constexpr std::array<LayoutProfile, 3> cycle = {
            LayoutProfile::SingleColumn, LayoutProfile::TwoColumn, LayoutProfile::FigureCaption};
        profile = cycle[index % cycle.size()];
    }
    const Geometry geo = geometry_of(profile);
    Cursor cursor(geo);

    std::vector<std::size_t> themes(kThemes);
    for (std::size_t t = 0; t < kThemes; ++t) themes[t] = t;
    rng.shuffle(themes);

    const std::size_t n_groups = rng.between(config.min_groups, config.max_groups);
    std::vector<Region> regions;
    GroundTruth truth;
    std::size_t figure_number = 0;

    auto add = [&](std::string text, std::string label, double width, double height, double gap,
                   const std::string& topic) {
        auto [page, box] = cursor.place(width, height, gap);
        Region r;
        r.id = "r" + std::to_string(regions.size());
        r.page_index = page;
        r.bbox = box;
        r.text = std::move(text);
        r.label = std::move(label);
        truth.assignment[r.id] = topic;
        regions.push_back(std::move(r));
    };

    for (std::size_t g = 0; g < n_groups; ++g) {
        const std::size_t theme = themes[g];
        const Voice voice{theme, themes[kThemes - 1], config.shared_vocabulary};
        const std::string topic = "topic-" + std::to_string(g);
        const auto budget = static_cast<double>(config.group_tokens);
        std::size_t remaining = static_cast<std::size_t>(std::ceil(budget * rng.uniform(0.9, 1.0)));
        double gap = g == 0 ? 0.0 : kGapBetweenGroups;

        const std::size_t heading_tokens = rng.between(2, 5);
        add(heading(rng, theme, heading_tokens), "title", geo.column_width,
            text_height(heading_tokens, geo) + 4.0, gap, topic);
        remaining -= heading_tokens;
        gap = kGapWithinGroup;

        if (profile == LayoutProfile::FigureCaption) {
            const std::size_t caption_tokens = std::min<std::size_t>(rng.between(10, 24), remaining / 3);
            add("", "figure", geo.column_width * rng.uniform(0.6, 0.9), rng.uniform(120.0, 200.0), gap, topic);
            ++figure_number;
            std::string caption = "Figure " + std::to_string(figure_number) + ". " +
                                  prose(rng, voice, caption_tokens - 2);
            add(std::move(caption), "caption", geo.column_width, text_height(caption_tokens, geo), 4.0, topic);
            remaining -= caption_tokens;
        }

        const std::size_t parts =
            std::max<std::size_t>(2, (remaining + kMaxParagraphTokens - 1) / kMaxParagraphTokens) + rng.below(2);
        for (std::size_t tokens : split_sizes(rng, remaining, parts)) {
            add(prose(rng, voice, tokens), "paragraph", geo.column_width, text_height(tokens, geo), gap, topic);
        }
    }

    std::vector<Page> pages;
    for (std::size_t p = 0; p < cursor.pages(); ++p) pages.push_back({p, kPageWidth, kPageHeight});

    char id[64];
    std::snprintf(id, sizeof id, "synth-s%llu-%04zu", static_cast<unsigned long long>(config.seed), index);
    truth.doc_id = id;
    SyntheticDocument out{Document(id, std::move(pages), std::move(regions)), std::move(truth), profile};
    return out;
}

std::vector<SyntheticDocument> generate_corpus(const SyntheticConfig& config) {
    validate(config);
    std::vector<SyntheticDocument> docs;
    docs.reserve(config.n_docs);
    for (std::size_t i = 0; i < config.n_docs; ++i) docs.push_back(generate_document(config, i));
    return docs;
}

}  // namespace s2chunk
