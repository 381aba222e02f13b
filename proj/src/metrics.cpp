#include "s2chunk/metrics.hpp"

#include "s2chunk/error.hpp"
#include "s2chunk/graph.hpp"
#include "s2chunk/tokenize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace s2chunk {

namespace {

template <typename PairScore>
double mean_intra_chunk(std::span<const std::vector<std::size_t>> chunks, PairScore score) {
    if (chunks.empty()) {
        throw std::invalid_argument("cannot score an empty chunk list");
    }
    double total = 0.0;
    for (const auto& chunk : chunks) {
        if (chunk.size() < 2) {
            total += 1.0;
            continue;
        }
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < chunk.size(); ++a) {
            for (std::size_t b = a + 1; b < chunk.size(); ++b) {
                sum += score(chunk[a], chunk[b]);
                ++pairs;
            }
        }
        total += sum / static_cast<double>(pairs);
    }
    return total / static_cast<double>(chunks.size());
}

// Distinct region indices of a chunk, part ids folded into their region.
std::vector<std::size_t> chunk_regions(const Chunk& chunk, const Document& document) {
    std::vector<std::size_t> out;
    for (const auto& id : chunk.region_ids) {
        auto idx = document.resolve(id);
        if (!idx) {
            throw MismatchError("chunk " + chunk.chunk_id + " references unknown region \"" + id + "\"");
        }
        if (std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
    }
    return out;
}

}  // namespace

double cohesion_score(std::span<const std::vector<std::size_t>> chunks,
                      std::span<const EmbeddingVector> embeddings) {
    return mean_intra_chunk(chunks, [&](std::size_t a, std::size_t b) {
        return semantic_weight(embeddings[a], embeddings[b]);
    });
}

double cohesion_score(std::span<const Chunk> chunks,
                      const std::map<std::string, EmbeddingVector>& embeddings) {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<EmbeddingVector> vectors;
    std::map<std::string, std::size_t> slot;
    for (const auto& chunk : chunks) {
        auto& group = groups.emplace_back();
        for (const auto& id : chunk.region_ids) {
            auto it = embeddings.find(id);
            if (it == embeddings.end()) {
                throw std::invalid_argument("no embedding for region \"" + id + "\"");
            }
            auto [s, fresh] = slot.try_emplace(id, vectors.size());
            if (fresh) vectors.push_back(it->second);
            if (std::find(group.begin(), group.end(), s->second) == group.end()) group.push_back(s->second);
        }
    }
    return cohesion_score(groups, vectors);
}

double layout_consistency_score(std::span<const std::vector<std::size_t>> chunks,
                                const Document& document, const LayoutConfig& layout) {
    const PageFrame frame(document, layout);
    return mean_intra_chunk(chunks, [&](std::size_t a, std::size_t b) {
        return spatial_weight(frame.distance(document.region(a), document.region(b)));
    });
}

double layout_consistency_score(std::span<const Chunk> chunks, const Document& document,
                                const LayoutConfig& layout) {
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& chunk : chunks) groups.push_back(chunk_regions(chunk, document));
    return layout_consistency_score(groups, document, layout);
}

namespace {

struct Contingency {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
    std::map<std::size_t, std::size_t> rows;  // predicted
    std::map<std::size_t, std::size_t> cols;  // truth
    std::size_t n = 0;
};

Contingency contingency(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size()) {
        throw MismatchError("partitions cover different numbers of items");
    }
    if (predicted.empty()) {
        throw std::invalid_argument("partitions must not be empty");
    }
    Contingency c;
    c.n = predicted.size();
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++c.joint[{predicted[i], truth[i]}];
        ++c.rows[predicted[i]];
        ++c.cols[truth[i]];
    }
    return c;
}

double entropy(const std::map<std::size_t, std::size_t>& counts, std::size_t n) {
    double h = 0.0;
    for (const auto& [label, count] : counts) {
        const double p = static_cast<double>(count) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

// Dense integer labels for two string labelings over the same key set.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> encode(
    const std::map<std::string, std::string>& predicted, const std::map<std::string, std::string>& truth) {
    if (predicted.size() != truth.size()) {
        throw MismatchError("predicted and truth label different region sets");
    }
    std::map<std::string, std::size_t> pcodes;
    std::map<std::string, std::size_t> tcodes;
    std::vector<std::size_t> p;
    std::vector<std::size_t> t;
    auto pit = predicted.begin();
    auto tit = truth.begin();
    for (; pit != predicted.end(); ++pit, ++tit) {
        if (pit->first != tit->first) {
            throw MismatchError("region \"" + pit->first + "\" is missing from one labeling");
        }
        p.push_back(pcodes.try_emplace(pit->second, pcodes.size()).first->second);
        t.push_back(tcodes.try_emplace(tit->second, tcodes.size()).first->second);
    }
    return {p, t};
}

}  // namespace

double purity(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    const Contingency c = contingency(predicted, truth);
    std::map<std::size_t, std::size_t> best;
    for (const auto& [cell, count] : c.joint) {
        best[cell.first] = std::max(best[cell.first], count);
    }
    std::size_t sum = 0;
    for (const auto& [cluster, count] : best) sum += count;
    return static_cast<double>(sum) / static_cast<double>(c.n);
}

double nmi(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    const Contingency c = contingency(predicted, truth);
    const double hx = entropy(c.rows, c.n);
    const double hy = entropy(c.cols, c.n);
    if (hx + hy == 0.0) return 1.0;
    if (hx == 0.0 || hy == 0.0) return 0.0;
    const double n = static_cast<double>(c.n);
    double mi = 0.0;
    for (const auto& [cell, count] : c.joint) {
        const double pxy = static_cast<double>(count) / n;
        const double px = static_cast<double>(c.rows.at(cell.first)) / n;
        const double py = static_cast<double>(c.cols.at(cell.second)) / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    return std::clamp(2.0 * mi / (hx + hy), 0.0, 1.0);
}

double purity(const std::map<std::string, std::string>& predicted,
              const std::map<std::string, std::string>& truth) {
    auto [p, t] = encode(predicted, truth);
    return purity(p, t);
}

double nmi(const std::map<std::string, std::string>& predicted,
           const std::map<std::string, std::string>& truth) {
    auto [p, t] = encode(predicted, truth);
    return nmi(p, t);
}

// ---------------------------------------------------------------------------
// Token attribution

namespace {

struct Unit {
    std::size_t region = 0;
    std::vector<std::string_view> tokens;
    std::size_t min_len = 0;
};

std::vector<std::string_view> tokens_of(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto [b, e] : token_spans(text)) out.push_back(text.substr(b, e - b));
    return out;
}

// Longest run C[pos..] that occurs contiguously somewhere in `t`.
std::size_t longest_match(const std::vector<std::string_view>& c, std::size_t pos,
                          const std::vector<std::string_view>& t) {
    std::size_t best = 0;
    for (std::size_t s = 0; s < t.size(); ++s) {
        std::size_t len = 0;
        while (pos + len < c.size() && s + len < t.size() && c[pos + len] == t[s + len]) ++len;
        best = std::max(best, len);
    }
    return best;
}

// Segments chunk tokens into one contiguous substring per unit. Unit ends are restricted to
// `boundary[e]` positions. Returns per-unit lengths, or nothing when no segmentation exists.
std::optional<std::vector<std::size_t>> segment(const std::vector<std::string_view>& c,
                                                const std::vector<Unit>& units,
                                                const std::vector<bool>& boundary) {
    const std::size_t m = c.size();
    const std::size_t q = units.size();
    // reach[j]: positions after the first j units, with the longest match of unit j from there.
    std::vector<std::map<std::size_t, std::size_t>> reach(q + 1);
    reach[0][0] = 0;
    for (std::size_t j = 0; j < q; ++j) {
        for (auto& [pos, longest] : reach[j]) {
            longest = units[j].tokens.empty() ? 0 : longest_match(c, pos, units[j].tokens);
            for (std::size_t len = units[j].min_len; len <= longest; ++len) {
                const std::size_t e = pos + len;
                const bool last = j + 1 == q;
                if ((last && e == m) || (!last && boundary[e])) reach[j + 1].try_emplace(e, 0);
            }
        }
    }
    if (!reach[q].count(m)) return std::nullopt;

    std::vector<std::size_t> lengths(q);
    std::size_t e = m;
    for (std::size_t j = q; j-- > 0;) {
        bool found = false;
        for (auto it = reach[j].rbegin(); it != reach[j].rend(); ++it) {
            const auto [pos, longest] = *it;
            if (pos <= e && e - pos >= units[j].min_len && e - pos <= longest) {
                lengths[j] = e - pos;
                e = pos;
                found = true;
                break;
            }
        }
        if (!found) return std::nullopt;
    }
    return lengths;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> chunk_token_attribution(const Chunk& chunk,
                                                                         const Document& document) {
    std::vector<Unit> units;
    for (const auto& id : chunk.region_ids) {
        auto idx = document.resolve(id);
        if (!idx) {
            throw MismatchError("chunk " + chunk.chunk_id + " references unknown region \"" + id + "\"");
        }
        Unit u;
        u.region = *idx;
        u.tokens = tokens_of(document.region(*idx).text);
        const bool part = !document.index_of(id).has_value();
        u.min_len = (u.tokens.empty() || part) ? 0 : 1;
        units.push_back(std::move(u));
    }
    const auto spans = token_spans(chunk.text);
    std::vector<std::string_view> c;
    std::string_view text = chunk.text;
    for (auto [b, e] : spans) c.push_back(text.substr(b, e - b));

    // Units are joined by line breaks in every chunk this library writes; try that first.
    std::vector<bool> boundary(c.size() + 1, false);
    boundary[0] = true;
    boundary[c.size()] = true;
    for (std::size_t t = 1; t < c.size(); ++t) {
        std::string_view gap = text.substr(spans[t - 1].second, spans[t].first - spans[t - 1].second);
        boundary[t] = gap.find('\n') != std::string_view::npos;
    }
    auto lengths = segment(c, units, boundary);
    if (!lengths) {
        std::fill(boundary.begin(), boundary.end(), true);
        lengths = segment(c, units, boundary);
    }
    if (!lengths) {
        throw MismatchError("text of chunk " + chunk.chunk_id + " does not match its regions");
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t j = 0; j < units.size(); ++j) out.emplace_back(units[j].region, (*lengths)[j]);
    return out;
}

std::vector<std::size_t> region_assignment(std::span<const Chunk> chunks, const Document& document) {
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(document.size(), kNone);
    std::vector<std::size_t> best(document.size(), 0);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        std::map<std::size_t, std::size_t> tokens;
        for (auto [region, count] : chunk_token_attribution(chunks[c], document)) {
            tokens[region] += count;
        }
        for (auto [region, count] : tokens) {
            if (owner[region] == kNone || count > best[region]) {
                owner[region] = c;
                best[region] = count;
            }
        }
    }
    for (std::size_t r = 0; r < owner.size(); ++r) {
        if (owner[r] == kNone) {
            throw MismatchError("region \"" + document.region(r).id + "\" is not in any chunk");
        }
    }
    return owner;
}

std::vector<std::vector<std::size_t>> groups_of(std::span<const std::size_t> assignment) {
    std::map<std::size_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < assignment.size(); ++i) by_label[assignment[i]].push_back(i);
    std::vector<std::vector<std::size_t>> groups;
    for (auto& [label, members] : by_label) groups.push_back(std::move(members));
    return groups;
}

DocumentScores evaluate_document(std::span<const Chunk> chunks, const Document& document,
                                 std::span<const EmbeddingVector> region_embeddings,
                                 const LayoutConfig& layout, const GroundTruth* truth) {
    const auto assignment = region_assignment(chunks, document);
    const auto groups = groups_of(assignment);

    DocumentScores s;
    s.doc_id = document.doc_id();
    s.cohesion = cohesion_score(groups, region_embeddings);
    s.layout_consistency = layout_consistency_score(groups, document, layout);
    s.n_chunks = chunks.size();
    s.mean_chunk_regions = static_cast<double>(document.size()) / static_cast<double>(groups.size());
    for (const auto& chunk : chunks) s.max_chunk_tokens = std::max(s.max_chunk_tokens, chunk.token_count);

    if (truth) {
        validate_ground_truth(*truth, document);
        if (truth->assignment.size() != document.size()) {
            throw MismatchError("ground truth does not cover every region of " + document.doc_id());
        }
        std::vector<std::size_t> truth_labels;
        std::map<std::string, std::size_t> codes;
        for (std::size_t r = 0; r < document.size(); ++r) {
            const std::string& label = truth->assignment.at(document.region(r).id);
            truth_labels.push_back(codes.try_emplace(label, codes.size()).first->second);
        }
        s.purity = purity(assignment, truth_labels);
        s.nmi = nmi(assignment, truth_labels);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

template <typename Get>
double mean_of(const std::vector<DocumentScores>& docs, Get get) {
    if (docs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& d : docs) sum += get(d);
    return sum / static_cast<double>(docs.size());
}

template <typename Get>
std::optional<double> optional_mean(const std::vector<DocumentScores>& docs, Get get) {
    if (docs.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& d : docs) {
        auto v = get(d);
        if (!v) return std::nullopt;
        sum += *v;
    }
    return sum / static_cast<double>(docs.size());
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

double MethodReport::mean_cohesion() const {
    return mean_of(documents, [](const DocumentScores& d) { return d.cohesion; });
}
double MethodReport::mean_layout_consistency() const {
    return mean_of(documents, [](const DocumentScores& d) { return d.layout_consistency; });
}
std::optional<double> MethodReport::mean_purity() const {
    return optional_mean(documents, [](const DocumentScores& d) { return d.purity; });
}
std::optional<double> MethodReport::mean_nmi() const {
    return optional_mean(documents, [](const DocumentScores& d) { return d.nmi; });
}
double MethodReport::mean_chunk_regions() const {
    return mean_of(documents, [](const DocumentScores& d) { return d.mean_chunk_regions; });
}

std::string EvaluationReport::table() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %10s %12s\n", "method", "cohesion",
                  "layout", "purity", "nmi", "regions/chk");
    out << line;
    for (const auto& m : methods) {
        auto p = m.mean_purity();
        auto n = m.mean_nmi();
        std::snprintf(line, sizeof line, "%-18s %10s %10s %10s %10s %12s\n", m.method.c_str(),
                      fmt(m.mean_cohesion()).c_str(), fmt(m.mean_layout_consistency()).c_str(),
                      p ? fmt(*p).c_str() : "n/a", n ? fmt(*n).c_str() : "n/a",
                      fmt(m.mean_chunk_regions()).c_str());
        out << line;
    }
    return out.str();
}

std::string EvaluationReport::csv() const {
    std::ostringstream out;
    out << "method,metric,value\n";
    for (const auto& m : methods) {
        out << m.method << ",cohesion," << fmt(m.mean_cohesion()) << '\n';
        out << m.method << ",layout_consistency," << fmt(m.mean_layout_consistency()) << '\n';
        if (auto p = m.mean_purity()) out << m.method << ",purity," << fmt(*p) << '\n';
        if (auto n = m.mean_nmi()) out << m.method << ",nmi," << fmt(*n) << '\n';
    }
    return out.str();
}

}  // namespace s2chunk
