#include "s2chunk/doc_model.hpp"

#include "s2chunk/error.hpp"
#include "s2chunk/tokenize.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace s2chunk {

using nlohmann::json;

namespace {

constexpr double kPageTolerance = 1.0;

std::size_t line_of_byte(std::string_view payload, std::size_t byte) {
    byte = std::min(byte, payload.size());
    return 1 + static_cast<std::size_t>(std::count(payload.begin(), payload.begin() + byte, '\n'));
}

json parse_json(std::string_view payload) {
    try {
        return json::parse(payload.begin(), payload.end());
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points one past the offending character
        std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError("malformed JSON: " + std::string(e.what()), line_of_byte(payload, byte));
    }
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
        throw ParseError("expected object at " + path, 0, path);
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError("missing field " + path + "." + key, 0, path + "." + key);
    }
    return *it;
}

template <typename T>
T get_as(const json& value, const std::string& path) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ParseError("wrong type for field " + path, 0, path);
    }
}

std::size_t get_index(const json& value, const std::string& path) {
    if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw ParseError("expected non-negative integer at " + path, 0, path);
    }
    return value.get<std::size_t>();
}

double get_number(const json& value, const std::string& path) {
    if (!value.is_number()) {
        throw ParseError("expected number at " + path, 0, path);
    }
    return value.get<double>();
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
    const json& arr = require(obj, key, path);
    if (!arr.is_array()) {
        throw ParseError("expected array at " + path + "." + key, 0, path + "." + key);
    }
    return arr;
}

bool finite(const BBox& b) {
    return std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) && std::isfinite(b.y1);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void validate(const std::string& doc_id, const std::vector<Page>& pages,
              const std::vector<Region>& regions) {
    (void)doc_id;
    if (pages.empty()) {
        throw ValidationError("document has no pages");
    }
    for (std::size_t p = 0; p < pages.size(); ++p) {
        const Page& page = pages[p];
        if (page.index != p) {
            throw ValidationError("page at position " + std::to_string(p) + " has index " +
                                  std::to_string(page.index));
        }
        if (!(page.width > 0.0) || !(page.height > 0.0) || !std::isfinite(page.width) ||
            !std::isfinite(page.height)) {
            throw ValidationError("page " + std::to_string(p) + " must have positive finite size");
        }
    }
    if (regions.empty()) {
        throw ValidationError("document has no regions");
    }
    std::set<std::string_view> seen;
    for (const Region& r : regions) {
        if (!seen.insert(r.id).second) {
            throw ValidationError("duplicate region id \"" + r.id + "\"", r.id);
        }
        if (!finite(r.bbox)) {
            throw ValidationError("region \"" + r.id + "\" has non-finite bbox", r.id);
        }
        if (r.bbox.x0 > r.bbox.x1 || r.bbox.y0 > r.bbox.y1) {
            throw ValidationError("region \"" + r.id + "\" has inverted bbox", r.id);
        }
        if (r.page_index >= pages.size()) {
            throw ValidationError("region \"" + r.id + "\" references missing page " +
                                      std::to_string(r.page_index),
                                  r.id);
        }
        const Page& page = pages[r.page_index];
        if (r.bbox.x0 < -kPageTolerance || r.bbox.y0 < -kPageTolerance ||
            r.bbox.x1 > page.width + kPageTolerance || r.bbox.y1 > page.height + kPageTolerance) {
            throw ValidationError("region \"" + r.id + "\" lies outside its page", r.id);
        }
    }
}

Document::Document(std::string doc_id, std::vector<Page> pages, std::vector<Region> regions)
    : doc_id_(std::move(doc_id)), pages_(std::move(pages)), regions_(std::move(regions)) {
    validate(doc_id_, pages_, regions_);
    index_.reserve(regions_.size());
    for (std::size_t i = 0; i < regions_.size(); ++i) {
        index_.emplace(regions_[i].id, i);
    }
}

std::optional<std::size_t> Document::index_of(std::string_view region_id) const {
    auto it = index_.find(std::string(region_id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> Document::resolve(std::string_view region_ref) const {
    if (auto exact = index_of(region_ref)) {
        return exact;
    }
    auto hash = region_ref.rfind('#');
    if (hash == std::string_view::npos || hash + 1 == region_ref.size()) {
        return std::nullopt;
    }
    std::string_view digits = region_ref.substr(hash + 1);
    std::size_t part = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), part);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        return std::nullopt;
    }
    return index_of(region_ref.substr(0, hash));
}

std::string part_region_id(std::string_view region_id, std::size_t part) {
    return std::string(region_id) + "#" + std::to_string(part);
}

std::string join_chunk_text(const std::vector<std::string_view>& texts) {
    std::string out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i > 0) {
            out.push_back('\n');
        }
        out.append(texts[i]);
    }
    return out;
}

Document parse_document(std::string_view payload) {
    const json root = parse_json(payload);
    const std::string doc_id = get_as<std::string>(require(root, "doc_id", "$"), "$.doc_id");

    std::vector<Page> pages;
    const json& jpages = require_array(root, "pages", "$");
    for (std::size_t p = 0; p < jpages.size(); ++p) {
        const std::string path = "$.pages[" + std::to_string(p) + "]";
        const json& jp = jpages[p];
        pages.push_back(Page{get_index(require(jp, "index", path), path + ".index"),
                             get_number(require(jp, "width", path), path + ".width"),
                             get_number(require(jp, "height", path), path + ".height")});
    }

    std::vector<Region> regions;
    const json& jregions = require_array(root, "regions", "$");
    for (std::size_t r = 0; r < jregions.size(); ++r) {
        const std::string path = "$.regions[" + std::to_string(r) + "]";
        const json& jr = jregions[r];
        Region region;
        region.id = get_as<std::string>(require(jr, "id", path), path + ".id");
        region.page_index = get_index(require(jr, "page", path), path + ".page");
        const json& jb = require(jr, "bbox", path);
        if (!jb.is_array() || jb.size() != 4) {
            throw ParseError("bbox must be an array of 4 numbers at " + path, 0, path + ".bbox");
        }
        region.bbox = BBox{get_number(jb[0], path + ".bbox[0]"), get_number(jb[1], path + ".bbox[1]"),
                           get_number(jb[2], path + ".bbox[2]"), get_number(jb[3], path + ".bbox[3]")};
        region.text = get_as<std::string>(require(jr, "text", path), path + ".text");
        if (auto it = jr.find("label"); it != jr.end() && !it->is_null()) {
            region.label = get_as<std::string>(*it, path + ".label");
        }
        regions.push_back(std::move(region));
    }
    return Document(doc_id, std::move(pages), std::move(regions));
}

std::string serialize_document(const Document& document) {
    json root;
    root["doc_id"] = document.doc_id();
    root["pages"] = json::array();
    for (const Page& p : document.pages()) {
        root["pages"].push_back({{"index", p.index}, {"width", p.width}, {"height", p.height}});
    }
    root["regions"] = json::array();
    for (const Region& r : document.regions()) {
        json jr;
        jr["id"] = r.id;
        jr["page"] = r.page_index;
        jr["bbox"] = {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1};
        jr["text"] = r.text;
        jr["label"] = r.label ? json(*r.label) : json(nullptr);
        root["regions"].push_back(std::move(jr));
    }
    return dump(root);
}

ChunkSet parse_chunks(std::string_view payload) {
    const json root = parse_json(payload);
    ChunkSet out;
    out.doc_id = get_as<std::string>(require(root, "doc_id", "$"), "$.doc_id");
    const json& jchunks = require_array(root, "chunks", "$");
    for (std::size_t c = 0; c < jchunks.size(); ++c) {
        const std::string path = "$.chunks[" + std::to_string(c) + "]";
        const json& jc = jchunks[c];
        Chunk chunk;
        chunk.chunk_id = get_as<std::string>(require(jc, "chunk_id", path), path + ".chunk_id");
        chunk.region_ids = get_as<std::vector<std::string>>(require(jc, "region_ids", path),
                                                            path + ".region_ids");
        chunk.token_count = get_index(require(jc, "token_count", path), path + ".token_count");
        chunk.text = get_as<std::string>(require(jc, "text", path), path + ".text");
        out.chunks.push_back(std::move(chunk));
    }
    validate(out);
    return out;
}

void validate(const ChunkSet& chunks) {
    for (const Chunk& c : chunks.chunks) {
        if (c.region_ids.empty()) {
            throw ValidationError("chunk \"" + c.chunk_id + "\" lists no regions");
        }
        std::set<std::string_view> seen;
        for (const auto& id : c.region_ids) {
            if (!seen.insert(id).second) {
                throw ValidationError("chunk \"" + c.chunk_id + "\" lists region \"" + id + "\" twice", id);
            }
        }
        if (c.token_count != count_tokens(c.text)) {
            throw ValidationError("chunk \"" + c.chunk_id + "\" token_count does not match its text");
        }
    }
}

std::string serialize_chunks(const ChunkSet& chunks) {
    json root;
    root["doc_id"] = chunks.doc_id;
    root["chunks"] = json::array();
    for (const Chunk& c : chunks.chunks) {
        root["chunks"].push_back({{"chunk_id", c.chunk_id},
                                  {"region_ids", c.region_ids},
                                  {"token_count", c.token_count},
                                  {"text", c.text}});
    }
    return dump(root);
}

GroundTruth parse_ground_truth(std::string_view payload) {
    const json root = parse_json(payload);
    GroundTruth truth;
    truth.doc_id = get_as<std::string>(require(root, "doc_id", "$"), "$.doc_id");
    const json& assignment = require(root, "assignment", "$");
    if (!assignment.is_object()) {
        throw ParseError("assignment must be an object", 0, "$.assignment");
    }
    for (auto it = assignment.begin(); it != assignment.end(); ++it) {
        truth.assignment[it.key()] = get_as<std::string>(it.value(), "$.assignment." + it.key());
    }
    return truth;
}

std::string serialize_ground_truth(const GroundTruth& truth) {
    json root;
    root["doc_id"] = truth.doc_id;
    root["assignment"] = json::object();
    for (const auto& [id, label] : truth.assignment) {
        root["assignment"][id] = label;
    }
    return dump(root);
}

void validate_ground_truth(const GroundTruth& truth, const Document& document) {
    for (const auto& [id, label] : truth.assignment) {
        if (!document.index_of(id)) {
            throw MismatchError("ground truth references unknown region \"" + id + "\"");
        }
    }
}

}  // namespace s2chunk
