#include "s2chunk/doc_model.hpp"
#include "s2chunk/error.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace s2chunk;

namespace {

const char* kMinimal = R"({
  "doc_id": "d1",
  "pages": [{"index": 0, "width": 100, "height": 200}],
  "regions": [{"id": "r1", "page": 0, "bbox": [0, 0, 10, 10], "text": "hello", "label": null}]
})";

std::vector<Page> one_page() { return {{0, 100.0, 200.0}}; }

Region region(std::string id, BBox box, std::string text = "x") {
    Region r;
    r.id = std::move(id);
    r.bbox = box;
    r.text = std::move(text);
    return r;
}

}  // namespace

TEST_CASE("minimal payload parses to one region") {
    const Document doc = parse_document(kMinimal);
    CHECK(doc.doc_id() == "d1");
    REQUIRE(doc.size() == 1);
    CHECK(doc.region(0).id == "r1");
    CHECK(doc.region(0).text == "hello");
    CHECK_FALSE(doc.region(0).label.has_value());
    CHECK(doc.region(0).bbox == BBox{0, 0, 10, 10});
}

TEST_CASE("duplicate region id is rejected and named") {
    try {
        Document("d", one_page(), {region("r1", {0, 0, 1, 1}), region("r1", {1, 1, 2, 2})});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.region_id() == "r1");
        CHECK(std::string(e.what()).find("r1") != std::string::npos);
    }
}

TEST_CASE("inverted bbox is rejected") {
    CHECK_THROWS_AS(Document("d", one_page(), {region("r1", {5, 0, 1, 1})}), ValidationError);
    CHECK_THROWS_AS(Document("d", one_page(), {region("r1", {0, 5, 1, 1})}), ValidationError);
}

TEST_CASE("document invariants") {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SUBCASE("no regions") { CHECK_THROWS_AS(Document("d", one_page(), {}), ValidationError); }
    SUBCASE("no pages") { CHECK_THROWS_AS(Document("d", {}, {region("r", {0, 0, 1, 1})}), ValidationError); }
    SUBCASE("page index out of range") {
        Region r = region("r", {0, 0, 1, 1});
        r.page_index = 1;
        CHECK_THROWS_AS(Document("d", one_page(), {r}), ValidationError);
    }
    SUBCASE("non-positive page size") {
        CHECK_THROWS_AS(Document("d", {{0, 0.0, 10.0}}, {region("r", {0, 0, 0, 0})}), ValidationError);
        CHECK_THROWS_AS(Document("d", {{0, 10.0, -1.0}}, {region("r", {0, 0, 0, 0})}), ValidationError);
    }
    SUBCASE("non-finite coordinates") {
        CHECK_THROWS_AS(Document("d", one_page(), {region("r", {0, 0, inf, 1})}), ValidationError);
        CHECK_THROWS_AS(Document("d", one_page(), {region("r", {nan, 0, 1, 1})}), ValidationError);
    }
    SUBCASE("page bounds allow one unit of slack") {
        CHECK_NOTHROW(Document("d", one_page(), {region("r", {-1.0, -1.0, 101.0, 201.0})}));
        CHECK_THROWS_AS(Document("d", one_page(), {region("r", {-1.5, 0, 10, 10})}), ValidationError);
        CHECK_THROWS_AS(Document("d", one_page(), {region("r", {0, 0, 10, 201.5})}), ValidationError);
    }
    SUBCASE("empty text is allowed") {
        CHECK_NOTHROW(Document("d", one_page(), {region("fig", {0, 0, 10, 10}, "")}));
    }
}

TEST_CASE("malformed payloads report line and field") {
    SUBCASE("bad JSON") {
        try {
            parse_document("{\n  \"doc_id\": \"d\",\n  \"pages\": [,]\n}");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("missing field") {
        try {
            parse_document(R"({"doc_id": "d", "pages": [{"index": 0, "width": 1, "height": 1}], "regions": [{"id": "a", "page": 0, "text": ""}]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.field() == "$.regions[0].bbox");
        }
    }
    SUBCASE("wrong type") {
        try {
            parse_document(R"({"doc_id": 5, "pages": [], "regions": []})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.field() == "$.doc_id");
        }
    }
    SUBCASE("short bbox") {
        CHECK_THROWS_AS(parse_document(R"({"doc_id": "d", "pages": [{"index": 0, "width": 1, "height": 1}],
            "regions": [{"id": "a", "page": 0, "bbox": [0, 0, 1], "text": ""}]})"),
                        ParseError);
    }
}

TEST_CASE("part ids resolve to their region") {
    const Document doc = parse_document(kMinimal);
    CHECK(doc.resolve("r1") == std::optional<std::size_t>(0));
    CHECK(doc.resolve(part_region_id("r1", 2)) == std::optional<std::size_t>(0));
    CHECK_FALSE(doc.resolve("r1#").has_value());
    CHECK_FALSE(doc.resolve("r1#x").has_value());
    CHECK_FALSE(doc.resolve("r2#0").has_value());
    CHECK_FALSE(doc.index_of("r1#0").has_value());
}

TEST_CASE("serialize_chunks") {
    SUBCASE("empty list") {
        const ChunkSet empty{"d", {}};
        const std::string payload = serialize_chunks(empty);
        CHECK(payload.find("\"chunks\": []") != std::string::npos);
        CHECK(parse_chunks(payload) == empty);
    }
    SUBCASE("one chunk of two regions lists both ids in order") {
        const ChunkSet cs{"d", {{"c0", {"b", "a"}, join_chunk_text({"x y", "z"}), 3}}};
        const std::string payload = serialize_chunks(cs);
        CHECK(payload.find("\"b\"") < payload.find("\"a\""));
        CHECK(parse_chunks(payload) == cs);
        CHECK(cs.chunks[0].text == "x y\nz");
    }
}

TEST_CASE("chunk invariants are checked on parse") {
    CHECK_THROWS_AS(parse_chunks(R"({"doc_id": "d", "chunks": [{"chunk_id": "c", "region_ids": [], "token_count": 0, "text": ""}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_chunks(R"({"doc_id": "d", "chunks": [{"chunk_id": "c", "region_ids": ["a", "a"], "token_count": 1, "text": "x"}]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_chunks(R"({"doc_id": "d", "chunks": [{"chunk_id": "c", "region_ids": ["a"], "token_count": 2, "text": "x"}]})"),
                    ValidationError);
}

TEST_CASE("round trip of random valid documents") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Document doc = testing::random_document(rng, 1 + rng() % 30, 40);
        const std::string payload = serialize_document(doc);
        const Document back = parse_document(payload);
        CHECK(back == doc);
        CHECK(serialize_document(back) == payload);
    }
}

TEST_CASE("validation rejects exactly the broken invariant") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Document doc = testing::random_document(rng, 2 + rng() % 10, 5);
        std::vector<Region> regions = doc.regions();
        std::vector<Page> pages = doc.pages();
        CHECK_NOTHROW(validate(doc.doc_id(), pages, regions));
        const std::size_t victim = rng() % regions.size();
        switch (trial % 4) {
            case 0: regions[victim].id = regions[(victim + 1) % regions.size()].id; break;
            case 1: std::swap(regions[victim].bbox.x0, regions[victim].bbox.x1); break;
            case 2: regions[victim].page_index = pages.size(); break;
            case 3: regions[victim].bbox.y1 = pages[regions[victim].page_index].height + 2.0; break;
        }
        CHECK_THROWS_AS(validate(doc.doc_id(), pages, regions), ValidationError);
    }
}

TEST_CASE("ground truth round trip and coverage check") {
    const Document doc = parse_document(kMinimal);
    const GroundTruth truth{"d1", {{"r1", "A"}}};
    CHECK(parse_ground_truth(serialize_ground_truth(truth)) == truth);
    CHECK_NOTHROW(validate_ground_truth(truth, doc));
    CHECK_THROWS_AS(validate_ground_truth(GroundTruth{"d1", {{"zz", "A"}}}, doc), MismatchError);
}
