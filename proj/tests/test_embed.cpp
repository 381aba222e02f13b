#include "s2chunk/embed.hpp"
#include "s2chunk/error.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

using namespace s2chunk;

TEST_CASE("builtin embedder") {
    SUBCASE("deterministic") { CHECK(builtin_embed("the same text", 256) == builtin_embed("the same text", 256)); }
    SUBCASE("empty text is the zero vector") {
        const auto v = builtin_embed("", 256);
        CHECK(v.size() == 256);
        CHECK(v.is_zero());
        CHECK(builtin_embed(" \n\t", 16).is_zero());
    }
    SUBCASE("non-empty text has unit norm") {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 100; ++i) {
            const std::string text = testing::random_text(rng, 1 + rng() % 50);
            CHECK(std::abs(builtin_embed(text, 2 + rng() % 300).norm() - 1.0) <= 1e-6);
        }
    }
    SUBCASE("case and spacing do not matter") {
        CHECK(builtin_embed("Hello  World", 64) == builtin_embed("hello world", 64));
    }
    SUBCASE("bag of words ignores order") {
        CHECK(builtin_embed("a b c", 64) == builtin_embed("c a b", 64));
    }
    SUBCASE("dimension below 2 is rejected") { CHECK_THROWS_AS(builtin_embed("x", 1), std::invalid_argument); }
}

TEST_CASE("normalized rejects non-finite values") {
    CHECK_THROWS_AS(normalized({1.0, NAN}), NumericalError);
    CHECK(normalized({0.0, 0.0}).is_zero());
    const EmbeddingVector unit = normalized({3.0, 4.0});
    CHECK(unit[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(unit[1] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("cosine similarity examples") {
    const EmbeddingVector e1({1.0, 0.0});
    const EmbeddingVector e2({0.0, 1.0});
    const EmbeddingVector diag({1.0, 1.0});
    CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(e1, e2) == 0.0);
    // 1 / sqrt(2), computed independently of the implementation.
    CHECK(std::abs(cosine_similarity(diag, e1) - 0.70711) <= 1e-5);
    CHECK(std::abs(cosine_similarity(diag, e1) - std::sqrt(0.5)) <= 1e-15);
    CHECK(cosine_similarity(EmbeddingVector::zero(2), e1) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(e1, EmbeddingVector({1.0, 0.0, 0.0})), std::invalid_argument);
}

TEST_CASE("cosine similarity properties") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 + rng() % 20;
        std::vector<double> a(d), b(d);
        for (auto& x : a) x = n(rng);
        for (auto& x : b) x = n(rng);
        const EmbeddingVector u(a), v(b);
        CHECK(cosine_similarity(u, v) == cosine_similarity(v, u));
        const double s = cosine_similarity(u, v);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        const double c = 0.01 + 100.0 * std::abs(n(rng));
        std::vector<double> scaled = b;
        for (auto& x : scaled) x *= c;
        CHECK(std::abs(cosine_similarity(u, EmbeddingVector(scaled)) - s) <= 1e-9);
    }
}

TEST_CASE("sha256 matches a known digest") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("embed_texts with the builtin provider") {
    ProviderConfig cfg;
    SUBCASE("duplicates give identical vectors") {
        const std::vector<std::string> texts = {"a", "a"};
        const auto out = embed_texts(cfg, texts);
        REQUIRE(out.size() == 2);
        CHECK(out[0] == out[1]);
    }
    SUBCASE("empty input") { CHECK(embed_texts(cfg, std::vector<std::string>{}).empty()); }
    SUBCASE("batch size is invisible") {
        const std::vector<std::string> texts = {"one", "two words", "three more words"};
        cfg.batch_size = 2;
        const auto small = embed_texts(cfg, texts);
        cfg.batch_size = 3;
        CHECK(small == embed_texts(cfg, texts));
    }
    SUBCASE("cache on and off give bitwise identical output") {
        std::mt19937_64 rng(4);
        std::vector<std::string> texts;
        for (int i = 0; i < 50; ++i) texts.push_back(testing::random_text(rng, rng() % 20));
        cfg.use_cache = false;
        const auto uncached = embed_texts(cfg, texts);
        cfg.use_cache = true;
        CHECK(embed_texts(cfg, texts) == uncached);
    }
    SUBCASE("repeated calls hit the cache") {
        EmbeddingService service(cfg);
        const std::vector<std::string> texts = {"x y", "z"};
        const auto first = service.embed(texts);
        CHECK(service.cache().hits() == 0);
        CHECK(service.embed(texts) == first);
        CHECK(service.cache().hits() == 2);
    }
    SUBCASE("invalid config") {
        cfg.dimension = 1;
        CHECK_THROWS_AS(EmbeddingService{cfg}, std::invalid_argument);
        cfg.dimension = 8;
        cfg.batch_size = 0;
        CHECK_THROWS_AS(EmbeddingService{cfg}, std::invalid_argument);
        cfg.batch_size = 1;
        cfg.kind = ProviderKind::Remote;
        CHECK_THROWS_AS(EmbeddingService{cfg}, std::invalid_argument);
    }
}

TEST_CASE("cache file persists across services and skips damaged lines") {
    testing::TempDir dir("cache");
    ProviderConfig cfg;
    cfg.cache_path = dir.file("cache.txt");
    const std::vector<std::string> texts = {"alpha beta", "gamma"};
    std::vector<EmbeddingVector> first;
    {
        EmbeddingService service(cfg);
        first = service.embed(texts);
    }
    // Simulate an interrupted append.
    std::ofstream(cfg.cache_path, std::ios::app) << "deadbeef 3 0.5";
    EmbeddingService again(cfg);
    CHECK(again.cache().size() == 2);
    CHECK(again.embed(texts) == first);
    CHECK(again.cache().hits() == 2);
}

TEST_CASE("concurrent cache use") {
    EmbeddingCache cache;
    std::vector<std::thread> workers;
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&cache, t] {
            for (int i = 0; i < 200; ++i) {
                const std::string text = "text " + std::to_string(i % 50);
                if (!cache.find(text, 8)) cache.store(text, builtin_embed(text, 8));
                (void)t;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(cache.size() == 50);
    for (int i = 0; i < 50; ++i) {
        const std::string text = "text " + std::to_string(i);
        CHECK(*cache.find(text, 8) == builtin_embed(text, 8));
    }
}

namespace {

// Local stand-in for an embedding service. Returns items in reverse order so that
// index mapping is exercised.
class FakeServer {
public:
    enum class Mode { Ok, Error500, WrongCount, WrongDimension, Garbage };

    explicit FakeServer(std::size_t dimension) : dimension_(dimension) {
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            const auto body = nlohmann::json::parse(req.body);
            const auto& input = body.at("input");
            max_batch_ = std::max<std::size_t>(max_batch_, input.size());
            switch (mode_.load()) {
                case Mode::Error500: res.status = 500; return;
                case Mode::Garbage: res.set_content("not json", "application/json"); return;
                default: break;
            }
            nlohmann::json reply;
            reply["data"] = nlohmann::json::array();
            const std::size_t n = mode_ == Mode::WrongCount ? input.size() + 1 : input.size();
            for (std::size_t k = n; k-- > 0;) {
                const std::string text = k < input.size() ? input[k].get<std::string>() : "extra";
                const std::size_t dim = mode_ == Mode::WrongDimension ? dimension_ + 1 : dimension_;
                auto v = builtin_embed(text.empty() ? "empty" : text, dim);
                std::vector<double> raw(v.values().begin(), v.values().end());
                for (auto& x : raw) x *= 3.0;  // unnormalized on the wire
                reply["data"].push_back({{"index", k}, {"embedding", raw}});
            }
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    void set_mode(Mode m) { mode_ = m; }
    std::size_t requests() const { return requests_; }
    std::size_t max_batch() const { return max_batch_; }

private:
    std::size_t dimension_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<Mode> mode_{Mode::Ok};
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> max_batch_{0};
};

}  // namespace

TEST_CASE("remote provider") {
    FakeServer server(16);
    ProviderConfig cfg;
    cfg.kind = ProviderKind::Remote;
    cfg.endpoint = server.endpoint();
    cfg.dimension = 16;
    cfg.batch_size = 3;
    cfg.timeout_seconds = 5.0;

    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));

    SUBCASE("batches, order and normalization") {
        const auto out = embed_texts(cfg, texts);
        REQUIRE(out.size() == texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto expected = builtin_embed(texts[i], 16);
            for (std::size_t d = 0; d < 16; ++d) CHECK(out[i][d] == doctest::Approx(expected[d]).epsilon(1e-12));
        }
        CHECK(server.requests() == 4);
        CHECK(server.max_batch() == 3);
    }
    SUBCASE("cached texts are not fetched again") {
        EmbeddingService service(cfg);
        service.embed(texts);
        const std::size_t before = server.requests();
        service.embed(texts);
        CHECK(server.requests() == before);
    }
    SUBCASE("non-200 is a transport error") {
        server.set_mode(FakeServer::Mode::Error500);
        CHECK_THROWS_AS(embed_texts(cfg, texts), TransportError);
    }
    SUBCASE("wrong item count") {
        server.set_mode(FakeServer::Mode::WrongCount);
        CHECK_THROWS_AS(embed_texts(cfg, texts), TransportError);
    }
    SUBCASE("dimension mismatch") {
        server.set_mode(FakeServer::Mode::WrongDimension);
        CHECK_THROWS_AS(embed_texts(cfg, texts), TransportError);
    }
    SUBCASE("malformed body") {
        server.set_mode(FakeServer::Mode::Garbage);
        CHECK_THROWS_AS(embed_texts(cfg, texts), TransportError);
    }
    SUBCASE("error carries the batch index") {
        server.set_mode(FakeServer::Mode::Error500);
        cfg.max_parallel_requests = 1;
        try {
            embed_texts(cfg, texts);
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.batch_index() == 0);
        }
    }
}

TEST_CASE("unreachable endpoint is a transport error") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    ProviderConfig cfg;
    cfg.kind = ProviderKind::Remote;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
    cfg.timeout_seconds = 2.0;
    CHECK_THROWS_AS(embed_texts(cfg, std::vector<std::string>{"x"}), TransportError);
}
