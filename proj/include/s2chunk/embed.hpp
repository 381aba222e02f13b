#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace s2chunk {

/// Fixed-length embedding. Either unit L2 norm or the all-zero vector (no text).
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values);

    static EmbeddingVector zero(std::size_t dimension);

    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double norm() const;
    bool is_zero() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

/// Rescales to unit norm; zero vectors stay zero. Throws NumericalError on non-finite input.
EmbeddingVector normalized(std::vector<double> values);

enum class ProviderKind { Builtin, Remote };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Builtin;
    std::size_t dimension = 256;
    std::string endpoint;    // remote only, e.g. "http://localhost:8080"
    std::size_t batch_size = 32;
    std::string cache_path;  // empty = in-memory cache only
    bool use_cache = true;
    std::size_t max_parallel_requests = 4;
    double timeout_seconds = 30.0;
};

/// Throws std::invalid_argument when dimension < 2 or batch_size < 1.
void validate(const ProviderConfig& config);

/// Hashed bag-of-words embedding of lowercase whitespace tokens. Deterministic.
EmbeddingVector builtin_embed(std::string_view text, std::size_t dimension);

/// u.v / (|u||v|), clamped to [-1, 1]; 0 when either vector is zero.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

std::string sha256_hex(std::string_view data);

/// Content-addressed store keyed by (sha-256 of text, dimension). Safe for concurrent use.
/// With a backing file, records are appended as "<sha256> <dim> <v0> ... <vD-1>" lines and
/// reloaded on construction. One file belongs to one provider.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::string path);

    std::optional<EmbeddingVector> find(std::string_view text, std::size_t dimension) const;
    void store(std::string_view text, const EmbeddingVector& vector);

    std::size_t size() const;
    std::size_t hits() const;

private:
    static std::string key(std::string_view digest, std::size_t dimension);

    std::string path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> entries_;
    mutable std::size_t hits_ = 0;
};

/// Provider front-end: batching, caching and the remote protocol.
class EmbeddingService {
public:
    explicit EmbeddingService(ProviderConfig config);

    const ProviderConfig& config() const { return config_; }
    std::size_t dimension() const { return config_.dimension; }

    /// Output order matches input order.
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts);

    const EmbeddingCache& cache() const { return *cache_; }

private:
    std::vector<EmbeddingVector> fetch_remote(std::span<const std::string> texts,
                                              std::size_t batch_index) const;

    ProviderConfig config_;
    std::unique_ptr<EmbeddingCache> cache_;
};

/// One-shot convenience wrapper around EmbeddingService.
std::vector<EmbeddingVector> embed_texts(const ProviderConfig& provider,
                                         std::span<const std::string> texts);

}  // namespace s2chunk
