#include "s2chunk/embed.hpp"

#include "s2chunk/error.hpp"
#include "s2chunk/tokenize.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace s2chunk {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

EmbeddingVector EmbeddingVector::zero(std::size_t dimension) {
    return EmbeddingVector(std::vector<double>(dimension, 0.0));
}

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values_) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

bool EmbeddingVector::is_zero() const {
    for (double v : values_) {
        if (v != 0.0) {
            return false;
        }
    }
    return true;
}

EmbeddingVector normalized(std::vector<double> values) {
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericalError("embedding contains a non-finite value");
        }
        sum += v * v;
    }
    if (sum > 0.0) {
        const double inv = 1.0 / std::sqrt(sum);
        for (double& v : values) {
            v *= inv;
        }
    }
    return EmbeddingVector(std::move(values));
}

void validate(const ProviderConfig& config) {
    if (config.dimension < 2) {
        throw std::invalid_argument("embedding dimension must be at least 2");
    }
    if (config.batch_size < 1) {
        throw std::invalid_argument("batch size must be at least 1");
    }
    if (config.kind == ProviderKind::Remote && config.endpoint.empty()) {
        throw std::invalid_argument("remote provider requires an endpoint");
    }
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; spreads FNV output over all bits.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

EmbeddingVector builtin_embed(std::string_view text, std::size_t dimension) {
    if (dimension < 2) {
        throw std::invalid_argument("embedding dimension must be at least 2");
    }
    std::vector<double> values(dimension, 0.0);
    std::string token;
    for (auto [begin, end] : token_spans(text)) {
        token.assign(text.substr(begin, end - begin));
        for (char& c : token) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        const std::uint64_t h = mix64(fnv1a64(token));
        const double sign = (h >> 63) ? -1.0 : 1.0;
        values[h % dimension] += sign;
    }
    return normalized(std::move(values));
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                    std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) {
        return 0.0;
    }
    const double sim = dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(sim, -1.0, 1.0);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// EmbeddingCache

EmbeddingCache::EmbeddingCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string digest;
        std::size_t dimension = 0;
        if (!(fields >> digest >> dimension) || digest.size() != 64 || dimension == 0) {
            continue;  // truncated tail of an interrupted append
        }
        std::vector<double> values(dimension);
        bool ok = true;
        for (double& v : values) {
            if (!(fields >> v)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            entries_.insert_or_assign(key(digest, dimension), EmbeddingVector(std::move(values)));
        }
    }
}

std::string EmbeddingCache::key(std::string_view digest, std::size_t dimension) {
    return std::string(digest) + ":" + std::to_string(dimension);
}

std::optional<EmbeddingVector> EmbeddingCache::find(std::string_view text,
                                                    std::size_t dimension) const {
    const std::string k = key(sha256_hex(text), dimension);
    std::lock_guard lock(mutex_);
    auto it = entries_.find(k);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void EmbeddingCache::store(std::string_view text, const EmbeddingVector& vector) {
    const std::string digest = sha256_hex(text);
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.insert_or_assign(key(digest, vector.size()), vector);
    if (!inserted || path_.empty()) {
        return;
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw Error("cannot open embedding cache " + path_);
    }
    out << digest << ' ' << vector.size();
    char buf[32];
    for (double v : vector.values()) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        out << buf;
    }
    out << '\n';
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t EmbeddingCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

// ---------------------------------------------------------------------------
// EmbeddingService

EmbeddingService::EmbeddingService(ProviderConfig config) : config_(std::move(config)) {
    validate(config_);
    cache_ = config_.cache_path.empty() ? std::make_unique<EmbeddingCache>()
                                        : std::make_unique<EmbeddingCache>(config_.cache_path);
}

std::vector<EmbeddingVector> EmbeddingService::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out(texts.size());
    // Unique texts that still need a provider call, in first-seen order.
    std::vector<std::string> missing;
    std::unordered_map<std::string_view, std::vector<std::size_t>> positions;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto [it, fresh] = positions.try_emplace(texts[i]);
        it->second.push_back(i);
        if (!fresh) {
            continue;
        }
        if (config_.use_cache) {
            if (auto hit = cache_->find(texts[i], config_.dimension)) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        missing.push_back(texts[i]);
    }

    std::vector<EmbeddingVector> fetched(missing.size());
    const std::size_t batch = config_.batch_size;
    const std::size_t n_batches = (missing.size() + batch - 1) / batch;
    if (config_.kind == ProviderKind::Builtin) {
        for (std::size_t i = 0; i < missing.size(); ++i) {
            fetched[i] = builtin_embed(missing[i], config_.dimension);
        }
    } else {
        const std::size_t window = std::max<std::size_t>(1, config_.max_parallel_requests);
        for (std::size_t first = 0; first < n_batches; first += window) {
            std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
            const std::size_t last = std::min(n_batches, first + window);
            for (std::size_t b = first; b < last; ++b) {
                const std::size_t begin = b * batch;
                const std::size_t count = std::min(batch, missing.size() - begin);
                std::span<const std::string> slice(missing.data() + begin, count);
                inflight.push_back(std::async(std::launch::async, [this, slice, b] {
                    return fetch_remote(slice, b);
                }));
            }
            for (std::size_t b = first; b < last; ++b) {
                auto vectors = inflight[b - first].get();
                std::move(vectors.begin(), vectors.end(), fetched.begin() + b * batch);
            }
        }
    }

    for (std::size_t m = 0; m < missing.size(); ++m) {
        if (config_.use_cache) {
            cache_->store(missing[m], fetched[m]);
        }
        const auto& where = positions.at(missing[m]);
        out[where.front()] = std::move(fetched[m]);
    }
    for (const auto& [text, where] : positions) {
        for (std::size_t k = 1; k < where.size(); ++k) {
            out[where[k]] = out[where.front()];
        }
    }
    return out;
}

std::vector<EmbeddingVector> EmbeddingService::fetch_remote(std::span<const std::string> texts,
                                                           std::size_t batch_index) const {
    using nlohmann::json;
    // Split "scheme://host:port/base" into client address and path prefix.
    std::string address = config_.endpoint;
    std::string base_path;
    const auto scheme = address.find("://");
    const auto slash = address.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
        base_path = address.substr(slash);
        address.resize(slash);
    }
    while (!base_path.empty() && base_path.back() == '/') {
        base_path.pop_back();
    }

    httplib::Client client(address);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    json body;
    body["input"] = json::array();
    for (const auto& t : texts) {
        body["input"].push_back(t);
    }
    auto res = client.Post(base_path + "/embeddings", body.dump(), "application/json");
    if (!res) {
        throw TransportError("embedding endpoint unreachable: " + httplib::to_string(res.error()),
                             batch_index);
    }
    if (res->status != 200) {
        throw TransportError("embedding endpoint returned HTTP " + std::to_string(res->status),
                             batch_index);
    }

    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    try {
        const json reply = json::parse(res->body);
        const json& data = reply.at("data");
        if (!data.is_array() || data.size() != texts.size()) {
            throw TransportError("embedding response has wrong number of items", batch_index);
        }
        for (const json& item : data) {
            const std::size_t index = item.at("index").get<std::size_t>();
            auto values = item.at("embedding").get<std::vector<double>>();
            if (index >= slots.size() || slots[index]) {
                throw TransportError("embedding response has invalid index " + std::to_string(index),
                                     batch_index);
            }
            if (values.size() != config_.dimension) {
                throw TransportError("embedding dimension " + std::to_string(values.size()) +
                                         " does not match configured " +
                                         std::to_string(config_.dimension),
                                     batch_index);
            }
            slots[index] = normalized(std::move(values));
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embedding response: ") + e.what(), batch_index);
    } catch (const NumericalError& e) {
        throw TransportError(e.what(), batch_index);
    }

    std::vector<EmbeddingVector> out;
    out.reserve(slots.size());
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

std::vector<EmbeddingVector> embed_texts(const ProviderConfig& provider,
                                         std::span<const std::string> texts) {
    EmbeddingService service(provider);
    return service.embed(texts);
}

}  // namespace s2chunk
