#pragma once
// The vector space: embedding provider contract, the deterministic offline
// embedder, similarity primitives and the persistent embedding cache.

#include "xmem/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace xmem {

// Cosine of two unit vectors (dot product), clamped to [-1, 1].
// Throws RejectedInput on dimension mismatch or non-finite input.
double cosine(const Vec& a, const Vec& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // One unit vector per input, order-preserving.
    virtual std::vector<Vec> embed_batch(const std::vector<std::string>& texts) = 0;
    virtual int dimension() const = 0;
    virtual std::string provider_id() const = 0;

    Vec embed(const std::string& text);
};

// Pure function of (text, seed): hash each lowercased alphanumeric token to
// one of d buckets, accumulate counts, L2-normalise. Preserves lexical
// overlap, which is what the structure and retrieval math consume offline.
class DeterministicEmbedder final : public EmbeddingProvider {
public:
    explicit DeterministicEmbedder(int dimension = 256, std::uint64_t seed = 0);

    std::vector<Vec> embed_batch(const std::vector<std::string>& texts) override;
    int dimension() const override { return dimension_; }
    std::string provider_id() const override;

    Vec embed_one(const std::string& text) const;

private:
    int dimension_;
    std::uint64_t seed_;
};

struct RemoteEmbeddingConfig {
    std::string url;          // e.g. http://127.0.0.1:8089/v1/embeddings
    std::string model;
    int dimension = 1536;
    std::size_t batch_limit = 64;
    std::string api_key_env = "XMEM_EMBED_API_KEY";
    int timeout_seconds = 30;
};

// Wire client: POST {"input": [texts], "model": m}; response
// {"data": [{"index": i, "embedding": [...]}...]}. Vectors are
// re-normalised locally rather than trusted. Transport failures are retried
// once, then surfaced as TransportError; malformed payloads raise
// ProtocolError. Both carry the failing batch index range.
class RemoteEmbeddingClient final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingClient(RemoteEmbeddingConfig config);

    std::vector<Vec> embed_batch(const std::vector<std::string>& texts) override;
    int dimension() const override { return config_.dimension; }
    std::string provider_id() const override { return "remote:" + config_.model; }

private:
    RemoteEmbeddingConfig config_;
};

// (provider id, text hash) -> vector. Writes are serialized; reads return
// copies. Persisted with the store.
class EmbeddingCache {
public:
    bool lookup(const std::string& provider_id, const std::string& text, Vec& out) const;
    void insert(const std::string& provider_id, const std::string& text, Vec v);

    static std::string key_for(const std::string& provider_id, const std::string& text);

    std::map<std::string, Vec> snapshot() const;
    void restore(std::map<std::string, Vec> entries);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Vec> entries_;
};

// Provider wrapper that consults the cache before delegating.
class CachingEmbedder final : public EmbeddingProvider {
public:
    CachingEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::shared_ptr<EmbeddingCache> cache);

    std::vector<Vec> embed_batch(const std::vector<std::string>& texts) override;
    int dimension() const override { return inner_->dimension(); }
    std::string provider_id() const override { return inner_->provider_id(); }

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::shared_ptr<EmbeddingCache> cache_;
};

} // namespace xmem
