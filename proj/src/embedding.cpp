#include "xmem/embedding.hpp"

#include "xmem/errors.hpp"
#include "xmem/text.hpp"
#include "xmem/vecops.hpp"

#include "httplib.h"
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace xmem {

using json = nlohmann::json;

double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw RejectedInput("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.empty()) throw RejectedInput("cosine: empty vectors");
    double d = vecops::dot(a, b);
    if (!std::isfinite(d)) throw RejectedInput("cosine: non-finite input");
    return std::clamp(d, -1.0, 1.0);
}

Vec EmbeddingProvider::embed(const std::string& text) {
    auto v = embed_batch({text});
    return std::move(v.front());
}

DeterministicEmbedder::DeterministicEmbedder(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension <= 0) throw RejectedInput("embedder dimension must be positive");
}

std::string DeterministicEmbedder::provider_id() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "det:%d:%llu", dimension_,
                  static_cast<unsigned long long>(seed_));
    return buf;
}

Vec DeterministicEmbedder::embed_one(const std::string& text) const {
    if (text.empty()) throw RejectedInput("embed: empty text");
    auto tokens = text::alnum_tokens(text);
    if (tokens.empty()) throw RejectedInput("embed: text has no alphanumeric tokens");
    Vec v(static_cast<std::size_t>(dimension_), 0.0);
    const std::uint64_t basis = 1469598103934665603ULL ^ (seed_ * 0x9E3779B97F4A7C15ULL);
    for (const auto& t : tokens) {
        std::uint64_t h = text::fnv1a64(t, basis);
        v[h % static_cast<std::uint64_t>(dimension_)] += 1.0;
    }
    vecops::normalize_inplace(v);
    return v;
}

std::vector<Vec> DeterministicEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<Vec> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

namespace {

struct UrlParts {
    std::string origin; // scheme://host:port
    std::string path;
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw RejectedInput("bad provider url: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string batch_range(std::size_t n) { return "[0," + std::to_string(n) + ")"; }

} // namespace

RemoteEmbeddingClient::RemoteEmbeddingClient(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
    if (config_.url.empty()) throw RejectedInput("remote embedding url not configured");
}

std::vector<Vec> RemoteEmbeddingClient::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    if (texts.size() > config_.batch_limit)
        throw RejectedInput("embedding batch of " + std::to_string(texts.size()) +
                            " exceeds limit " + std::to_string(config_.batch_limit));

    auto parts = split_url(config_.url);
    httplib::Client cli(parts.origin);
    cli.set_connection_timeout(config_.timeout_seconds);
    cli.set_read_timeout(config_.timeout_seconds);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    json body = {{"input", texts}, {"model", config_.model}};
    const std::string payload = body.dump();
    const std::string range = batch_range(texts.size());

    httplib::Result res;
    for (int attempt = 0; attempt < 2; ++attempt) {
        res = cli.Post(parts.path, headers, payload, "application/json");
        if (res) break;
    }
    if (!res)
        throw TransportError("embedding request failed for batch " + range + ": " +
                             httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProtocolError("embedding provider returned status " + std::to_string(res->status) +
                                " for batch " + range,
                            res->body);

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProtocolError("embedding response is not JSON for batch " + range, res->body);
    }
    if (!parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].size() != texts.size())
        throw ProtocolError("embedding response cardinality mismatch for batch " + range,
                            res->body);

    std::vector<Vec> out(texts.size());
    std::vector<bool> seen(texts.size(), false);
    for (const auto& item : parsed["data"]) {
        if (!item.contains("index") || !item.contains("embedding") ||
            !item["embedding"].is_array())
            throw ProtocolError("embedding response item malformed for batch " + range, res->body);
        std::size_t idx = item["index"].get<std::size_t>();
        if (idx >= out.size() || seen[idx])
            throw ProtocolError("embedding response index out of range for batch " + range,
                                res->body);
        Vec v = item["embedding"].get<Vec>();
        if (static_cast<int>(v.size()) != config_.dimension)
            throw ProtocolError("embedding dimension " + std::to_string(v.size()) +
                                    " does not match configured " +
                                    std::to_string(config_.dimension) + " for batch " + range,
                                res->body);
        if (!vecops::normalize_inplace(v))
            throw ProtocolError("embedding provider returned a zero vector for batch " + range,
                                res->body);
        out[idx] = std::move(v);
        seen[idx] = true;
    }
    return out;
}

std::string EmbeddingCache::key_for(const std::string& provider_id, const std::string& text) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx-%zu",
                  static_cast<unsigned long long>(text::fnv1a64(text)), text.size());
    return provider_id + ":" + buf;
}

bool EmbeddingCache::lookup(const std::string& provider_id, const std::string& text,
                            Vec& out) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key_for(provider_id, text));
    if (it == entries_.end()) return false;
    out = it->second;
    return true;
}

void EmbeddingCache::insert(const std::string& provider_id, const std::string& text, Vec v) {
    std::lock_guard lock(mutex_);
    entries_[key_for(provider_id, text)] = std::move(v);
}

std::map<std::string, Vec> EmbeddingCache::snapshot() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

void EmbeddingCache::restore(std::map<std::string, Vec> entries) {
    std::lock_guard lock(mutex_);
    entries_ = std::move(entries);
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                                 std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<Vec> CachingEmbedder::embed_batch(const std::vector<std::string>& texts) {
    std::vector<Vec> out(texts.size());
    std::vector<std::size_t> misses;
    for (std::size_t i = 0; i < texts.size(); ++i)
        if (!cache_->lookup(provider_id(), texts[i], out[i])) misses.push_back(i);

    if (!misses.empty()) {
        std::vector<std::string> batch;
        batch.reserve(misses.size());
        for (auto i : misses) batch.push_back(texts[i]);
        auto fresh = inner_->embed_batch(batch);
        for (std::size_t j = 0; j < misses.size(); ++j) {
            cache_->insert(provider_id(), texts[misses[j]], fresh[j]);
            out[misses[j]] = std::move(fresh[j]);
        }
    }
    return out;
}

} // namespace xmem
