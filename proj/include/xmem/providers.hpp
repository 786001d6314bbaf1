// The provider suite: embedding, generation, reader, and uncertainty
// contracts, with deterministic offline implementations and remote wire
// clients. Offline and remote providers never mix within one suite.
#pragma once

#include "xmem/config.hpp"
#include "xmem/distillation.hpp"
#include "xmem/embedding.hpp"

#include <memory>
#include <string>

namespace xmem {

struct OracleEstimate {
    double uncertainty = 0.0;     // nonnegative; lower = more confident
    std::size_t call_tokens = 0;  // accounting for this estimate call
};

// Estimates the reader's remaining uncertainty given a context.
class UncertaintyOracle {
public:
    virtual ~UncertaintyOracle() = default;
    virtual std::string id() const = 0;
    virtual OracleEstimate estimate(const std::string& query, const std::string& context) = 0;
};

// Fraction of the query's distinct content tokens absent from the context:
// 0 when every content token appears, 1 when none does. Deterministic and
// model-free, yet monotone in evidence relevance, which is all the Stage-II
// gate consumes.
class OfflineUncertaintyOracle : public UncertaintyOracle {
public:
    std::string id() const override { return "offline-token-coverage"; }
    OracleEstimate estimate(const std::string& query, const std::string& context) override;
};

class RemoteUncertaintyOracle : public UncertaintyOracle {
public:
    explicit RemoteUncertaintyOracle(RemoteChatConfig config);
    std::string id() const override;
    OracleEstimate estimate(const std::string& query, const std::string& context) override;

private:
    RemoteChatClient client_;
};

struct ReaderResult {
    std::string text;
    std::size_t call_tokens = 0;
};

// Produces the final answer from the assembled context.
class Reader {
public:
    virtual ~Reader() = default;
    virtual std::string id() const = 0;
    virtual ReaderResult answer(const std::string& question, const std::string& context) = 0;
};

// Echoes the context line sharing the most distinct content tokens with the
// question (ties to the earlier line), with unit-id prefixes stripped.
class OfflineReader : public Reader {
public:
    std::string id() const override { return "offline-max-overlap"; }
    ReaderResult answer(const std::string& question, const std::string& context) override;
};

class RemoteReader : public Reader {
public:
    // style: "short" for phrase answers, "sentence" for one full sentence.
    RemoteReader(RemoteChatConfig config, std::string style);
    std::string id() const override;
    ReaderResult answer(const std::string& question, const std::string& context) override;

private:
    RemoteChatClient client_;
    std::string style_;
};

struct ProviderSuite {
    std::shared_ptr<EmbeddingCache> cache;
    std::shared_ptr<EmbeddingProvider> embedder; // cache-wrapped
    std::shared_ptr<GenerationProvider> generator;
    std::shared_ptr<UncertaintyOracle> oracle;
    std::shared_ptr<Reader> reader;
    bool offline = true;
};

// DeterministicEmbedder + RuleBasedProvider + offline oracle and reader.
ProviderSuite make_offline_suite(const RunConfig& config);

// Remote embedding, chat generation, chat reader, and chat uncertainty
// judge. Rejects configurations missing either endpoint: the
// reproducibility boundary between offline and remote is all-or-nothing.
ProviderSuite make_remote_suite(const RunConfig& config);

} // namespace xmem
