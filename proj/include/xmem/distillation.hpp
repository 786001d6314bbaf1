// Distills the raw message stream into episodes, semantic statements, and
// theme summaries through a generation-provider contract. RuleBasedProvider
// is the deterministic offline analogue of the prompt templates; the remote
// provider speaks the chat wire with temperature 0.
#pragma once

#include "xmem/embedding.hpp"
#include "xmem/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace xmem {

struct BoundaryDecision {
    bool split = false;
    std::string reason;
};

struct EpisodeRecord {
    std::string title;
    std::string content;
    std::string timestamp; // ISO-8601
};

class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual std::string id() const = 0;
    virtual BoundaryDecision boundary_decision(const std::vector<Message>& history,
                                               const std::vector<Message>& incoming) = 0;
    virtual EpisodeRecord episode_record(const std::vector<Message>& block,
                                         const std::string& boundary_reason) = 0;
    virtual std::vector<std::string> semantic_statements(const std::vector<Episode>& episodes) = 0;
    virtual std::string theme_summary(const std::vector<std::string>& statements) = 0;
};

struct RuleBasedConfig {
    std::int64_t gap_minutes = 30;      // boundary: time gap trigger
    std::size_t max_messages = 12;      // boundary: running-episode length trigger
    double min_overlap = 0.3;           // boundary: token-overlap trigger
    std::size_t summary_max_chars = 60; // singleton theme summary truncation
    std::size_t summary_top_tokens = 5; // multi-statement summary token count
};

// Pure function of inputs and config. Boundary: split when the time gap
// exceeds gap_minutes, the running episode reaches max_messages, or the
// incoming text's token overlap with the history falls below min_overlap.
// Semantics: sentence-split the episode narrative, keep sentences carrying a
// proper noun or a number, drop sentences matching the transient stoplist.
class RuleBasedProvider : public GenerationProvider {
public:
    explicit RuleBasedProvider(RuleBasedConfig config = {});

    std::string id() const override;
    BoundaryDecision boundary_decision(const std::vector<Message>& history,
                                       const std::vector<Message>& incoming) override;
    EpisodeRecord episode_record(const std::vector<Message>& block,
                                 const std::string& boundary_reason) override;
    std::vector<std::string> semantic_statements(const std::vector<Episode>& episodes) override;
    std::string theme_summary(const std::vector<std::string>& statements) override;

    const RuleBasedConfig& config() const { return config_; }

private:
    RuleBasedConfig config_;
};

struct RemoteChatConfig {
    std::string url;   // e.g. "http://host:port/v1/chat/completions"
    std::string model;
    std::string api_key_env = "XMEM_CHAT_API_KEY";
    int timeout_seconds = 60;
};

// POST {"model", "messages":[{"role","content"}...], "temperature": 0.0};
// reads the first choice's message content. Transport failures are retried
// once; malformed responses raise ProtocolError carrying the raw payload.
class RemoteChatClient {
public:
    explicit RemoteChatClient(RemoteChatConfig config);
    std::string complete(const std::string& system_prompt, const std::string& user_prompt);
    const RemoteChatConfig& config() const { return config_; }

private:
    RemoteChatConfig config_;
};

class RemoteChatProvider : public GenerationProvider {
public:
    explicit RemoteChatProvider(RemoteChatConfig config);

    std::string id() const override;
    BoundaryDecision boundary_decision(const std::vector<Message>& history,
                                       const std::vector<Message>& incoming) override;
    EpisodeRecord episode_record(const std::vector<Message>& block,
                                 const std::string& boundary_reason) override;
    std::vector<std::string> semantic_statements(const std::vector<Episode>& episodes) override;
    std::string theme_summary(const std::vector<std::string>& statements) override;

private:
    RemoteChatClient client_;
};

// Boundary decision with the provider-independent guarantee that an empty
// history never splits.
BoundaryDecision detect_boundary(GenerationProvider& provider,
                                 const std::vector<Message>& history,
                                 const std::vector<Message>& incoming);

// Builds, embeds, and inserts the episode for a contiguous single-session
// block; returns the new episode id.
std::string build_episode(GenerationProvider& provider, EmbeddingProvider& embedder,
                          MemoryHierarchy& h, const std::vector<std::string>& message_ids,
                          const std::string& boundary_reason);

// Extracts embedded semantic-node drafts (no id or theme assigned yet) from
// the given episodes; duplicate normalised statements are collapsed with
// merged source lists.
std::vector<SemanticNode> extract_semantics(GenerationProvider& provider,
                                            EmbeddingProvider& embedder,
                                            const MemoryHierarchy& h,
                                            const std::vector<std::string>& episode_ids);

std::string summarize_theme(GenerationProvider& provider,
                            const std::vector<std::string>& statements);

} // namespace xmem
