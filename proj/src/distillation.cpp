#include "xmem/distillation.hpp"

#include "xmem/errors.hpp"
#include "xmem/prompts.hpp"
#include "xmem/text.hpp"

#include "httplib.h"
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_set>

namespace xmem {

using json = nlohmann::json;

namespace {

// Sentences matching any of these lowercased tokens are transient
// conversation residue, not persistent knowledge.
const std::unordered_set<std::string>& transient_tokens() {
    static const std::unordered_set<std::string> kTransient = {
        "thanked", "thanks",  "thank",   "appreciated", "appreciate", "confused",
        "confusing", "glad",  "sorry",   "welcome",     "productive", "bye",
        "goodbye", "hello",   "hi",      "hey",         "okay",       "ok",
        "yeah",    "yep",     "cool",    "nice",        "awesome",    "great",
        "haha",    "lol",     "wow",     "hmm",         "sure",       "congrats",
        "congratulations"};
    return kTransient;
}

std::string joined_text(const std::vector<Message>& msgs) {
    std::string out;
    for (const Message& m : msgs) {
        if (!out.empty()) out += ' ';
        out += m.text;
    }
    return out;
}

bool ends_in_terminal(const std::string& s) {
    for (auto it = s.rbegin(); it != s.rend(); ++it) {
        if (std::isspace(static_cast<unsigned char>(*it))) continue;
        return *it == '.' || *it == '!' || *it == '?';
    }
    return false;
}

// A capitalised alphabetic word after the first position marks a proper
// noun for the rule-based extractor.
bool sentence_keepable(const std::string& sentence) {
    bool has_number = std::any_of(sentence.begin(), sentence.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
    });
    bool has_proper = false;
    std::size_t i = 0;
    std::size_t word_index = 0;
    const std::size_t n = sentence.size();
    while (i < n && !has_proper) {
        while (i < n && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        std::size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
        if (i == start) break;
        std::string word = sentence.substr(start, i - start);
        while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.front())))
            word.erase(word.begin());
        while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.back())))
            word.pop_back();
        if (word_index > 0 && word.size() >= 2 &&
            std::isupper(static_cast<unsigned char>(word[0])) &&
            std::all_of(word.begin() + 1, word.end(), [](char c) {
                return std::isalpha(static_cast<unsigned char>(c));
            }))
            has_proper = true;
        ++word_index;
    }
    if (!has_number && !has_proper) return false;
    for (const std::string& tok : text::alnum_tokens(sentence))
        if (transient_tokens().count(tok)) return false;
    return true;
}

std::string strip_code_fences(const std::string& s) {
    std::string t = s;
    auto trim = [](std::string& x) {
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.front()))) x.erase(x.begin());
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.back()))) x.pop_back();
    };
    trim(t);
    if (t.rfind("```", 0) == 0) {
        auto nl = t.find('\n');
        if (nl != std::string::npos) t = t.substr(nl + 1);
        auto end = t.rfind("```");
        if (end != std::string::npos) t = t.substr(0, end);
        trim(t);
    }
    return t;
}

json parse_provider_json(const std::string& raw, const std::string& what) {
    try {
        return json::parse(strip_code_fences(raw));
    } catch (const json::exception&) {
        throw ProtocolError(what + ": provider output is not valid JSON", raw);
    }
}

} // namespace

RuleBasedProvider::RuleBasedProvider(RuleBasedConfig config) : config_(config) {
    if (config_.max_messages == 0) throw RejectedInput("rule provider: max_messages must be >= 1");
    if (config_.gap_minutes <= 0) throw RejectedInput("rule provider: gap_minutes must be positive");
}

std::string RuleBasedProvider::id() const { return "rule-based"; }

BoundaryDecision RuleBasedProvider::boundary_decision(const std::vector<Message>& history,
                                                      const std::vector<Message>& incoming) {
    if (incoming.empty()) throw RejectedInput("boundary: incoming messages empty");
    if (history.empty()) return {false, "conversation history is empty; first episode begins"};

    const std::int64_t gap_seconds = incoming.front().timestamp - history.back().timestamp;
    const std::int64_t gap_minutes = gap_seconds / 60;
    if (gap_minutes > config_.gap_minutes)
        return {true, "time gap of " + std::to_string(gap_minutes) + " minutes exceeds " +
                          std::to_string(config_.gap_minutes)};

    if (history.size() >= config_.max_messages)
        return {true, "episode length " + std::to_string(history.size()) +
                          " reached the maximum " + std::to_string(config_.max_messages)};

    const double overlap = text::overlap_ratio(joined_text(incoming), joined_text(history));
    if (overlap < config_.min_overlap) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", overlap);
        return {true, std::string("token overlap ") + buf + " fell below " +
                          std::to_string(config_.min_overlap).substr(0, 4)};
    }
    return {false, "same topic continues"};
}

EpisodeRecord RuleBasedProvider::episode_record(const std::vector<Message>& block,
                                                const std::string& boundary_reason) {
    (void)boundary_reason;
    if (block.empty()) throw RejectedInput("episode_record: empty block");

    TimePoint earliest = block.front().timestamp;
    for (const Message& m : block) earliest = std::min(earliest, m.timestamp);

    // Narrative: anchor the earliest time, then relay each turn in order.
    std::string content = "On " + format_timestamp(earliest) + ", ";
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (i > 0) content += ' ';
        content += block[i].speaker + " said: " + block[i].text;
        if (!ends_in_terminal(content)) content += '.';
    }

    // Title: date plus the most frequent content tokens, for searchability.
    std::map<std::string, int> freq;
    for (const Message& m : block)
        for (const std::string& tok : text::content_tokens(m.text)) ++freq[tok];
    std::vector<std::pair<int, std::string>> ranked;
    for (const auto& [tok, count] : freq) ranked.push_back({count, tok});
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::string ts = format_timestamp(earliest);
    std::string title = "Conversation on " + ts.substr(0, 10);
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i)
        title += (i == 0 ? ": " : " ") + ranked[i].second;

    return {title, content, ts};
}

std::vector<std::string> RuleBasedProvider::semantic_statements(
    const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw RejectedInput("semantic_statements: no episodes");
    std::vector<std::string> out;
    for (const Episode& ep : episodes)
        for (const std::string& sentence : text::sentences(ep.content))
            if (sentence_keepable(sentence)) out.push_back(sentence);
    return out;
}

std::string RuleBasedProvider::theme_summary(const std::vector<std::string>& statements) {
    if (statements.empty()) throw RejectedInput("theme_summary: no statements");
    if (statements.size() == 1) {
        std::string s = statements.front();
        if (s.size() > config_.summary_max_chars) s.resize(config_.summary_max_chars);
        return s;
    }
    std::map<std::string, int> freq;
    for (const std::string& s : statements)
        for (const std::string& tok : text::content_tokens(s)) ++freq[tok];
    std::vector<std::pair<int, std::string>> ranked;
    for (const auto& [tok, count] : freq) ranked.push_back({count, tok});
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::string summary;
    for (std::size_t i = 0; i < ranked.size() && i < config_.summary_top_tokens; ++i) {
        if (!summary.empty()) summary += ' ';
        summary += ranked[i].second;
    }
    if (summary.empty()) {
        summary = statements.front();
        if (summary.size() > config_.summary_max_chars) summary.resize(config_.summary_max_chars);
    }
    return summary;
}

RemoteChatClient::RemoteChatClient(RemoteChatConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw RejectedInput("remote chat url not configured");
}

std::string RemoteChatClient::complete(const std::string& system_prompt,
                                       const std::string& user_prompt) {
    auto scheme_end = config_.url.find("://");
    if (scheme_end == std::string::npos) throw RejectedInput("bad provider url: " + config_.url);
    auto path_start = config_.url.find('/', scheme_end + 3);
    std::string origin =
        path_start == std::string::npos ? config_.url : config_.url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : config_.url.substr(path_start);

    httplib::Client cli(origin);
    cli.set_connection_timeout(config_.timeout_seconds);
    cli.set_read_timeout(config_.timeout_seconds);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    json body = {{"model", config_.model},
                 {"messages", json::array({json{{"role", "system"}, {"content", system_prompt}},
                                           json{{"role", "user"}, {"content", user_prompt}}})},
                 {"temperature", 0.0}};
    const std::string payload = body.dump();

    httplib::Result res;
    for (int attempt = 0; attempt < 2; ++attempt) {
        res = cli.Post(path, headers, payload, "application/json");
        if (res) break;
    }
    if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProtocolError("chat provider returned status " + std::to_string(res->status),
                            res->body);

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception&) {
        throw ProtocolError("chat response is not JSON", res->body);
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
        !parsed["choices"][0]["message"].contains("content") ||
        !parsed["choices"][0]["message"]["content"].is_string())
        throw ProtocolError("chat response missing choices[0].message.content", res->body);
    return parsed["choices"][0]["message"]["content"].get<std::string>();
}

RemoteChatProvider::RemoteChatProvider(RemoteChatConfig config) : client_(std::move(config)) {}

std::string RemoteChatProvider::id() const { return "remote:" + client_.config().model; }

namespace {

std::string render_messages(const std::vector<Message>& msgs) {
    std::string out;
    for (const Message& m : msgs) {
        out += "[" + format_timestamp(m.timestamp) + "] " + m.speaker + ": " + m.text + "\n";
    }
    return out;
}

} // namespace

BoundaryDecision RemoteChatProvider::boundary_decision(const std::vector<Message>& history,
                                                       const std::vector<Message>& incoming) {
    if (incoming.empty()) throw RejectedInput("boundary: incoming messages empty");
    std::string user = "Current conversation history:\n" + render_messages(history) +
                       "\nNewly added messages:\n" + render_messages(incoming);
    std::string raw = client_.complete(prompts::kBoundarySystem, user);
    json parsed = parse_provider_json(raw, "boundary_decision");
    if (!parsed.is_object() || !parsed.contains("split") || !parsed["split"].is_boolean())
        throw ProtocolError("boundary_decision: missing boolean 'split'", raw);
    std::string reason =
        parsed.contains("reason") && parsed["reason"].is_string() ? parsed["reason"] : "";
    return {parsed["split"].get<bool>(), reason};
}

EpisodeRecord RemoteChatProvider::episode_record(const std::vector<Message>& block,
                                                 const std::string& boundary_reason) {
    if (block.empty()) throw RejectedInput("episode_record: empty block");
    std::string user = "Conversation content:\n" + render_messages(block) +
                       "\nBoundary detection reason:\n" + boundary_reason;
    std::string raw = client_.complete(prompts::kEpisodeSystem, user);
    json parsed = parse_provider_json(raw, "episode_record");
    if (!parsed.is_object() || !parsed.contains("title") || !parsed["title"].is_string() ||
        !parsed.contains("content") || !parsed["content"].is_string() ||
        !parsed.contains("timestamp") || !parsed["timestamp"].is_string())
        throw ProtocolError("episode_record: expected {title, content, timestamp}", raw);
    EpisodeRecord rec{parsed["title"], parsed["content"], parsed["timestamp"]};
    try {
        parse_timestamp(rec.timestamp);
    } catch (const RejectedInput&) {
        throw ProtocolError("episode_record: timestamp does not parse as ISO-8601", raw);
    }
    return rec;
}

std::vector<std::string> RemoteChatProvider::semantic_statements(
    const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw RejectedInput("semantic_statements: no episodes");
    std::string user = "Episodes to analyze:\n";
    for (const Episode& ep : episodes)
        user += "[" + format_timestamp(ep.timestamp) + "] " + ep.title + ": " + ep.content + "\n";
    std::string raw = client_.complete(prompts::kSemanticSystem, user);
    json parsed = parse_provider_json(raw, "semantic_statements");
    if (!parsed.is_array()) throw ProtocolError("semantic_statements: expected a JSON array", raw);
    std::vector<std::string> out;
    for (const auto& item : parsed) {
        if (!item.is_string())
            throw ProtocolError("semantic_statements: array items must be strings", raw);
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::string RemoteChatProvider::theme_summary(const std::vector<std::string>& statements) {
    if (statements.empty()) throw RejectedInput("theme_summary: no statements");
    std::string user = "Factual statements:\n";
    for (const std::string& s : statements) user += "- " + s + "\n";
    std::string raw = strip_code_fences(client_.complete(prompts::kThemeSystem, user));
    if (raw.empty()) throw ProtocolError("theme_summary: provider returned empty summary", raw);
    return raw;
}

BoundaryDecision detect_boundary(GenerationProvider& provider,
                                 const std::vector<Message>& history,
                                 const std::vector<Message>& incoming) {
    if (incoming.empty()) throw RejectedInput("detect_boundary: incoming messages empty");
    // Provider-independent guarantee: the first message never splits.
    if (history.empty()) return {false, "conversation history is empty; first episode begins"};
    return provider.boundary_decision(history, incoming);
}

std::string build_episode(GenerationProvider& provider, EmbeddingProvider& embedder,
                          MemoryHierarchy& h, const std::vector<std::string>& message_ids,
                          const std::string& boundary_reason) {
    if (message_ids.empty()) throw RejectedInput("build_episode: empty block");

    std::vector<Message> block;
    block.reserve(message_ids.size());
    for (const std::string& mid : message_ids) {
        auto it = h.messages.find(mid);
        if (it == h.messages.end()) throw RejectedInput("build_episode: unknown message " + mid);
        block.push_back(it->second);
    }
    const std::string& session = block.front().session_id;
    for (const Message& m : block)
        if (m.session_id != session)
            throw RejectedInput("build_episode: block spans sessions " + session + " and " +
                                m.session_id);
    const auto& order = h.session_order.at(session);
    auto first = std::find(order.begin(), order.end(), message_ids.front());
    if (first == order.end() ||
        std::size_t(order.end() - first) < message_ids.size() ||
        !std::equal(message_ids.begin(), message_ids.end(), first))
        throw RejectedInput("build_episode: block is not contiguous in session " + session);

    EpisodeRecord rec = provider.episode_record(block, boundary_reason);
    Episode ep;
    ep.id = h.new_episode_id();
    ep.title = rec.title;
    ep.content = rec.content;
    ep.timestamp = parse_timestamp(rec.timestamp);
    ep.message_ids = message_ids;
    ep.embedding = embedder.embed(rec.title + "\n" + rec.content);
    h.episodes[ep.id] = ep;
    return ep.id;
}

std::vector<SemanticNode> extract_semantics(GenerationProvider& provider,
                                            EmbeddingProvider& embedder,
                                            const MemoryHierarchy& h,
                                            const std::vector<std::string>& episode_ids) {
    if (episode_ids.empty()) throw RejectedInput("extract_semantics: no episodes");
    std::vector<Episode> episodes;
    episodes.reserve(episode_ids.size());
    for (const std::string& eid : episode_ids) {
        auto it = h.episodes.find(eid);
        if (it == h.episodes.end())
            throw RejectedInput("extract_semantics: unknown episode " + eid);
        episodes.push_back(it->second);
    }

    // One provider call per episode keeps source attribution exact.
    std::vector<SemanticNode> drafts;
    std::map<std::string, std::size_t> seen; // normalised statement -> draft index
    for (const Episode& ep : episodes) {
        for (const std::string& statement : provider.semantic_statements({ep})) {
            const std::string key = text::normalized_statement(statement);
            if (key.empty()) continue;
            auto it = seen.find(key);
            if (it != seen.end()) {
                auto& sources = drafts[it->second].source_episode_ids;
                if (std::find(sources.begin(), sources.end(), ep.id) == sources.end()) {
                    sources.push_back(ep.id);
                    std::sort(sources.begin(), sources.end());
                }
                continue;
            }
            SemanticNode draft;
            draft.statement = statement;
            draft.source_episode_ids = {ep.id};
            seen[key] = drafts.size();
            drafts.push_back(std::move(draft));
        }
    }
    std::vector<std::string> texts;
    texts.reserve(drafts.size());
    for (const SemanticNode& d : drafts) texts.push_back(d.statement);
    if (!texts.empty()) {
        std::vector<Vec> vecs = embedder.embed_batch(texts);
        for (std::size_t i = 0; i < drafts.size(); ++i) drafts[i].embedding = std::move(vecs[i]);
    }
    return drafts;
}

std::string summarize_theme(GenerationProvider& provider,
                            const std::vector<std::string>& statements) {
    if (statements.empty()) throw RejectedInput("summarize_theme: no statements");
    std::string summary = provider.theme_summary(statements);
    if (summary.empty()) throw ProtocolError("summarize_theme: empty summary", "");
    return summary;
}

} // namespace xmem
