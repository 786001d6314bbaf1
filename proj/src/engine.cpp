// Engine orchestration: session ingestion and query answering.

#include "xmem/engine.hpp"

#include "xmem/distillation.hpp"
#include "xmem/errors.hpp"
#include "xmem/hierarchy.hpp"
#include "xmem/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

namespace xmem {

namespace {

using nlohmann::json;

std::string require_string(const json& obj, const char* key, const char* where) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
        throw SchemaError(std::string("dataset: missing string field '") + key + "' in " + where);
    }
    return obj.at(key).get<std::string>();
}

} // namespace

Dataset parse_dataset(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("dataset: not valid JSON");
    if (!doc.is_object()) throw SchemaError("dataset: top level must be an object");

    Dataset out;
    if (!doc.contains("conversation") || !doc.at("conversation").is_object()) {
        throw SchemaError("dataset: missing 'conversation' object");
    }
    const json& conv = doc.at("conversation");
    if (!conv.contains("sessions") || !conv.at("sessions").is_array()) {
        throw SchemaError("dataset: 'conversation.sessions' must be an array");
    }
    for (const json& s : conv.at("sessions")) {
        SessionData session;
        session.session_id = require_string(s, "session_id", "session");
        if (!s.contains("turns") || !s.at("turns").is_array()) {
            throw SchemaError("dataset: session '" + session.session_id +
                              "' is missing a 'turns' array");
        }
        for (const json& t : s.at("turns")) {
            Turn turn;
            turn.speaker = require_string(t, "speaker", "turn");
            turn.timestamp = require_string(t, "timestamp", "turn");
            turn.text = require_string(t, "text", "turn");
            session.turns.push_back(std::move(turn));
        }
        out.sessions.push_back(std::move(session));
    }

    if (doc.contains("qa")) {
        if (!doc.at("qa").is_array()) throw SchemaError("dataset: 'qa' must be an array");
        for (const json& q : doc.at("qa")) {
            QAItem item;
            item.question = require_string(q, "question", "qa item");
            item.answer = require_string(q, "answer", "qa item");
            if (item.answer.empty()) throw SchemaError("dataset: qa answer must not be empty");
            item.category = q.contains("category") && q.at("category").is_string()
                                ? q.at("category").get<std::string>()
                                : "other";
            out.qa.push_back(std::move(item));
        }
    }
    return out;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading dataset file: " + path);
    return parse_dataset(buf.str());
}

MemoryEngine::MemoryEngine(RunConfig config, ProviderSuite suite)
    : config_(std::move(config)),
      suite_(std::move(suite)),
      theme_graph_(config_.structure.knn_k),
      semantic_graph_(config_.structure.knn_k),
      mgr_(h_, config_.structure, &theme_graph_) {
    h_.dimension = int(config_.dimension);
    mgr_.set_summarizer([this](const std::vector<std::string>& statements) {
        return suite_.generator->theme_summary(statements);
    });
}

MemoryEngine::MemoryEngine(RunConfig config, ProviderSuite suite, MemoryHierarchy hierarchy,
                           NavGraph theme_graph, NavGraph semantic_graph)
    : config_(std::move(config)),
      suite_(std::move(suite)),
      h_(std::move(hierarchy)),
      theme_graph_(std::move(theme_graph)),
      semantic_graph_(std::move(semantic_graph)),
      mgr_(h_, config_.structure, &theme_graph_) {
    mgr_.set_summarizer([this](const std::vector<std::string>& statements) {
        return suite_.generator->theme_summary(statements);
    });
    rebuild_statement_index();
}

void MemoryEngine::rebuild_statement_index() {
    statement_index_.clear();
    for (const auto& [id, node] : h_.semantics) {
        statement_index_.emplace(text::normalized_statement(node.statement), id);
    }
}

void MemoryEngine::ingest_session(const SessionData& session) {
    if (session.session_id.empty()) throw RejectedInput("session id must not be empty");

    std::vector<std::string> block; // running episode: contiguous message ids
    for (const Turn& turn : session.turns) {
        Message incoming;
        incoming.speaker = turn.speaker;
        incoming.timestamp = parse_timestamp(turn.timestamp);
        incoming.text = turn.text;
        incoming.session_id = session.session_id;

        // The boundary decision precedes insertion: the incoming message
        // either closes the running episode or extends it.
        std::vector<Message> history;
        history.reserve(block.size());
        for (const auto& mid : block) history.push_back(h_.messages.at(mid));
        BoundaryDecision decision = detect_boundary(*suite_.generator, history, {incoming});
        if (decision.split) {
            flush_block(block, decision.reason);
        }

        std::string id = add_message(h_, incoming.speaker, incoming.timestamp, incoming.text,
                                     incoming.session_id);
        block.push_back(id);
    }
    flush_block(block, "end of session");
}

void MemoryEngine::flush_block(std::vector<std::string>& block, const std::string& reason) {
    if (block.empty()) return;
    std::string episode_id = build_episode(*suite_.generator, *suite_.embedder, h_, block, reason);
    block.clear();

    std::vector<SemanticNode> drafts =
        extract_semantics(*suite_.generator, *suite_.embedder, h_, {episode_id});
    for (SemanticNode& draft : drafts) {
        const std::string key = text::normalized_statement(draft.statement);
        auto hit = statement_index_.find(key);
        if (hit != statement_index_.end() && h_.semantics.count(hit->second) > 0) {
            // Restated fact: extend the existing node's provenance only.
            SemanticNode& node = h_.semantics.at(hit->second);
            for (const auto& src : draft.source_episode_ids) {
                auto pos = std::lower_bound(node.source_episode_ids.begin(),
                                            node.source_episode_ids.end(), src);
                if (pos == node.source_episode_ids.end() || *pos != src) {
                    node.source_episode_ids.insert(pos, src);
                }
            }
            continue;
        }
        draft.id = h_.new_semantic_id();
        mgr_.attach_semantic(draft);
        semantic_graph_.upsert_node(draft.id, draft.embedding);
        statement_index_[key] = draft.id;
        mgr_.note_insertion();
    }
}

IngestStats MemoryEngine::ingest(const Dataset& dataset) {
    for (const SessionData& session : dataset.sessions) ingest_session(session);
    if (config_.structure.enable_merge) mgr_.merge_sweep();
    return stats();
}

IngestStats MemoryEngine::stats() const {
    IngestStats s;
    s.messages = h_.messages.size();
    s.episodes = h_.episodes.size();
    s.semantics = h_.semantics.size();
    s.themes = h_.themes.size();
    s.reassignment_ratio = xmem::reassignment_ratio(h_);
    for (const auto& [id, theme] : h_.themes) {
        (void)id;
        s.theme_size_histogram[theme.member_ids.size()] += 1;
    }
    s.splits = mgr_.split_count();
    s.merges = mgr_.merge_count();
    return s;
}

Query MemoryEngine::make_query(const std::string& question) const {
    Query q;
    q.text = question;
    q.budget = config_.budget;
    q.beta = config_.beta;
    q.stage1 = config_.stage1;
    q.stage2 = config_.stage2;
    return q;
}

AnswerResult MemoryEngine::answer(const std::string& question,
                                  const RetrievalOptions& options) const {
    return xmem::answer(make_query(question), h_, theme_graph_, semantic_graph_, suite_, options);
}

} // namespace xmem
