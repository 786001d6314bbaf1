// The memory engine: ingests conversation sessions through boundary
// detection, episode distillation, semantic extraction, and guided theme
// structuring, then answers queries via the two-stage retrieval pipeline.
#pragma once

#include "xmem/config.hpp"
#include "xmem/knn_graph.hpp"
#include "xmem/providers.hpp"
#include "xmem/retrieval.hpp"
#include "xmem/structure.hpp"
#include "xmem/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace xmem {

struct Turn {
    std::string speaker;
    std::string timestamp; // ISO-8601
    std::string text;
};

struct SessionData {
    std::string session_id;
    std::vector<Turn> turns;
};

struct QAItem {
    std::string question;
    std::string answer;
    std::string category;
};

struct Dataset {
    std::vector<SessionData> sessions;
    std::vector<QAItem> qa;
};

// Parses the conversation/qa JSON document. Structural problems raise
// SchemaError; unreadable files raise IoError.
Dataset parse_dataset(const std::string& json_text);
Dataset load_dataset(const std::string& path);

struct IngestStats {
    std::size_t messages = 0;
    std::size_t episodes = 0;
    std::size_t semantics = 0;
    std::size_t themes = 0;
    double reassignment_ratio = 0.0;
    std::map<std::size_t, std::size_t> theme_size_histogram; // size -> count
    std::size_t splits = 0;
    std::size_t merges = 0;
};

class MemoryEngine {
public:
    MemoryEngine(RunConfig config, ProviderSuite suite);

    // Resume from persisted state (the store layer's path).
    MemoryEngine(RunConfig config, ProviderSuite suite, MemoryHierarchy hierarchy,
                 NavGraph theme_graph, NavGraph semantic_graph);

    // The structure manager aliases the owned hierarchy, so relocation would
    // dangle; factory returns rely on guaranteed prvalue elision instead.
    MemoryEngine(const MemoryEngine&) = delete;
    MemoryEngine& operator=(const MemoryEngine&) = delete;

    // Sessions in order; a final merge sweep consolidates stragglers.
    IngestStats ingest(const Dataset& dataset);
    void ingest_session(const SessionData& session);

    AnswerResult answer(const std::string& question,
                        const RetrievalOptions& options = {}) const;
    Query make_query(const std::string& question) const;

    IngestStats stats() const;

    const RunConfig& config() const { return config_; }
    const ProviderSuite& suite() const { return suite_; }
    const MemoryHierarchy& hierarchy() const { return h_; }
    const NavGraph& theme_graph() const { return theme_graph_; }
    const NavGraph& semantic_graph() const { return semantic_graph_; }
    const StructureManager& structure() const { return mgr_; }
    StructureManager& structure() { return mgr_; }

private:
    // Distills one contiguous message block into an episode and its
    // semantics, attaching each new statement to the theme level.
    void flush_block(std::vector<std::string>& block, const std::string& reason);
    void rebuild_statement_index();

    RunConfig config_;
    ProviderSuite suite_;
    MemoryHierarchy h_;
    NavGraph theme_graph_;
    NavGraph semantic_graph_;
    StructureManager mgr_;
    std::map<std::string, std::string> statement_index_; // normalised -> sem id
};

} // namespace xmem
