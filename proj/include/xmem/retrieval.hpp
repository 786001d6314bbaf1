// Two-stage top-down retrieval. Stage I greedily selects representative
// themes, then semantics, trading marginal coverage gain on the kNN graph
// against query relevance:
//   i* = argmax  alpha * (sum_{u in Delta(i;R)} w_iu) / Z
//               + (1 - alpha) * s~(q, i)
// Stage II ranks the episodes backing the selected semantics and admits one
// at a time, keeping an episode (and optionally its raw messages) only when
// it reduces the reader's uncertainty by at least delta, under a hard token
// budget and an early-stopping patience.
#pragma once

#include "xmem/config.hpp"
#include "xmem/knn_graph.hpp"
#include "xmem/providers.hpp"
#include "xmem/types.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace xmem {

struct Query {
    std::string text;
    Vec embedding;             // filled from the suite's embedder when empty
    std::size_t budget = 1024; // max context tokens
    double beta = 0.5;         // episode ranking: beta*cos + (1-beta)*support
    Stage1Params stage1;
    Stage2Params stage2;
};

struct CandidateSet {
    std::vector<std::string> ids;          // descending raw similarity, ties by id
    std::map<std::string, double> raw;     // cosine to the query
    std::map<std::string, double> s_tilde; // min-max normalised, in [0,1]
    double z = 1.0;                        // max_i sum_{u in {i} U N(i)} w_iu
};

struct EpisodeInclusion {
    std::string episode_id;
    double uncertainty_before = 0.0;
    double uncertainty_after = 0.0;
    bool messages_included = false;
};

struct TokenUsage {
    std::size_t context_tokens = 0;        // final assembled context
    std::size_t auxiliary_call_tokens = 0; // uncertainty-oracle calls
    std::size_t total = 0;                 // auxiliary + reader call
};

// One intact block placed in the context; blocks are the unit of the
// evidence analyses.
struct ContextUnit {
    std::string unit_id;
    std::string kind; // "theme" | "semantic" | "episode" | "messages"
    std::string text;
};

struct RetrievalResult {
    std::vector<std::string> themes_selected;
    std::vector<std::string> semantics_selected;
    std::vector<EpisodeInclusion> episodes_included;
    std::vector<std::string> messages_included; // message ids of expanded blocks
    std::vector<ContextUnit> units;             // context blocks in order
    std::string context;                        // assembled text
    TokenUsage token_usage;
    bool empty_hierarchy = false;
    bool degraded = false;        // oracle failed; similarity-only fallback
    bool coarse_truncated = false; // coarse units skipped to honour the budget
};

// Ablation switches: the full system enables both stages.
struct RetrievalOptions {
    bool use_representative_selection = true; // Stage I greedy
    bool use_uncertainty_gate = true;         // Stage II gate
};

// Candidate gathering: top-M semantics by query cosine plus the themes they
// belong to. s~ is min-max normalised per set (singleton and all-equal sets
// normalise to 1); Z is computed over each set with w_ii = 1 and
// neighbourhoods restricted to the set. Returns {themes, semantics}.
std::pair<CandidateSet, CandidateSet> gather_candidates(const Query& q,
                                                        const MemoryHierarchy& h,
                                                        const NavGraph& semantic_graph,
                                                        const NavGraph& theme_graph);

// The Stage-I greedy loop; stops at the coverage target or the
// representative budget. Ties break by higher s~, then lower id.
std::vector<std::string> select_representatives(const CandidateSet& candidates,
                                                const NavGraph& graph, double alpha,
                                                double coverage_target,
                                                std::size_t max_representatives);

// Episodes backing the selected semantics, scored
// beta * cos(q, episode) + (1 - beta) * support, descending; ties by
// earlier timestamp, then id.
std::vector<std::string> rank_episodes(const Query& q,
                                       const std::vector<std::string>& semantics_selected,
                                       const MemoryHierarchy& h, double beta);

std::string assemble_context(const std::vector<ContextUnit>& units);

// Stage II: iterates ranked episodes over the coarse context already in
// `result`, admitting units through the uncertainty gate. Budget overflow
// stops inclusion; oracle failure degrades to similarity-only inclusion of
// the top episode.
void include_evidence(const Query& q, const std::vector<std::string>& ranked_episodes,
                      RetrievalResult& result, const MemoryHierarchy& h,
                      UncertaintyOracle& oracle);

struct AnswerResult {
    std::string answer;
    RetrievalResult retrieval;
};

// End-to-end query path: gather, select, rank, gate, assemble, read.
AnswerResult answer(Query q, const MemoryHierarchy& h, const NavGraph& theme_graph,
                    const NavGraph& semantic_graph, const ProviderSuite& suite,
                    const RetrievalOptions& options = {});

} // namespace xmem
