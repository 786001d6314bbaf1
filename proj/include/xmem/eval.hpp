// Evaluation harness: runs a QA dataset against the engine (full system or
// ablations) or the naive top-k chunk baseline, scores answers, and
// aggregates evidence analyses into deterministic JSON and table reports.
#pragma once

#include "xmem/engine.hpp"
#include "xmem/metrics.hpp"
#include "xmem/retrieval.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace xmem {

enum class EvalSystem { ours, naive, memory_only, repsel, uncsion };

// Accepts "ours", "naive", "memory_only", "+repsel", "+uncsion".
EvalSystem eval_system_from_string(const std::string& name);
std::string to_string(EvalSystem system);

// Ablation mapping: memory_only disables both stages, +repsel enables
// Stage I only, +uncsion enables Stage II only. Rejected for naive.
RetrievalOptions options_for(EvalSystem system);

// Fixed-size chunking for the baseline: consecutive messages per session.
struct NaiveChunk {
    std::string id; // "<session>#<ordinal>"
    std::string text;
    Vec embedding;
};

std::vector<NaiveChunk> naive_chunks(const MemoryHierarchy& h, EmbeddingProvider& embedder,
                                     std::size_t chunk_messages);

// Indices of the top-k chunks by cosine, descending; ties keep chunk order.
// Duplicate chunk texts may both appear.
std::vector<std::size_t> naive_topk(const Vec& query, const std::vector<NaiveChunk>& chunks,
                                    std::size_t k);

struct ItemResult {
    std::size_t index = 0;
    std::string question;
    std::string gold_answer;
    std::string category;
    std::string answer;
    double bleu1 = 0.0;
    double token_f1 = 0.0;
    double rouge_l = 0.0;
    TokenUsage tokens;
    std::vector<std::string> blocks; // intact context units, rank order
    EvidenceReport evidence;
    CoverageEfficiency coverage;
    bool failed = false;
    std::string error;
};

struct CategoryRow {
    std::string category;
    std::size_t items = 0;
    double bleu1 = 0.0;
    double token_f1 = 0.0;
    double rouge_l = 0.0;
    double tokens_per_query = 0.0;
};

struct EvalReport {
    EvalSystem system = EvalSystem::ours;
    std::vector<ItemResult> items;
    std::vector<CategoryRow> categories; // name order, then the average row
    std::array<double, 4> hit_proportions{}; // over all blocks, all scored items
    std::size_t blocks_total = 0;
    std::size_t covered_items = 0;
    std::size_t uncovered_items = 0;
    std::size_t undefined_items = 0;
    double mean_blocks_for_coverage = 0.0; // over covered items
    double mean_tokens_for_coverage = 0.0;
    std::size_t failures = 0;
};

// Scores every QA item; per-item failures are recorded and the run
// continues. Items are independent; parallelism > 1 distributes them over
// worker threads with order-independent aggregation.
EvalReport run_eval(const MemoryEngine& engine, const Dataset& dataset, EvalSystem system,
                    std::size_t parallelism = 1);

std::string eval_report_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

} // namespace xmem
