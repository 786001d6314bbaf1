// Guidance-function scoring and guided restructuring (attach / split / merge).
//
// The partition of semantic nodes into themes is scored by
//   f(P) = SparsityScore(P) + SemScore(P)
// where SparsityScore = N^2 / (K * sum n_k^2) rewards balanced theme sizes and
// SemScore averages per-theme cohesion weighted by a bell-shaped regularizer
// of nearest-centroid similarity.  Split and merge pick the candidate
// restructuring that maximises f; every move is logged so the reassignment
// ratio can be reported.
#pragma once

#include "xmem/knn_graph.hpp"
#include "xmem/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace xmem {

struct GuidanceScore {
    double sparsity = 0.0; // in (0, 1]
    double semantic = 0.0; // in [-1, 1]
    double total = 0.0;    // sparsity + semantic
};

struct StructureConfig {
    std::size_t theme_cap = 12;          // max semantic nodes per theme
    std::size_t split_candidate_count = 5; // k-means restarts per way-count
    std::size_t merge_neighbor_count = 3;  // nearest themes considered by merge
    std::size_t tiny_theme_size = 2;       // merge eligibility threshold
    double epsilon = 1e-6;                 // sigma = MAD + epsilon in g(s)
    std::size_t knn_k = 8;                 // theme-graph out-degree
    double attach_threshold = 0.40;        // below this, attach opens a new theme
    std::size_t merge_sweep_interval = 25; // insertions between merge sweeps
    bool enable_split = true;
    bool enable_merge = true;
    std::uint64_t rng_seed = 1;
};

struct FanoParams {
    double bits = 2.0;            // discriminative mutual information B
    double target_accuracy = 0.85; // in (0, 1)
};

// Largest admissible per-theme candidate count, 2^((B+1)/accuracy), rounded
// half-up so the canonical (B=2, acc=0.85) example lands on 12.
std::size_t fano_cap(const FanoParams& params);

// N^2 / (K * sum n_k^2); in (0,1], equal to 1 iff all sizes match.
double sparsity_score(const std::vector<std::size_t>& sizes);

// exp(-(s - m)^2 / (2 sigma^2)); peak 1 at s = m, symmetric about m.
double gaussian_regularizer(double s, double m, double sigma);

struct SemScoreBreakdown {
    std::vector<std::string> theme_ids;
    std::vector<double> cohesion;      // mean member-to-centroid cosine
    std::vector<double> neighbor_sim;  // s_k = max_{j != k} cos(mu_k, mu_j)
    std::vector<double> regularizer;   // g(s_k)
    double median_sim = 0.0;           // m
    double sigma = 0.0;                // MAD + epsilon
    double score = 0.0;                // (1/K) sum cohesion_k * g(s_k)
};

SemScoreBreakdown sem_score_breakdown(const MemoryHierarchy& h, double epsilon);
double sem_score(const MemoryHierarchy& h, double epsilon);

// Scores the live partition; centroids are recomputed from members so the
// result is independent of stored-centroid staleness.
GuidanceScore guidance(const MemoryHierarchy& h, double epsilon);

// Fraction of distinct semantic ids ever moved by split or merge.
double reassignment_ratio(const MemoryHierarchy& h);

struct SplitCandidate {
    std::vector<std::vector<std::string>> groups; // member ids per new theme
    double guidance_total = 0.0;
    std::size_t ways = 0;         // target cluster count
    std::uint64_t seed = 0;       // restart seed (0 for the fallback)
    bool degenerate = false;      // clustering collapsed; not scored
    bool fallback = false;        // balanced bisection path
};

struct SplitReport {
    std::string source_theme_id;
    std::vector<SplitCandidate> candidates;
    std::size_t chosen_index = 0;
    std::vector<std::string> new_theme_ids; // after recursion, all <= cap
};

struct MergeOption {
    std::string target_theme_id; // empty = keep-as-is
    double guidance_total = 0.0;
    bool feasible = true;        // false when the merge would exceed the cap
};

struct MergeReport {
    std::string tiny_theme_id;
    std::vector<MergeOption> options; // keep first, then neighbours
    std::string applied_target_id;    // empty = kept as-is
};

// Serialized-writer owner of all partition mutations.  The optional theme
// graph is kept in sync with centroid changes; the summarizer renames themes
// whose membership changed (defaults to a truncation of the joined
// statements when unset).
class StructureManager {
public:
    StructureManager(MemoryHierarchy& h, StructureConfig config,
                     NavGraph* theme_graph = nullptr);

    using Summarizer = std::function<std::string(const std::vector<std::string>&)>;
    void set_summarizer(Summarizer s) { summarizer_ = std::move(s); }

    const StructureConfig& config() const { return config_; }

    // Inserts the node, assigns it to the most similar theme (or a new one
    // when similarity < attach_threshold), splits the receiving theme if it
    // now exceeds the cap, and returns the node's final theme id.
    std::string attach_semantic(const SemanticNode& draft);

    // Repartitions an over-cap theme into the candidate split maximising the
    // guidance total; recurses until every resulting theme fits the cap.
    SplitReport split_theme(const std::string& theme_id);

    // Considers absorbing a tiny theme into each of its nearest neighbours;
    // applies the variant maximising the guidance total (keep included).
    MergeReport merge_theme(const std::string& tiny_theme_id);

    // Runs merge over every tiny theme present at sweep start, ascending id.
    std::vector<MergeReport> merge_sweep();

    // Call after each semantic insertion; runs a merge sweep every
    // merge_sweep_interval insertions.  Returns true when a sweep ran.
    bool note_insertion();

    std::size_t insertions_since_sweep() const { return insertions_since_sweep_; }
    std::size_t split_count() const { return split_count_; }
    std::size_t merge_count() const { return merge_count_; }

private:
    std::string summarize(const std::vector<std::string>& member_ids) const;
    void refresh_graph_node(const std::string& theme_id);
    void drop_graph_node(const std::string& theme_id);

    MemoryHierarchy& h_;
    StructureConfig config_;
    NavGraph* theme_graph_ = nullptr;
    Summarizer summarizer_;
    std::size_t insertions_since_sweep_ = 0;
    std::size_t split_count_ = 0;
    std::size_t merge_count_ = 0;
};

} // namespace xmem
