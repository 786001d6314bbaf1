// Answer-quality metrics (BLEU-1, token F1, ROUGE-L) and the evidence
// analyses: per-block hit-density classes and greedy coverage efficiency.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace xmem {

// Unigram modified precision with brevity penalty, unsmoothed. An empty
// candidate scores 0.0; an empty reference is rejected.
double bleu1(const std::string& candidate, const std::string& reference);

// Harmonic mean of multiset token precision and recall over metric tokens.
// Both sides empty scores 1.0 by convention.
double token_f1(const std::string& candidate, const std::string& reference);

// Longest-common-subsequence F-measure over metric tokens. Empty-side
// conventions follow token_f1.
double rouge_l(const std::string& candidate, const std::string& reference);

// Distinct answer content tokens found in a block: none, one, two, or
// three-plus.
enum class HitClass { zero = 0, one = 1, two = 2, multi = 3 };

struct EvidenceReport {
    std::vector<HitClass> block_classes;   // one class per retrieved block
    std::array<double, 4> proportions{};   // indexed by HitClass; sum to 1
    bool undefined = false;                // gold answer has no content tokens
};

EvidenceReport classify_hits(const std::vector<std::string>& blocks,
                             const std::string& gold_answer);

struct CoverageEfficiency {
    bool covered = false;              // false = "uncovered": some token in no block
    std::size_t blocks_for_coverage = 0;
    std::size_t tokens_for_coverage = 0; // summed whitespace-token lengths
    bool undefined = false;            // gold answer has no content tokens
};

// Greedy set cover over the answer's distinct content tokens: repeatedly
// take the block covering the most uncovered tokens, ties by retrieval
// rank (earlier wins).
CoverageEfficiency coverage_efficiency(const std::vector<std::string>& blocks,
                                       const std::string& gold_answer);

} // namespace xmem
