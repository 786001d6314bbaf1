#pragma once
// Text utilities shared by the embedder, the rule-based distiller and the
// metrics: tokenisation, stopwords, sentence splitting, token counting.

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace xmem::text {

// Maximal runs of [a-z0-9] after lowercasing. Used by the deterministic
// embedder (bag-of-tokens, order-invariant).
std::vector<std::string> alnum_tokens(std::string_view s);

// Metric tokenisation: lowercase, strip punctuation, split on whitespace.
// '-' and '/' between alphanumerics survive so dates like 2024-03-14 stay
// one token.
std::vector<std::string> metric_tokens(std::string_view s);

// metric_tokens minus stopwords.
std::vector<std::string> content_tokens(std::string_view s);

// Distinct content tokens, insertion-ordered.
std::vector<std::string> distinct_content_tokens(std::string_view s);

bool is_stopword(const std::string& token);
const std::unordered_set<std::string>& stopword_list();

// Naive sentence split on [.!?] followed by whitespace or end of text.
std::vector<std::string> sentences(std::string_view s);

// Whitespace-delimited token count; the offline token accounting unit.
std::size_t count_tokens(std::string_view s);

std::string lowercase(std::string_view s);

// Canonical form for statement dedup: lowercased content characters only.
std::string normalized_statement(std::string_view s);

// 64-bit FNV-style XOR/multiply hash (FNV prime, project-fixed basis);
// stable across platforms and runs, used for embedding buckets and cache
// keys. Not wire-compatible with canonical FNV-1a.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 1469598103934665603ULL);

// Bag of token counts (alnum tokens).
std::unordered_map<std::string, int> token_counts(std::string_view s);

// |distinct(a) ∩ distinct(b)| / |distinct(a)|, over alnum tokens; 0 when a
// has none. The rule-based boundary detector's topic-overlap signal.
double overlap_ratio(std::string_view a, std::string_view b);

} // namespace xmem::text
