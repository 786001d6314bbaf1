#pragma once
// Cross-level link invariants and the validate() sweep every other module
// relies on. Violations are reported as data, one entry per offending id.

#include "xmem/types.hpp"

#include <string>
#include <vector>

namespace xmem {

// Normalised mean of the member embeddings. Falls back to the first
// member's embedding when the mean degenerates to ~0.
Vec recompute_centroid(const MemoryHierarchy& h, const Theme& theme);

// Derives the partition view (assignments, sizes, K, N) from theme
// membership.
ThemePartition build_partition(const MemoryHierarchy& h);

// Empty iff every type invariant holds: non-empty texts, per-session
// timestamp order, contiguous episode blocks, bidirectional links, unit
// embeddings of the store dimension, fresh centroids, sizes summing to N.
std::vector<std::string> validate(const MemoryHierarchy& h);

// Insert helpers; reject dimension mismatches and broken preconditions.
std::string add_message(MemoryHierarchy& h, const std::string& speaker,
                        TimePoint timestamp, const std::string& text,
                        const std::string& session_id);

} // namespace xmem
