#pragma once
// Domain types of the four-level store: messages -> episodes -> semantics
// -> themes, plus the reassignment log and the partition view scored by the
// guidance objective.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace xmem {

using Vec = std::vector<double>;

// Epoch seconds, UTC. Minute resolution or better.
using TimePoint = std::int64_t;

// Parses "YYYY-MM-DDTHH:MM[:SS]" (also accepts a space separator).
// Throws RejectedInput on malformed input.
TimePoint parse_timestamp(const std::string& iso);
std::string format_timestamp(TimePoint t);

struct Message {
    std::string id;
    std::string speaker;
    TimePoint timestamp = 0;
    std::string text;
    std::string session_id;
};

struct Episode {
    std::string id;
    std::string title;
    std::string content;       // third-person narrative
    TimePoint timestamp = 0;
    std::vector<std::string> message_ids; // contiguous block of one session
    Vec embedding;             // unit vector over title + content
};

struct SemanticNode {
    std::string id;
    std::string statement;     // one declarative fact
    std::vector<std::string> source_episode_ids;
    std::string theme_id;      // exactly one theme
    Vec embedding;             // unit vector
};

struct Theme {
    std::string id;
    std::string summary;
    std::vector<std::string> member_ids; // semantic node ids, size n_k >= 1
    Vec centroid;              // normalised mean of member embeddings
};

enum class ReassignCause { attach, split, merge };

const char* to_string(ReassignCause c);
ReassignCause reassign_cause_from_string(const std::string& s);

struct ReassignmentEvent {
    std::string semantic_id;
    std::string old_theme;     // empty on first attach
    std::string new_theme;
    ReassignCause cause = ReassignCause::attach;
};

// Assignment of semantic nodes to themes; the object the guidance function
// scores.
struct ThemePartition {
    std::map<std::string, std::string> assignments; // semantic_id -> theme_id
    std::vector<std::size_t> sizes;                 // {n_k}, theme-id order
    std::size_t theme_count = 0;                    // K
    std::size_t semantic_count = 0;                 // N
};

struct MemoryHierarchy {
    int dimension = 0; // fixed at creation; inserts with other dims rejected

    std::map<std::string, Message> messages;
    std::map<std::string, Episode> episodes;
    std::map<std::string, SemanticNode> semantics;
    std::map<std::string, Theme> themes;

    std::vector<ReassignmentEvent> reassignment_log;

    // Insertion order per session; episode contiguity is defined against it.
    std::map<std::string, std::vector<std::string>> session_order;

    // Monotonic id counters (level-prefixed ids, deterministic replay).
    std::uint64_t next_message = 1;
    std::uint64_t next_episode = 1;
    std::uint64_t next_semantic = 1;
    std::uint64_t next_theme = 1;

    std::string new_message_id() { return make_id("msg", next_message++); }
    std::string new_episode_id() { return make_id("ep", next_episode++); }
    std::string new_semantic_id() { return make_id("sem", next_semantic++); }
    std::string new_theme_id() { return make_id("th", next_theme++); }

    static std::string make_id(const char* prefix, std::uint64_t n);
};

} // namespace xmem
