#pragma once
// Shared fixture builders: unit vectors, light hierarchies for the scoring
// and retrieval math, and a fully linked hierarchy for validate/store tests.

#include "xmem/hierarchy.hpp"
#include "xmem/types.hpp"
#include "xmem/vecops.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

#ifndef XMEM_TEST_DATA_DIR
#define XMEM_TEST_DATA_DIR "tests/data"
#endif

namespace testutil {

inline std::string dataset_path() {
    return std::string(XMEM_TEST_DATA_DIR) + "/synthetic.json";
}

// Two short single-topic sessions plus three QA items; big enough to ingest
// and answer against, small enough to reason about by hand.
inline const char* small_dataset_json() {
    return R"({
  "conversation": {
    "sessions": [
      {
        "session_id": "s1",
        "turns": [
          {"speaker": "alice", "timestamp": "2024-03-14T15:00:00",
           "text": "My Fuji gravel bike needs a new chain."},
          {"speaker": "bob", "timestamp": "2024-03-14T15:05:00",
           "text": "The chain on the Fuji measures twelve speed."},
          {"speaker": "alice", "timestamp": "2024-03-14T15:10:00",
           "text": "I ordered the twelve speed chain from the Brighton shop."}
        ]
      },
      {
        "session_id": "s2",
        "turns": [
          {"speaker": "alice", "timestamp": "2024-03-20T09:00:00",
           "text": "Bruno started a sourdough starter named Clyde."},
          {"speaker": "bob", "timestamp": "2024-03-20T09:05:00",
           "text": "Clyde the starter doubled within five hours."},
          {"speaker": "alice", "timestamp": "2024-03-20T09:10:00",
           "text": "Bruno bakes the sourdough every Saturday morning."}
        ]
      }
    ]
  },
  "qa": [
    {"question": "What bike does Alice own?", "answer": "a Fuji gravel bike",
     "category": "single-hop"},
    {"question": "Who started the sourdough starter?", "answer": "Bruno",
     "category": "single-hop"},
    {"question": "What is the starter named?", "answer": "Clyde",
     "category": "multi-hop"}
  ]
})";
}

inline xmem::Vec basis(int dim, int index) {
    xmem::Vec v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(index)] = 1.0;
    return v;
}

inline xmem::Vec unit(xmem::Vec v) {
    xmem::vecops::normalize_inplace(v);
    return v;
}

inline xmem::Vec random_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    xmem::Vec v(static_cast<std::size_t>(dim));
    do {
        for (auto& x : v) x = gauss(rng);
    } while (!xmem::vecops::normalize_inplace(v));
    return v;
}

// Semantic node without episode links; enough for scoring, structure and
// Stage-I tests (which never run validate()).
inline void light_semantic(xmem::MemoryHierarchy& h, const std::string& id,
                           const std::string& theme_id, xmem::Vec embedding,
                           const std::string& statement = "") {
    xmem::SemanticNode node;
    node.id = id;
    node.statement = statement.empty() ? "statement " + id : statement;
    node.theme_id = theme_id;
    node.embedding = std::move(embedding);
    h.semantics[id] = std::move(node);
}

// Theme over existing semantics; centroid recomputed from the members.
inline void light_theme(xmem::MemoryHierarchy& h, const std::string& id,
                        std::vector<std::string> member_ids,
                        const std::string& summary = "") {
    xmem::Theme theme;
    theme.id = id;
    theme.summary = summary.empty() ? "summary " + id : summary;
    theme.member_ids = std::move(member_ids);
    h.themes[id] = theme;
    h.themes[id].centroid = xmem::recompute_centroid(h, h.themes[id]);
}

// One message -> one episode -> one semantic -> one theme, every invariant
// satisfied. The base fixture the validate tests then break one way each.
inline xmem::MemoryHierarchy valid_hierarchy(int dim = 4) {
    xmem::MemoryHierarchy h;
    h.dimension = dim;

    std::string mid = xmem::add_message(h, "alice", xmem::parse_timestamp("2024-03-14T15:00:00"),
                                        "Alice rode her bike.", "s1");

    xmem::Episode ep;
    ep.id = h.new_episode_id();
    ep.title = "Bike ride";
    ep.content = "Alice rode her bike.";
    ep.timestamp = xmem::parse_timestamp("2024-03-14T15:00:00");
    ep.message_ids = {mid};
    ep.embedding = basis(dim, 0);
    h.episodes[ep.id] = ep;

    xmem::SemanticNode sem;
    sem.id = h.new_semantic_id();
    sem.statement = "Alice rides a bike.";
    sem.source_episode_ids = {ep.id};
    sem.embedding = basis(dim, 0);
    h.semantics[sem.id] = sem;

    xmem::Theme theme;
    theme.id = h.new_theme_id();
    theme.summary = "cycling";
    theme.member_ids = {sem.id};
    theme.centroid = basis(dim, 0);
    h.themes[theme.id] = theme;
    h.semantics[sem.id].theme_id = theme.id;

    return h;
}

} // namespace testutil
