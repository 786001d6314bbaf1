// Run-wide configuration. Every CLI flag maps to exactly one field here;
// there are no hidden knobs.
#pragma once

#include "xmem/structure.hpp"

#include <cstdint>
#include <string>

namespace xmem {

// Stage I: greedy coverage/relevance representative selection.
struct Stage1Params {
    double alpha = 0.5;            // coverage vs relevance blend in [0,1]
    double coverage_target = 0.8;  // stop when |C(R)|/|V| reaches this
    std::size_t max_theme_representatives = 5;
    std::size_t max_semantic_representatives = 10;
    std::size_t candidate_pool = 20; // M: initial semantic candidates
};

// Stage II: uncertainty-gated evidence inclusion.
struct Stage2Params {
    double uncertainty_drop_min = 0.05; // delta: minimum drop to admit a unit
    std::size_t patience = 2;           // tau: consecutive failures before stop
    bool expand_messages = true;        // try raw message blocks under the gate
};

struct RunConfig {
    StructureConfig structure;
    FanoParams fano;
    Stage1Params stage1;
    Stage2Params stage2;

    double beta = 0.5;          // episode ranking: similarity vs support blend
    std::size_t budget = 1024;  // max context tokens per query
    std::string answer_style = "short"; // "short" phrase or "sentence"

    std::size_t dimension = 256;
    std::uint64_t seed = 1;
    bool offline = true;
    std::size_t parallelism = 1;

    std::size_t naive_top_k = 20;       // baseline: chunks retrieved
    std::size_t naive_chunk_messages = 4; // baseline: messages per chunk

    std::string embed_url;
    std::string embed_model = "text-embed";
    std::size_t embed_batch_limit = 64;
    std::string chat_url;
    std::string chat_model = "chat";
};

} // namespace xmem
