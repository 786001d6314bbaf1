// Single-file JSON persistence for the whole engine state: hierarchy,
// both navigation graphs, the embedding cache, and the run configuration.
// Canonical sorted-key output makes stores diff-able and runs repeatable.
#pragma once

#include "xmem/config.hpp"
#include "xmem/engine.hpp"
#include "xmem/knn_graph.hpp"
#include "xmem/providers.hpp"
#include "xmem/types.hpp"

#include <map>
#include <string>

namespace xmem {

inline constexpr const char* kStoreSchemaVersion = "1";

struct StoreBundle {
    RunConfig config;
    MemoryHierarchy hierarchy;
    NavGraph theme_graph;
    NavGraph semantic_graph;
    std::map<std::string, Vec> cache_entries;
    std::string embedder_id; // provider that produced the stored vectors
};

// Exclusive ownership of a store file via a sibling ".lock" file; a held
// lock raises IoError. Released (unlinked) on destruction.
class StoreLock {
public:
    explicit StoreLock(const std::string& store_path);
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

    const std::string& lock_path() const { return lock_path_; }

private:
    std::string lock_path_;
    int fd_ = -1;
};

// Canonical JSON dump of the engine state; written atomically via a
// temporary sibling file.
void save_store(const std::string& path, const MemoryEngine& engine);

// Parses, checks the schema version (mismatches raise SchemaError naming
// both versions), and validates hierarchy integrity (problems raise
// ValidationError listing them, e.g. an externally edited centroid).
StoreBundle load_store(const std::string& path);

// Rebuilds the engine from a bundle. The suite's embedder must match the
// provider that produced the stored vectors; the cache is re-seeded from
// the bundle.
MemoryEngine engine_from_bundle(StoreBundle bundle, ProviderSuite suite);

// Suite selection for a config: offline providers or remote endpoints.
ProviderSuite make_suite(const RunConfig& config);

} // namespace xmem
