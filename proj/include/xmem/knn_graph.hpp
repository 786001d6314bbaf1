#pragma once
// Top-k similarity edge graph over theme or semantic nodes. Directed per-node
// lists; only strictly positive weights are stored. Incremental updates keep
// every list equal to the brute-force top-k over the live node set.

#include "xmem/types.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace xmem {

struct GraphEdge {
    std::string neighbor;
    double weight = 0.0; // cosine at last update, in (0, 1]
};

class NavGraph {
public:
    explicit NavGraph(std::size_t k = 8) : k_(k) {}

    // Insert or update a node's vector. The node's own list is rebuilt; other
    // nodes are rescanned only when the change can affect their top-k.
    void upsert_node(const std::string& id, const Vec& vector);

    // Drops the node everywhere; neighbours whose lists shrank backfill from
    // the remaining candidates. Throws RejectedInput on unknown id.
    void remove_node(const std::string& id);

    // Stored list, descending weight, ties by ascending id.
    // Throws RejectedInput on unknown id.
    const std::vector<GraphEdge>& neighborhood(const std::string& id) const;

    bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
    std::size_t size() const { return vectors_.size(); }
    std::size_t k() const { return k_; }

    const std::map<std::string, std::vector<GraphEdge>>& adjacency() const { return adjacency_; }
    const std::map<std::string, Vec>& vectors() const { return vectors_; }

    // Rebuild from persisted state; adjacency is trusted as stored.
    void restore(std::size_t k, std::map<std::string, Vec> vectors,
                 std::map<std::string, std::vector<GraphEdge>> adjacency);

private:
    std::vector<GraphEdge> scan_top_k(const std::string& id) const;

    std::size_t k_;
    std::map<std::string, Vec> vectors_;
    std::map<std::string, std::vector<GraphEdge>> adjacency_;
};

// Reference implementation: full pairwise top-k. The oracle the incremental
// maintenance is tested against.
std::map<std::string, std::vector<GraphEdge>> brute_force_adjacency(
    const std::map<std::string, Vec>& vectors, std::size_t k);

} // namespace xmem
