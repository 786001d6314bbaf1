#include "xmem/knn_graph.hpp"

#include "xmem/embedding.hpp"
#include "xmem/errors.hpp"

#include <algorithm>

namespace xmem {

namespace {

bool edge_before(const GraphEdge& a, const GraphEdge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.neighbor < b.neighbor;
}

} // namespace

std::vector<GraphEdge> NavGraph::scan_top_k(const std::string& id) const {
    const Vec& v = vectors_.at(id);
    std::vector<GraphEdge> all;
    for (const auto& [other, vec] : vectors_) {
        if (other == id) continue;
        double w = cosine(v, vec);
        if (w > 0.0) all.push_back({other, w});
    }
    std::sort(all.begin(), all.end(), edge_before);
    if (all.size() > k_) all.resize(k_);
    return all;
}

void NavGraph::upsert_node(const std::string& id, const Vec& vector) {
    if (!vectors_.empty() && vectors_.begin()->second.size() != vector.size())
        throw RejectedInput("graph vector dimension mismatch for " + id);

    const bool existed = vectors_.count(id) > 0;
    vectors_[id] = vector;
    adjacency_[id] = scan_top_k(id);

    for (auto& [other, edges] : adjacency_) {
        if (other == id) continue;
        double w = cosine(vectors_.at(other), vector);
        auto pos = std::find_if(edges.begin(), edges.end(),
                                [&](const GraphEdge& e) { return e.neighbor == id; });
        if (existed && pos != edges.end()) {
            // Weight changed under an existing edge; the stored list no
            // longer bounds the candidates, so rescan this node.
            edges = scan_top_k(other);
        } else if (w > 0.0) {
            GraphEdge cand{id, w};
            if (edges.size() < k_) {
                edges.insert(std::upper_bound(edges.begin(), edges.end(), cand, edge_before),
                             cand);
            } else if (edge_before(cand, edges.back())) {
                edges.insert(std::upper_bound(edges.begin(), edges.end(), cand, edge_before),
                             cand);
                edges.resize(k_);
            }
        }
    }
}

void NavGraph::remove_node(const std::string& id) {
    if (!vectors_.erase(id)) throw RejectedInput("remove_node: unknown id " + id);
    adjacency_.erase(id);
    for (auto& [other, edges] : adjacency_) {
        auto pos = std::find_if(edges.begin(), edges.end(),
                                [&](const GraphEdge& e) { return e.neighbor == id; });
        if (pos != edges.end()) {
            edges.erase(pos);
            // List may have been truncated at k; backfill from a full scan.
            edges = scan_top_k(other);
        }
    }
}

const std::vector<GraphEdge>& NavGraph::neighborhood(const std::string& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw RejectedInput("neighborhood: unknown id " + id);
    return it->second;
}

void NavGraph::restore(std::size_t k, std::map<std::string, Vec> vectors,
                       std::map<std::string, std::vector<GraphEdge>> adjacency) {
    k_ = k;
    vectors_ = std::move(vectors);
    adjacency_ = std::move(adjacency);
    for (const auto& [id, vec] : vectors_) {
        (void)vec;
        adjacency_.try_emplace(id);
    }
}

std::map<std::string, std::vector<GraphEdge>> brute_force_adjacency(
    const std::map<std::string, Vec>& vectors, std::size_t k) {
    std::map<std::string, std::vector<GraphEdge>> out;
    for (const auto& [id, v] : vectors) {
        std::vector<GraphEdge> all;
        for (const auto& [other, u] : vectors) {
            if (other == id) continue;
            double w = cosine(v, u);
            if (w > 0.0) all.push_back({other, w});
        }
        std::sort(all.begin(), all.end(), edge_before);
        if (all.size() > k) all.resize(k);
        out[id] = std::move(all);
    }
    return out;
}

} // namespace xmem
