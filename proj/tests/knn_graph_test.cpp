// Incremental kNN navigation graph: list maintenance under inserts, updates
// and removals must stay equal to the brute-force top-k oracle.
#include "xmem/knn_graph.hpp"

#include "xmem/errors.hpp"
#include "xmem/vecops.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <random>
#include <string>
#include <vector>

using namespace xmem;

namespace {

// Compares a live graph's adjacency to the brute-force oracle on its vectors.
void check_matches_oracle(const NavGraph& g) {
    auto oracle = brute_force_adjacency(g.vectors(), g.k());
    REQUIRE(g.adjacency().size() == oracle.size());
    for (const auto& [id, expected] : oracle) {
        const auto& actual = g.neighborhood(id);
        REQUIRE(actual.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(actual[i].neighbor == expected[i].neighbor);
            CHECK(actual[i].weight == doctest::Approx(expected[i].weight).epsilon(1e-12));
        }
    }
}

} // namespace

TEST_CASE("first node has an empty neighbourhood") {
    NavGraph g(4);
    g.upsert_node("a", testutil::basis(4, 0));
    CHECK(g.size() == 1);
    CHECK(g.contains("a"));
    CHECK(g.neighborhood("a").empty());
}

TEST_CASE("duplicate vectors link with weight one") {
    NavGraph g(4);
    g.upsert_node("a", testutil::basis(4, 0));
    g.upsert_node("b", testutil::basis(4, 0));
    REQUIRE(g.neighborhood("a").size() == 1);
    CHECK(g.neighborhood("a")[0].neighbor == "b");
    CHECK(g.neighborhood("a")[0].weight == doctest::Approx(1.0));
    REQUIRE(g.neighborhood("b").size() == 1);
    CHECK(g.neighborhood("b")[0].neighbor == "a");
}

TEST_CASE("orthogonal vectors stay unlinked") {
    NavGraph g(4);
    for (int i = 0; i < 4; ++i)
        g.upsert_node("n" + std::to_string(i), testutil::basis(4, i));
    for (int i = 0; i < 4; ++i)
        CHECK(g.neighborhood("n" + std::to_string(i)).empty()); // only positive weights stored
}

TEST_CASE("neighbourhood is ordered by weight then id") {
    NavGraph g(8);
    g.upsert_node("q", testutil::basis(4, 0));
    // Same similarity to q; the tie breaks on ascending id.
    Vec tilted = testutil::unit({1.0, 1.0, 0.0, 0.0});
    g.upsert_node("z", tilted);
    g.upsert_node("m", tilted);
    g.upsert_node("close", testutil::unit({1.0, 0.2, 0.0, 0.0}));

    const auto& edges = g.neighborhood("q");
    REQUIRE(edges.size() == 3);
    CHECK(edges[0].neighbor == "close");
    CHECK(edges[1].neighbor == "m");
    CHECK(edges[2].neighbor == "z");
    CHECK(edges[1].weight == doctest::Approx(edges[2].weight));
    CHECK_THROWS_AS(g.neighborhood("missing"), RejectedInput);
}

TEST_CASE("removing the sole node empties the graph") {
    NavGraph g(4);
    g.upsert_node("a", testutil::basis(4, 0));
    g.remove_node("a");
    CHECK(g.size() == 0);
    CHECK_FALSE(g.contains("a"));
    CHECK_THROWS_AS(g.remove_node("a"), RejectedInput);
}

TEST_CASE("removing one of two leaves the survivor isolated") {
    NavGraph g(4);
    g.upsert_node("a", testutil::basis(4, 0));
    g.upsert_node("b", testutil::basis(4, 0));
    g.remove_node("b");
    CHECK(g.size() == 1);
    CHECK(g.neighborhood("a").empty());
}

TEST_CASE("hub removal backfills every truncated list") {
    // A hub similar to everyone, plus satellites that only weakly see each
    // other. With k=2 every satellite lists the hub; removing it must pull
    // the next-best satellite back in.
    NavGraph g(2);
    g.upsert_node("hub", testutil::unit({1.0, 1.0, 1.0, 1.0}));
    for (int i = 0; i < 6; ++i) {
        Vec v = testutil::basis(4, i % 4);
        v[std::size_t((i + 1) % 4)] = 0.3;
        v[std::size_t((i + 2) % 4)] = 0.1 * (i + 1);
        g.upsert_node("s" + std::to_string(i), testutil::unit(v));
    }
    check_matches_oracle(g);
    g.remove_node("hub");
    check_matches_oracle(g);
    for (const auto& [id, edges] : g.adjacency())
        for (const auto& e : edges) CHECK(e.neighbor != "hub");
}

TEST_CASE("randomised maintenance matches the brute-force oracle") {
    const std::size_t dim = 8;
    NavGraph g(5);
    std::mt19937_64 rng(2024);
    std::vector<std::string> live;

    for (int step = 0; step < 240; ++step) {
        double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (live.empty() || (roll < 0.55 && live.size() < 60)) {
            std::string id = "v" + std::to_string(step);
            g.upsert_node(id, testutil::random_unit(rng, dim));
            live.push_back(id);
        } else if (roll < 0.8) { // update an existing vector
            std::size_t pick = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
            g.upsert_node(live[pick], testutil::random_unit(rng, dim));
        } else {
            std::size_t pick = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
            g.remove_node(live[pick]);
            live.erase(live.begin() + std::ptrdiff_t(pick));
        }
        if (step % 16 == 0) check_matches_oracle(g);
    }
    check_matches_oracle(g);

    // Structural invariants on the final state.
    for (const auto& [id, edges] : g.adjacency()) {
        CHECK(edges.size() <= g.k());
        for (const auto& e : edges) {
            CHECK(e.neighbor != id); // no self-edges
            CHECK(e.weight > 0.0);
            CHECK(e.weight <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("restore reproduces the saved graph verbatim") {
    NavGraph g(3);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i)
        g.upsert_node("n" + std::to_string(i), testutil::random_unit(rng, 4));

    NavGraph copy(1); // wrong k, replaced by restore
    copy.restore(g.k(), g.vectors(), g.adjacency());
    CHECK(copy.k() == 3);
    CHECK(copy.size() == 10);
    REQUIRE(copy.adjacency().size() == g.adjacency().size());
    for (const auto& [id, edges] : g.adjacency()) {
        const auto& restored = copy.neighborhood(id);
        REQUIRE(restored.size() == edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            CHECK(restored[i].neighbor == edges[i].neighbor);
            CHECK(restored[i].weight == edges[i].weight);
        }
    }
    // The restored graph keeps maintaining correctly.
    copy.upsert_node("extra", testutil::random_unit(rng, 4));
    check_matches_oracle(copy);
}
