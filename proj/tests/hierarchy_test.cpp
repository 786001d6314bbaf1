// Link-invariant validation: a fully valid base fixture broken one way per
// case, each producing exactly the expected violation entry.
#include "xmem/hierarchy.hpp"

#include "xmem/errors.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace xmem;

TEST_CASE("empty hierarchy is vacuously valid") {
    MemoryHierarchy h;
    h.dimension = 4;
    CHECK(validate(h).empty());
}

TEST_CASE("base fixture is valid") {
    CHECK(validate(testutil::valid_hierarchy()).empty());
}

TEST_CASE("dangling theme link is reported") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    h.semantics.begin()->second.theme_id = "th-missing";
    auto violations = validate(h);
    // The dangling link plus the orphaned member listing on the real theme.
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("dangling theme link") != std::string::npos);
}

TEST_CASE("stale centroid is reported") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    Theme& theme = h.themes.begin()->second;
    // Drift the stored centroid by ~0.01 while keeping it unit length, so
    // freshness is the only failing check.
    theme.centroid = testutil::unit({1.0, 0.01, 0.0, 0.0});
    auto violations = validate(h);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("stale centroid") != std::string::npos);
}

TEST_CASE("timestamp regression is reported") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    std::string m2 = h.new_message_id();
    h.messages[m2] = Message{m2, "bob", parse_timestamp("2024-03-14T14:00:00"), "earlier", "s1"};
    h.session_order["s1"].push_back(m2); // one hour before the first message
    // Keep episode coverage untouched; only the ordering check should fire.
    auto violations = validate(h);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("timestamp regression") != std::string::npos);
}

TEST_CASE("episode spanning sessions is reported") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    std::string m2 = add_message(h, "bob", parse_timestamp("2024-03-14T15:05:00"), "hi", "s2");
    h.episodes.begin()->second.message_ids.push_back(m2);
    auto violations = validate(h);
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("episode spans sessions") != std::string::npos);
}

TEST_CASE("non-contiguous episode block is reported") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    std::string m2 = add_message(h, "bob", parse_timestamp("2024-03-14T15:05:00"), "mid", "s1");
    std::string m3 = add_message(h, "alice", parse_timestamp("2024-03-14T15:06:00"), "end", "s1");
    Episode& ep = h.episodes.begin()->second;
    ep.message_ids.push_back(m3); // skips m2
    auto violations = validate(h);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("not contiguous") != std::string::npos);
}

TEST_CASE("member and size bookkeeping violations") {
    MemoryHierarchy h = testutil::valid_hierarchy();
    Theme& theme = h.themes.begin()->second;
    theme.member_ids.clear();
    auto violations = validate(h);
    bool empty_theme = false, sizes = false, membership = false;
    for (const auto& v : violations) {
        if (v.find("empty theme") != std::string::npos) empty_theme = true;
        if (v.find("sum to") != std::string::npos) sizes = true;
        if (v.find("theme does not list member") != std::string::npos) membership = true;
    }
    CHECK(empty_theme);
    CHECK(sizes);
    CHECK(membership);
}

TEST_CASE("build_partition derives sizes and assignments") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "c", "t2", testutil::basis(4, 1));
    testutil::light_theme(h, "t1", {"a", "b"});
    testutil::light_theme(h, "t2", {"c"});

    ThemePartition p = build_partition(h);
    CHECK(p.theme_count == 2);
    CHECK(p.semantic_count == 3);
    CHECK(p.sizes == std::vector<std::size_t>{2, 1});
    CHECK(p.assignments.at("a") == "t1");
    CHECK(p.assignments.at("c") == "t2");
}

TEST_CASE("recompute_centroid averages members and survives cancellation") {
    MemoryHierarchy h;
    h.dimension = 2;
    testutil::light_semantic(h, "a", "t1", testutil::basis(2, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(2, 1));
    testutil::light_theme(h, "t1", {"a", "b"});
    Vec c = recompute_centroid(h, h.themes.at("t1"));
    CHECK(c[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(c[1] == doctest::Approx(1.0 / std::sqrt(2.0)));

    // Antipodal members cancel; falls back to the first member.
    Vec neg = testutil::basis(2, 0);
    neg[0] = -1.0;
    testutil::light_semantic(h, "n", "t2", neg);
    testutil::light_semantic(h, "p", "t2", testutil::basis(2, 0));
    testutil::light_theme(h, "t2", {"n", "p"});
    Vec c2 = recompute_centroid(h, h.themes.at("t2"));
    CHECK(c2 == h.semantics.at("n").embedding);
}

TEST_CASE("add_message rejects bad input") {
    MemoryHierarchy h;
    h.dimension = 4;
    CHECK_THROWS_AS(add_message(h, "alice", 0, "", "s1"), RejectedInput);
    add_message(h, "alice", parse_timestamp("2024-03-14T10:00:00"), "ok", "s1");
    CHECK_THROWS_AS(
        add_message(h, "alice", parse_timestamp("2024-03-14T09:00:00"), "early", "s1"),
        RejectedInput);
}

TEST_CASE("timestamp parsing") {
    CHECK(parse_timestamp("2024-03-14T15:00:00") == parse_timestamp("2024-03-14 15:00:00"));
    CHECK(parse_timestamp("2024-03-14T15:00") == parse_timestamp("2024-03-14T15:00:00"));
    CHECK(format_timestamp(parse_timestamp("2024-03-14T15:00:00")) == "2024-03-14T15:00:00");
    CHECK_THROWS_AS(parse_timestamp("last tuesday"), RejectedInput);
    CHECK_THROWS_AS(parse_timestamp("2024-13-14T15:00:00"), RejectedInput);
}
