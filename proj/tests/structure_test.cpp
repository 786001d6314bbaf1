// Guidance scoring (sparsity, bell regulariser, semantic cohesion) and the
// guided restructuring operations: attach, split, merge, the Fano cap and
// the reassignment ratio.
#include "xmem/structure.hpp"

#include "xmem/errors.hpp"
#include "xmem/hierarchy.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace xmem;

TEST_CASE("sparsity score fixtures") {
    CHECK(sparsity_score({4, 4, 4}) == 1.0); // balanced: exact
    CHECK(sparsity_score({10, 1, 1}) == doctest::Approx(144.0 / 306.0).epsilon(1e-9));
    CHECK(sparsity_score({10, 1, 1}) == doctest::Approx(0.470588).epsilon(1e-6));
    CHECK(sparsity_score({5}) == 1.0); // single theme is trivially balanced
    CHECK_THROWS_AS(sparsity_score({}), RejectedInput);
    CHECK_THROWS_AS(sparsity_score({3, 0}), RejectedInput);
}

TEST_CASE("sparsity bounds, uniformity, and transfer majorization") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> k_dist(1, 8);
    std::uniform_int_distribution<std::size_t> n_dist(1, 20);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::size_t> sizes(k_dist(rng));
        for (auto& s : sizes) s = n_dist(rng);

        double score = sparsity_score(sizes);
        CHECK(score > 0.0);
        CHECK(score <= 1.0);

        bool uniform = std::all_of(sizes.begin(), sizes.end(),
                                   [&](std::size_t s) { return s == sizes[0]; });
        CHECK((score == 1.0) == uniform);

        // Move one node from a strictly larger theme to a strictly smaller
        // one. A gap of >= 2 strictly increases the score; a gap of exactly
        // 1 swaps the two sizes and leaves the multiset (hence the score)
        // unchanged.
        auto mx = std::max_element(sizes.begin(), sizes.end());
        auto mn = std::min_element(sizes.begin(), sizes.end());
        if (*mx > *mn) {
            std::vector<std::size_t> moved = sizes;
            moved[std::size_t(mx - sizes.begin())] -= 1;
            moved[std::size_t(mn - sizes.begin())] += 1;
            if (*mx - *mn >= 2) {
                CHECK(sparsity_score(moved) > score);
            } else {
                CHECK(sparsity_score(moved) == doctest::Approx(score).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("gaussian regulariser fixtures and symmetry") {
    CHECK(gaussian_regularizer(0.3, 0.3, 0.1) == 1.0); // peak at the median
    CHECK(gaussian_regularizer(0.4, 0.3, 0.1) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-9)); // m + sigma
    CHECK(gaussian_regularizer(0.2, 0.3, 0.1) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-9)); // m - sigma
    CHECK_THROWS_AS(gaussian_regularizer(0.3, 0.3, 0.0), RejectedInput);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double m = uni(rng), x = uni(rng), sigma = std::abs(uni(rng)) + 1e-3;
        double g = gaussian_regularizer(m + x, m, sigma);
        CHECK(g <= 1.0);
        CHECK(g == doctest::Approx(gaussian_regularizer(m - x, m, sigma)).epsilon(1e-12));
        if (x != 0.0) CHECK(g < 1.0);
    }
}

TEST_CASE("sem score: orthogonal singletons hit the maximum") {
    MemoryHierarchy h;
    h.dimension = 4;
    for (int i = 0; i < 3; ++i) {
        std::string sid = "s" + std::to_string(i);
        testutil::light_semantic(h, sid, "t" + std::to_string(i), testutil::basis(4, i));
        testutil::light_theme(h, "t" + std::to_string(i), {sid});
    }
    // Cohesion 1 everywhere and identical s_k, so every g is 1.
    CHECK(sem_score(h, 1e-6) == doctest::Approx(1.0).epsilon(1e-9));

    GuidanceScore g = guidance(h, 1e-6);
    CHECK(g.sparsity == doctest::Approx(1.0));
    CHECK(g.total == doctest::Approx(2.0).epsilon(1e-9)); // balanced singleton partition
    CHECK(g.total == g.sparsity + g.semantic);
}

TEST_CASE("sem score: K=1 falls back to plain cohesion") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(4, 1));
    testutil::light_theme(h, "t1", {"a", "b"});
    // Centroid is the diagonal; both members sit at cos 1/sqrt(2).
    CHECK(sem_score(h, 1e-6) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

    SemScoreBreakdown bd = sem_score_breakdown(h, 1e-6);
    REQUIRE(bd.regularizer.size() == 1);
    CHECK(bd.regularizer[0] == 1.0); // no neighbour exists; g defined as 1
}

TEST_CASE("sem score breakdown recomputes m and sigma per call") {
    MemoryHierarchy h;
    h.dimension = 8;
    // Two near-identical themes and one isolated one: the isolated theme's
    // s_k falls far from the median, so its g collapses toward zero.
    testutil::light_semantic(h, "a", "t1", testutil::basis(8, 0));
    testutil::light_semantic(h, "b", "t2", testutil::unit({0.9, 0.1, 0, 0, 0, 0, 0, 0}));
    testutil::light_semantic(h, "c", "t3", testutil::basis(8, 7));
    testutil::light_theme(h, "t1", {"a"});
    testutil::light_theme(h, "t2", {"b"});
    testutil::light_theme(h, "t3", {"c"});

    SemScoreBreakdown bd = sem_score_breakdown(h, 1e-6);
    REQUIRE(bd.theme_ids.size() == 3);
    CHECK(bd.median_sim > 0.9);
    // t3 is the island: s_3 = 0 while the median is ~0.99.
    std::size_t island = std::size_t(std::find(bd.theme_ids.begin(), bd.theme_ids.end(), "t3") -
                                     bd.theme_ids.begin());
    CHECK(bd.neighbor_sim[island] == doctest::Approx(0.0));
    CHECK(bd.regularizer[island] < 1e-6);
}

TEST_CASE("guidance rejects empty partitions") {
    MemoryHierarchy h;
    h.dimension = 4;
    CHECK_THROWS_AS(guidance(h, 1e-6), RejectedInput);
    CHECK_THROWS_AS(sem_score(h, 1e-6), RejectedInput);
}

TEST_CASE("guidance composes the two terms on a skewed partition") {
    MemoryHierarchy h;
    h.dimension = 16;
    std::vector<std::string> big;
    for (int i = 0; i < 10; ++i) {
        std::string sid = "b" + std::to_string(i);
        testutil::light_semantic(h, sid, "t1", testutil::basis(16, 0));
        big.push_back(sid);
    }
    testutil::light_theme(h, "t1", big);
    testutil::light_semantic(h, "x", "t2", testutil::basis(16, 1));
    testutil::light_theme(h, "t2", {"x"});
    testutil::light_semantic(h, "y", "t3", testutil::basis(16, 2));
    testutil::light_theme(h, "t3", {"y"});

    GuidanceScore g = guidance(h, 1e-6);
    CHECK(g.sparsity == doctest::Approx(144.0 / 306.0).epsilon(1e-9));
    CHECK(g.total == doctest::Approx(g.sparsity + sem_score(h, 1e-6)).epsilon(1e-12));
}

TEST_CASE("fano cap fixtures") {
    CHECK(fano_cap({2.0, 0.85}) == 12); // 2^(3/0.85) = 11.5, rounds up within 0.5
    CHECK(fano_cap({0.0, 0.5}) == 4);   // 2^2 exactly
    CHECK_THROWS_AS(fano_cap({2.0, 1.5}), RejectedInput);
    CHECK_THROWS_AS(fano_cap({2.0, 0.0}), RejectedInput);
    CHECK_THROWS_AS(fano_cap({-1.0, 0.5}), RejectedInput);
}

namespace {

StructureConfig test_config() {
    StructureConfig cfg;
    cfg.rng_seed = 7;
    return cfg;
}

SemanticNode draft(const std::string& id, Vec embedding) {
    SemanticNode node;
    node.id = id;
    node.statement = "statement " + id;
    node.embedding = std::move(embedding);
    return node;
}

} // namespace

TEST_CASE("attach: first semantic opens a theme, likes attach, strangers split off") {
    MemoryHierarchy h;
    h.dimension = 8;
    StructureManager mgr(h, test_config());

    std::string t1 = mgr.attach_semantic(draft("s1", testutil::basis(8, 0)));
    CHECK(h.themes.size() == 1);
    CHECK(h.themes.at(t1).member_ids == std::vector<std::string>{"s1"});

    // Identical embedding: cosine 1 beats any threshold.
    CHECK(mgr.attach_semantic(draft("s2", testutil::basis(8, 0))) == t1);
    CHECK(h.themes.at(t1).member_ids.size() == 2);

    // Orthogonal to every centroid: similarity 0 < 0.40 opens a new theme.
    std::string t2 = mgr.attach_semantic(draft("s3", testutil::basis(8, 1)));
    CHECK(t2 != t1);
    CHECK(h.themes.size() == 2);

    CHECK_THROWS_AS(mgr.attach_semantic(draft("", testutil::basis(8, 0))), RejectedInput);
    CHECK_THROWS_AS(mgr.attach_semantic(draft("s1", testutil::basis(8, 0))), RejectedInput);
    CHECK_THROWS_AS(mgr.attach_semantic(draft("s9", {})), RejectedInput);
    CHECK_THROWS_AS(mgr.attach_semantic(draft("s9", testutil::basis(4, 0))), RejectedInput);
}

TEST_CASE("attach beyond the cap triggers an immediate split") {
    MemoryHierarchy h;
    h.dimension = 8;
    StructureConfig cfg = test_config();
    cfg.theme_cap = 4;
    StructureManager mgr(h, cfg);

    for (int i = 0; i < 5; ++i)
        mgr.attach_semantic(draft("s" + std::to_string(i), testutil::basis(8, 0)));

    CHECK(mgr.split_count() == 1);
    CHECK(h.themes.size() == 2); // identical members: fallback bisection
    std::multiset<std::size_t> sizes;
    for (const auto& [tid, theme] : h.themes) sizes.insert(theme.member_ids.size());
    CHECK(sizes == std::multiset<std::size_t>{2, 3});

    bool split_logged = false;
    for (const auto& ev : h.reassignment_log)
        if (ev.cause == ReassignCause::split) split_logged = true;
    CHECK(split_logged);
}

TEST_CASE("split separates two orthogonal groups exactly") {
    MemoryHierarchy h;
    h.dimension = 8;
    std::vector<std::string> members;
    std::set<std::string> group_a, group_b;
    for (int i = 0; i < 13; ++i) {
        std::string sid = (i < 10 ? "s0" : "s1") + std::to_string(i);
        bool in_a = i < 7;
        testutil::light_semantic(h, sid, "big", testutil::basis(8, in_a ? 0 : 1));
        members.push_back(sid);
        (in_a ? group_a : group_b).insert(sid);
    }
    testutil::light_theme(h, "big", members);

    StructureManager mgr(h, test_config()); // cap 12 < 13
    SplitReport report = mgr.split_theme("big");

    REQUIRE(report.new_theme_ids.size() == 2);
    std::set<std::string> got_a(h.themes.at(report.new_theme_ids[0]).member_ids.begin(),
                                h.themes.at(report.new_theme_ids[0]).member_ids.end());
    std::set<std::string> got_b(h.themes.at(report.new_theme_ids[1]).member_ids.begin(),
                                h.themes.at(report.new_theme_ids[1]).member_ids.end());
    CHECK(((got_a == group_a && got_b == group_b) || (got_a == group_b && got_b == group_a)));

    // The chosen candidate's guidance dominates every scored alternative.
    const SplitCandidate& chosen = report.candidates.at(report.chosen_index);
    for (const SplitCandidate& cand : report.candidates) {
        if (cand.degenerate) continue;
        CHECK(chosen.guidance_total >= cand.guidance_total - 1e-12);
    }

    // Every move is logged with cause=split.
    std::set<std::string> moved;
    for (const auto& ev : h.reassignment_log)
        if (ev.cause == ReassignCause::split) moved.insert(ev.semantic_id);
    CHECK(moved.size() == 13);
}

TEST_CASE("split rejects themes within the cap") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_theme(h, "t1", {"a"});
    StructureManager mgr(h, test_config());
    CHECK_THROWS_AS(mgr.split_theme("t1"), RejectedInput);
    CHECK_THROWS_AS(mgr.split_theme("missing"), RejectedInput);
}

TEST_CASE("split of identical embeddings falls back to balanced bisection") {
    MemoryHierarchy h;
    h.dimension = 4;
    std::vector<std::string> members;
    for (int i = 0; i < 24; ++i) {
        std::string sid = "s" + std::to_string(100 + i);
        testutil::light_semantic(h, sid, "big", testutil::basis(4, 0));
        members.push_back(sid);
    }
    testutil::light_theme(h, "big", members);

    StructureManager mgr(h, test_config());
    SplitReport report = mgr.split_theme("big");

    REQUIRE(report.new_theme_ids.size() == 2);
    CHECK(h.themes.at(report.new_theme_ids[0]).member_ids.size() == 12);
    CHECK(h.themes.at(report.new_theme_ids[1]).member_ids.size() == 12);
    CHECK(report.candidates.at(report.chosen_index).fallback);
}

TEST_CASE("merge absorbs a co-located singleton") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "c", "t1", testutil::basis(4, 0));
    testutil::light_theme(h, "t1", {"a", "b", "c"});
    testutil::light_semantic(h, "d", "t2", testutil::basis(4, 0));
    testutil::light_theme(h, "t2", {"d"});

    StructureManager mgr(h, test_config());
    MergeReport report = mgr.merge_theme("t2");

    CHECK(report.applied_target_id == "t1");
    CHECK(h.themes.size() == 1);
    CHECK(h.themes.at("t1").member_ids.size() == 4);
    CHECK(h.semantics.at("d").theme_id == "t1");
    CHECK(mgr.merge_count() == 1);

    // keep option is listed first and loses to the applied merge.
    REQUIRE(report.options.size() >= 2);
    CHECK(report.options[0].target_theme_id.empty());
    CHECK(report.options[1].guidance_total > report.options[0].guidance_total);
}

TEST_CASE("merge keeps an orthogonal singleton among orthogonal singletons") {
    MemoryHierarchy h;
    h.dimension = 4;
    for (int i = 0; i < 4; ++i) {
        std::string sid = "s" + std::to_string(i);
        std::string tid = "t" + std::to_string(i);
        testutil::light_semantic(h, sid, tid, testutil::basis(4, i));
        testutil::light_theme(h, tid, {sid});
    }
    StructureManager mgr(h, test_config());
    MergeReport report = mgr.merge_theme("t3");

    CHECK(report.applied_target_id.empty()); // cohesion loss outweighs any gain
    CHECK(h.themes.size() == 4);
    CHECK(mgr.merge_count() == 0);
    for (const MergeOption& opt : report.options)
        if (!opt.target_theme_id.empty() && opt.feasible)
            CHECK(opt.guidance_total <= report.options[0].guidance_total);
}

TEST_CASE("merge with K=1 is a no-op") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_theme(h, "t1", {"a"});
    StructureManager mgr(h, test_config());
    MergeReport report = mgr.merge_theme("t1");
    CHECK(report.applied_target_id.empty());
    REQUIRE(report.options.size() == 1); // keep only
    CHECK(h.themes.size() == 1);
}

TEST_CASE("merge never lifts a theme over the cap") {
    MemoryHierarchy h;
    h.dimension = 4;
    StructureConfig cfg = test_config();
    cfg.theme_cap = 3;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "c", "t1", testutil::basis(4, 0));
    testutil::light_theme(h, "t1", {"a", "b", "c"});
    testutil::light_semantic(h, "d", "t2", testutil::basis(4, 0));
    testutil::light_theme(h, "t2", {"d"});

    StructureManager mgr(h, cfg);
    MergeReport report = mgr.merge_theme("t2");

    CHECK(report.applied_target_id.empty()); // only target would exceed the cap
    CHECK(h.themes.size() == 2);
    bool saw_infeasible = false;
    for (const MergeOption& opt : report.options)
        if (opt.target_theme_id == "t1") {
            CHECK_FALSE(opt.feasible);
            saw_infeasible = true;
        }
    CHECK(saw_infeasible);
}

TEST_CASE("merge rejects non-tiny themes") {
    MemoryHierarchy h;
    h.dimension = 4;
    testutil::light_semantic(h, "a", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "b", "t1", testutil::basis(4, 0));
    testutil::light_semantic(h, "c", "t1", testutil::basis(4, 0));
    testutil::light_theme(h, "t1", {"a", "b", "c"});
    StructureManager mgr(h, test_config()); // tiny_theme_size = 2
    CHECK_THROWS_AS(mgr.merge_theme("t1"), RejectedInput);
}

TEST_CASE("note_insertion sweeps on the configured interval") {
    MemoryHierarchy h;
    h.dimension = 8;
    StructureConfig cfg = test_config();
    cfg.merge_sweep_interval = 3;
    StructureManager mgr(h, cfg);

    mgr.attach_semantic(draft("s1", testutil::basis(8, 0)));
    CHECK_FALSE(mgr.note_insertion());
    mgr.attach_semantic(draft("s2", testutil::basis(8, 0)));
    CHECK_FALSE(mgr.note_insertion());
    mgr.attach_semantic(draft("s3", testutil::basis(8, 0)));
    CHECK(mgr.note_insertion()); // third insertion triggers the sweep
    CHECK(mgr.insertions_since_sweep() == 0);
}

TEST_CASE("reassignment ratio counts distinct moved nodes") {
    MemoryHierarchy h;
    h.dimension = 4;
    for (int i = 0; i < 4; ++i) {
        std::string sid = "s" + std::to_string(i);
        testutil::light_semantic(h, sid, "t1", testutil::basis(4, 0));
    }
    testutil::light_theme(h, "t1", {"s0", "s1", "s2", "s3"});

    CHECK(reassignment_ratio(h) == 0.0); // empty log

    h.reassignment_log.push_back({"s0", "", "t1", ReassignCause::attach});
    CHECK(reassignment_ratio(h) == 0.0); // attach does not count

    h.reassignment_log.push_back({"s1", "t1", "t2", ReassignCause::split});
    h.reassignment_log.push_back({"s2", "t1", "t2", ReassignCause::merge});
    h.reassignment_log.push_back({"s1", "t2", "t1", ReassignCause::split});
    CHECK(reassignment_ratio(h) == doctest::Approx(0.5)); // s1 counted once

    MemoryHierarchy empty;
    CHECK(reassignment_ratio(empty) == 0.0); // N = 0 defined as 0
}
