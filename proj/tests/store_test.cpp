// JSON store: canonical save/load round trips, schema and validation
// failures, the exclusive lock file, and engine rebuilds from a bundle.
#include "xmem/store.hpp"

#include "xmem/embedding.hpp"
#include "xmem/engine.hpp"
#include "xmem/errors.hpp"
#include "xmem/providers.hpp"

#include "helpers.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace xmem;

namespace {

RunConfig small_config() {
    RunConfig config;
    config.dimension = 64;
    return config;
}

// Fresh path under the system temp directory; removes the store and its
// lock on destruction so failed tests do not leak files.
struct TempStore {
    std::string path;
    TempStore() {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("xmem-store-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++) + ".json"))
                   .string();
    }
    ~TempStore() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        std::filesystem::remove(path + ".lock", ec);
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << text;
}

// MemoryEngine is non-movable, so tests hold it inside a fixture
// constructed in place.
struct EngineFixture {
    MemoryEngine engine;
    EngineFixture() : engine(small_config(), make_offline_suite(small_config())) {}
    explicit EngineFixture(const Dataset& dataset)
        : engine(small_config(), make_offline_suite(small_config())) {
        engine.ingest(dataset);
    }
};

} // namespace

TEST_CASE("store: an empty engine round-trips and saves canonically") {
    TempStore tmp;
    EngineFixture fx;

    save_store(tmp.path, fx.engine);
    const std::string first = slurp(tmp.path);
    REQUIRE_FALSE(first.empty());
    CHECK(first.back() == '\n');

    save_store(tmp.path, fx.engine);
    CHECK(slurp(tmp.path) == first);

    StoreBundle bundle = load_store(tmp.path);
    CHECK(bundle.config.dimension == 64);
    CHECK(bundle.config.stage1.alpha == doctest::Approx(0.5));
    CHECK(bundle.hierarchy.messages.empty());
    CHECK(bundle.hierarchy.episodes.empty());
    CHECK(bundle.hierarchy.semantics.empty());
    CHECK(bundle.hierarchy.themes.empty());
    CHECK(bundle.cache_entries.empty());
    CHECK(bundle.embedder_id == fx.engine.suite().embedder->provider_id());
}

TEST_CASE("store: ingested state survives a save/load/rebuild cycle") {
    TempStore tmp;
    Dataset dataset = parse_dataset(testutil::small_dataset_json());
    EngineFixture fx(dataset);
    MemoryEngine& engine = fx.engine;

    const std::string question = "What bike does Alice own?";
    AnswerResult before = engine.answer(question);
    save_store(tmp.path, engine);
    const std::string first = slurp(tmp.path);

    StoreBundle bundle = load_store(tmp.path);
    CHECK(bundle.hierarchy.messages.size() == engine.hierarchy().messages.size());
    CHECK(bundle.hierarchy.episodes.size() == engine.hierarchy().episodes.size());
    CHECK(bundle.hierarchy.semantics.size() == engine.hierarchy().semantics.size());
    CHECK(bundle.hierarchy.themes.size() == engine.hierarchy().themes.size());
    CHECK(bundle.hierarchy.session_order == engine.hierarchy().session_order);
    REQUIRE_FALSE(bundle.cache_entries.empty());
    const std::size_t cached = bundle.cache_entries.size();

    MemoryEngine restored =
        engine_from_bundle(std::move(bundle), make_suite(small_config()));
    CHECK(restored.suite().cache->snapshot().size() == cached);

    IngestStats want = engine.stats();
    IngestStats got = restored.stats();
    CHECK(got.messages == want.messages);
    CHECK(got.episodes == want.episodes);
    CHECK(got.semantics == want.semantics);
    CHECK(got.themes == want.themes);
    CHECK(got.reassignment_ratio == doctest::Approx(want.reassignment_ratio));
    CHECK(got.theme_size_histogram == want.theme_size_histogram);

    AnswerResult after = restored.answer(question);
    CHECK(after.answer == before.answer);
    CHECK(after.retrieval.context == before.retrieval.context);
    CHECK(after.retrieval.themes_selected == before.retrieval.themes_selected);
    CHECK(after.retrieval.semantics_selected == before.retrieval.semantics_selected);
    CHECK(after.retrieval.units.size() == before.retrieval.units.size());
    CHECK(after.retrieval.token_usage.context_tokens ==
          before.retrieval.token_usage.context_tokens);
    CHECK(after.retrieval.token_usage.total == before.retrieval.token_usage.total);

    // Re-saving the rebuilt engine reproduces the original bytes.
    TempStore tmp2;
    save_store(tmp2.path, restored);
    CHECK(slurp(tmp2.path) == first);
}

TEST_CASE("store: malformed documents and foreign versions are rejected") {
    TempStore tmp;

    CHECK_THROWS_AS(load_store(tmp.path + ".does-not-exist"), IoError);

    spit(tmp.path, "not json");
    CHECK_THROWS_AS(load_store(tmp.path), SchemaError);

    spit(tmp.path, "{}\n");
    CHECK_THROWS_WITH_AS(load_store(tmp.path), "store: missing schema_version",
                         SchemaError);

    EngineFixture fx;
    save_store(tmp.path, fx.engine);

    nlohmann::json doc = nlohmann::json::parse(slurp(tmp.path));
    doc["schema_version"] = "99";
    spit(tmp.path, doc.dump(2) + "\n");
    CHECK_THROWS_WITH_AS(load_store(tmp.path),
                         "store schema version 99 is not supported; expected 1",
                         SchemaError);

    doc["schema_version"] = "1";
    doc["hierarchy"] = 3; // wrong type for a structured field
    spit(tmp.path, doc.dump(2) + "\n");
    CHECK_THROWS_AS(load_store(tmp.path), SchemaError);
}

TEST_CASE("store: an externally edited centroid fails validation") {
    TempStore tmp;
    Dataset dataset = parse_dataset(testutil::small_dataset_json());
    EngineFixture fx(dataset);
    save_store(tmp.path, fx.engine);

    nlohmann::json doc = nlohmann::json::parse(slurp(tmp.path));
    auto& themes = doc["hierarchy"]["themes"];
    REQUIRE_FALSE(themes.empty());
    auto first = themes.begin();
    const std::size_t dim = first.value()["centroid"].size();
    REQUIRE(dim == 64);
    // Still unit norm and the right dimension, so only staleness can trip.
    std::vector<double> edited(dim, 0.0);
    edited[0] = 1.0;
    first.value()["centroid"] = edited;
    spit(tmp.path, doc.dump(2) + "\n");

    bool threw = false;
    try {
        load_store(tmp.path);
    } catch (const ValidationError& e) {
        threw = true;
        const std::string msg = e.what();
        CHECK(msg.find("store failed validation") != std::string::npos);
        CHECK(msg.find("stale centroid") != std::string::npos);
        CHECK(msg.find(first.key()) != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("store: the lock is exclusive while held and released after") {
    TempStore tmp;
    {
        StoreLock held(tmp.path);
        CHECK(held.lock_path() == tmp.path + ".lock");
        CHECK(std::filesystem::exists(held.lock_path()));

        bool threw = false;
        try {
            StoreLock second(tmp.path);
        } catch (const IoError& e) {
            threw = true;
            const std::string msg = e.what();
            CHECK(msg.find("store is locked by another process") != std::string::npos);
            CHECK(msg.find(tmp.path + ".lock") != std::string::npos);
        }
        CHECK(threw);
    }
    CHECK_FALSE(std::filesystem::exists(tmp.path + ".lock"));
    StoreLock again(tmp.path);
    CHECK(std::filesystem::exists(again.lock_path()));
}

TEST_CASE("store: a bundle from a different embedder is rejected") {
    TempStore tmp;
    Dataset dataset = parse_dataset(testutil::small_dataset_json());
    EngineFixture fx(dataset);
    save_store(tmp.path, fx.engine);

    StoreBundle bundle = load_store(tmp.path);
    bundle.embedder_id = "someone-else";
    const std::string ours = make_suite(small_config()).embedder->provider_id();

    bool threw = false;
    try {
        engine_from_bundle(std::move(bundle), make_suite(small_config()));
    } catch (const ValidationError& e) {
        threw = true;
        const std::string msg = e.what();
        CHECK(msg.find("someone-else") != std::string::npos);
        CHECK(msg.find(ours) != std::string::npos);
    }
    CHECK(threw);

    // A blank provenance id (hand-built bundle) is tolerated.
    StoreBundle blank = load_store(tmp.path);
    blank.embedder_id.clear();
    MemoryEngine rebuilt =
        engine_from_bundle(std::move(blank), make_suite(small_config()));
    CHECK(rebuilt.hierarchy().messages.size() == fx.engine.hierarchy().messages.size());
}

TEST_CASE("store: saving to an unwritable path raises IoError") {
    EngineFixture fx;
    CHECK_THROWS_AS(save_store("/no-such-directory-xmem/store.json", fx.engine),
                    IoError);
}

TEST_CASE("store: make_suite returns offline providers for offline configs") {
    RunConfig config = small_config();
    REQUIRE(config.offline);
    ProviderSuite suite = make_suite(config);
    ProviderSuite offline = make_offline_suite(config);
    CHECK(suite.embedder->provider_id() == offline.embedder->provider_id());
}
