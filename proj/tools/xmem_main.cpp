// Command-line surface: ingest, query, stats, restructure-report, eval, cap.
// Exit codes: 0 success, 1 usage, 2 data/validation, 3 provider failure.

#include "xmem/engine.hpp"
#include "xmem/errors.hpp"
#include "xmem/eval.hpp"
#include "xmem/store.hpp"
#include "xmem/structure.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

using namespace xmem;

// Loads the store under its lock and rebuilds the engine with the suite the
// config selects.
MemoryEngine open_store(const std::string& path) {
    StoreBundle bundle = load_store(path);
    ProviderSuite suite = make_suite(bundle.config);
    return engine_from_bundle(std::move(bundle), std::move(suite));
}

void print_ingest_stats(const IngestStats& stats) {
    std::printf("messages: %zu\n", stats.messages);
    std::printf("episodes: %zu\n", stats.episodes);
    std::printf("semantics (N): %zu\n", stats.semantics);
    std::printf("themes (K): %zu\n", stats.themes);
    std::printf("reassignment_ratio: %.4f\n", stats.reassignment_ratio);
    std::printf("theme size histogram (size count):\n");
    for (const auto& [size, count] : stats.theme_size_histogram) {
        std::printf("  %zu %zu\n", size, count);
    }
    std::printf("splits: %zu\nmerges: %zu\n", stats.splits, stats.merges);
}

int run_ingest(const std::string& dataset_path, const std::string& store_path,
               RunConfig config) {
    Dataset dataset = load_dataset(dataset_path);
    StoreLock lock(store_path);
    IngestStats stats;
    if (std::filesystem::exists(store_path)) {
        StoreBundle bundle = load_store(store_path);
        ProviderSuite suite = make_suite(bundle.config);
        MemoryEngine engine = engine_from_bundle(std::move(bundle), std::move(suite));
        stats = engine.ingest(dataset);
        save_store(store_path, engine);
    } else {
        ProviderSuite suite = make_suite(config);
        MemoryEngine engine(config, std::move(suite));
        stats = engine.ingest(dataset);
        save_store(store_path, engine);
    }
    print_ingest_stats(stats);
    return 0;
}

int run_query(const std::string& store_path, const std::string& question, double alpha,
              double coverage_target, double delta, std::size_t budget) {
    StoreLock lock(store_path);
    StoreBundle bundle = load_store(store_path);
    bundle.config.stage1.alpha = alpha;
    bundle.config.stage1.coverage_target = coverage_target;
    bundle.config.stage2.uncertainty_drop_min = delta;
    bundle.config.budget = budget;
    ProviderSuite suite = make_suite(bundle.config);
    MemoryEngine engine = engine_from_bundle(std::move(bundle), std::move(suite));

    AnswerResult result = engine.answer(question);
    const RetrievalResult& r = result.retrieval;
    std::printf("answer: %s\n", result.answer.c_str());
    std::printf("context:\n%s\n", r.context.c_str());
    std::printf("tokens: context=%zu auxiliary=%zu total=%zu\n", r.token_usage.context_tokens,
                r.token_usage.auxiliary_call_tokens, r.token_usage.total);
    std::printf("selected: themes=%zu semantics=%zu episodes=%zu message_blocks=%zu\n",
                r.themes_selected.size(), r.semantics_selected.size(),
                r.episodes_included.size(),
                std::size_t(std::count_if(r.episodes_included.begin(), r.episodes_included.end(),
                                          [](const EpisodeInclusion& e) {
                                              return e.messages_included;
                                          })));
    if (r.empty_hierarchy) std::printf("flags: empty_hierarchy\n");
    if (r.degraded) std::printf("flags: degraded (oracle unavailable)\n");
    if (r.coarse_truncated) std::printf("flags: coarse_truncated\n");
    return 0;
}

int run_stats(const std::string& store_path) {
    StoreLock lock(store_path);
    StoreBundle bundle = load_store(store_path);
    const MemoryHierarchy& h = bundle.hierarchy;
    std::printf("messages: %zu\nepisodes: %zu\nsemantics: %zu\nthemes: %zu\n",
                h.messages.size(), h.episodes.size(), h.semantics.size(), h.themes.size());
    if (h.themes.empty()) {
        std::printf("guidance: undefined (no themes)\n");
    } else {
        GuidanceScore g = guidance(h, bundle.config.structure.epsilon);
        std::printf("guidance: sparsity=%.6f semantic=%.6f total=%.6f\n", g.sparsity, g.semantic,
                    g.total);
    }
    auto degree_line = [](const char* name, const NavGraph& graph) {
        std::size_t total = 0;
        std::size_t max_degree = 0;
        for (const auto& [id, edges] : graph.adjacency()) {
            (void)id;
            total += edges.size();
            max_degree = std::max(max_degree, edges.size());
        }
        double mean = graph.size() > 0 ? double(total) / double(graph.size()) : 0.0;
        std::printf("%s: nodes=%zu k=%zu mean_out_degree=%.2f max_out_degree=%zu\n", name,
                    graph.size(), graph.k(), mean, max_degree);
    };
    degree_line("theme_graph", bundle.theme_graph);
    degree_line("semantic_graph", bundle.semantic_graph);
    return 0;
}

int run_restructure_report(const std::string& store_path) {
    StoreLock lock(store_path);
    StoreBundle bundle = load_store(store_path);
    const MemoryHierarchy& h = bundle.hierarchy;
    std::size_t attaches = 0;
    std::size_t splits = 0;
    std::size_t merges = 0;
    for (const ReassignmentEvent& ev : h.reassignment_log) {
        switch (ev.cause) {
            case ReassignCause::attach: ++attaches; break;
            case ReassignCause::split: ++splits; break;
            case ReassignCause::merge: ++merges; break;
        }
    }
    std::printf("attach events: %zu\n", attaches);
    std::printf("split reassignments: %zu\n", splits);
    std::printf("merge reassignments: %zu\n", merges);
    std::printf("semantics: %zu\nthemes: %zu\n", h.semantics.size(), h.themes.size());
    std::printf("reassignment_ratio: %.4f\n", reassignment_ratio(h));
    return 0;
}

int run_eval_cmd(const std::string& store_path, const std::string& dataset_path,
                 const std::string& system_name, std::size_t parallelism, bool as_json) {
    EvalSystem system = eval_system_from_string(system_name);
    Dataset dataset = load_dataset(dataset_path);
    StoreLock lock(store_path);
    MemoryEngine engine = open_store(store_path);
    EvalReport report = run_eval(engine, dataset, system, parallelism);
    std::fputs((as_json ? eval_report_json(report) : eval_report_table(report)).c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical agent-memory engine: ingest conversations, retrieve, evaluate"};
    app.require_subcommand(1);

    RunConfig config;

    // ingest
    std::string dataset_path;
    std::string store_path;
    bool offline_flag = false;
    bool online_flag = false;
    auto* ingest = app.add_subcommand("ingest", "Distill a conversation dataset into a store");
    ingest->add_option("--dataset", dataset_path, "Dataset JSON path")->required();
    ingest->add_option("--store", store_path, "Store JSON path")->required();
    ingest->add_flag("--offline", offline_flag, "Use deterministic offline providers (default)");
    ingest->add_flag("--online", online_flag, "Use remote providers (requires endpoints)");
    ingest->add_option("--seed", config.seed, "Deterministic RNG seed");
    ingest->add_option("--dimension", config.dimension, "Embedding dimension");
    ingest->add_option("--theme-cap", config.structure.theme_cap, "Max semantics per theme");
    ingest->add_option("--embed-url", config.embed_url, "Remote embeddings endpoint");
    ingest->add_option("--embed-model", config.embed_model, "Remote embeddings model");
    ingest->add_option("--chat-url", config.chat_url, "Remote chat endpoint");
    ingest->add_option("--chat-model", config.chat_model, "Remote chat model");
    bool disable_split = false;
    bool disable_merge = false;
    ingest->add_flag("--disable-split", disable_split, "Never split over-cap themes");
    ingest->add_flag("--disable-merge", disable_merge, "Never merge tiny themes");

    // query
    std::string question;
    double alpha = config.stage1.alpha;
    double coverage_target = config.stage1.coverage_target;
    double delta = config.stage2.uncertainty_drop_min;
    std::size_t budget = config.budget;
    auto* query = app.add_subcommand("query", "Answer a question from a store");
    query->add_option("--store", store_path, "Store JSON path")->required();
    query->add_option("--question", question, "Question text")->required();
    query->add_option("--alpha", alpha, "Stage-I coverage/relevance blend");
    query->add_option("--coverage-target", coverage_target, "Stage-I stopping coverage");
    query->add_option("--delta", delta, "Stage-II minimum uncertainty drop");
    query->add_option("--budget", budget, "Context token budget");

    // stats
    auto* stats = app.add_subcommand("stats", "Print store sizes, guidance score, graph degrees");
    stats->add_option("--store", store_path, "Store JSON path")->required();

    // restructure-report
    auto* restructure =
        app.add_subcommand("restructure-report", "Print split/merge counts and ratio");
    restructure->add_option("--store", store_path, "Store JSON path")->required();

    // eval
    std::string system_name = "ours";
    std::size_t parallelism = 1;
    bool as_json = false;
    auto* eval = app.add_subcommand("eval", "Score a QA dataset against the store");
    eval->add_option("--store", store_path, "Store JSON path")->required();
    eval->add_option("--dataset", dataset_path, "Dataset JSON path")->required();
    eval->add_option("--system", system_name,
                     "ours | naive | memory_only | +repsel | +uncsion");
    eval->add_option("--parallelism", parallelism, "Worker threads for items");
    eval->add_flag("--json", as_json, "Emit JSON instead of the table");

    // cap
    double bits = 2.0;
    double accuracy = 0.85;
    auto* cap = app.add_subcommand("cap", "Print the theme-size cap for (bits, accuracy)");
    cap->add_option("--bits", bits, "Discriminative information per hop (B)")->required();
    cap->add_option("--accuracy", accuracy, "Target navigation accuracy in (0,1)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            if (offline_flag && online_flag) {
                throw RejectedInput("--offline and --online are mutually exclusive");
            }
            config.offline = !online_flag;
            config.structure.enable_split = !disable_split;
            config.structure.enable_merge = !disable_merge;
            config.structure.rng_seed = config.seed;
            return run_ingest(dataset_path, store_path, config);
        }
        if (*query) return run_query(store_path, question, alpha, coverage_target, delta, budget);
        if (*stats) return run_stats(store_path);
        if (*restructure) return run_restructure_report(store_path);
        if (*eval) return run_eval_cmd(store_path, dataset_path, system_name, parallelism, as_json);
        if (*cap) {
            std::printf("%zu\n", fano_cap(FanoParams{bits, accuracy}));
            return 0;
        }
    } catch (const TransportError& e) {
        std::fprintf(stderr, "provider failure: %s\n", e.what());
        return 3;
    } catch (const ProtocolError& e) {
        std::fprintf(stderr, "provider failure: %s\n", e.what());
        return 3;
    } catch (const RejectedInput& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
