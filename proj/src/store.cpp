// Store serialization: canonical JSON with ISO-8601 timestamps, plus the
// lock file guarding exclusive ownership.

#include "xmem/store.hpp"

#include "xmem/errors.hpp"
#include "xmem/hierarchy.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <utility>

namespace xmem {

namespace {

using nlohmann::json;

json config_to_json(const RunConfig& c) {
    json j;
    j["structure"] = {{"theme_cap", c.structure.theme_cap},
                      {"split_candidate_count", c.structure.split_candidate_count},
                      {"merge_neighbor_count", c.structure.merge_neighbor_count},
                      {"tiny_theme_size", c.structure.tiny_theme_size},
                      {"epsilon", c.structure.epsilon},
                      {"knn_k", c.structure.knn_k},
                      {"attach_threshold", c.structure.attach_threshold},
                      {"merge_sweep_interval", c.structure.merge_sweep_interval},
                      {"enable_split", c.structure.enable_split},
                      {"enable_merge", c.structure.enable_merge},
                      {"rng_seed", c.structure.rng_seed}};
    j["fano"] = {{"bits", c.fano.bits}, {"target_accuracy", c.fano.target_accuracy}};
    j["stage1"] = {{"alpha", c.stage1.alpha},
                   {"coverage_target", c.stage1.coverage_target},
                   {"max_theme_representatives", c.stage1.max_theme_representatives},
                   {"max_semantic_representatives", c.stage1.max_semantic_representatives},
                   {"candidate_pool", c.stage1.candidate_pool}};
    j["stage2"] = {{"uncertainty_drop_min", c.stage2.uncertainty_drop_min},
                   {"patience", c.stage2.patience},
                   {"expand_messages", c.stage2.expand_messages}};
    j["beta"] = c.beta;
    j["budget"] = c.budget;
    j["answer_style"] = c.answer_style;
    j["dimension"] = c.dimension;
    j["seed"] = c.seed;
    j["offline"] = c.offline;
    j["parallelism"] = c.parallelism;
    j["naive_top_k"] = c.naive_top_k;
    j["naive_chunk_messages"] = c.naive_chunk_messages;
    j["embed_url"] = c.embed_url;
    j["embed_model"] = c.embed_model;
    j["embed_batch_limit"] = c.embed_batch_limit;
    j["chat_url"] = c.chat_url;
    j["chat_model"] = c.chat_model;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    if (j.contains("structure")) {
        const json& s = j.at("structure");
        c.structure.theme_cap = s.value("theme_cap", c.structure.theme_cap);
        c.structure.split_candidate_count =
            s.value("split_candidate_count", c.structure.split_candidate_count);
        c.structure.merge_neighbor_count =
            s.value("merge_neighbor_count", c.structure.merge_neighbor_count);
        c.structure.tiny_theme_size = s.value("tiny_theme_size", c.structure.tiny_theme_size);
        c.structure.epsilon = s.value("epsilon", c.structure.epsilon);
        c.structure.knn_k = s.value("knn_k", c.structure.knn_k);
        c.structure.attach_threshold = s.value("attach_threshold", c.structure.attach_threshold);
        c.structure.merge_sweep_interval =
            s.value("merge_sweep_interval", c.structure.merge_sweep_interval);
        c.structure.enable_split = s.value("enable_split", c.structure.enable_split);
        c.structure.enable_merge = s.value("enable_merge", c.structure.enable_merge);
        c.structure.rng_seed = s.value("rng_seed", c.structure.rng_seed);
    }
    if (j.contains("fano")) {
        c.fano.bits = j.at("fano").value("bits", c.fano.bits);
        c.fano.target_accuracy = j.at("fano").value("target_accuracy", c.fano.target_accuracy);
    }
    if (j.contains("stage1")) {
        const json& s = j.at("stage1");
        c.stage1.alpha = s.value("alpha", c.stage1.alpha);
        c.stage1.coverage_target = s.value("coverage_target", c.stage1.coverage_target);
        c.stage1.max_theme_representatives =
            s.value("max_theme_representatives", c.stage1.max_theme_representatives);
        c.stage1.max_semantic_representatives =
            s.value("max_semantic_representatives", c.stage1.max_semantic_representatives);
        c.stage1.candidate_pool = s.value("candidate_pool", c.stage1.candidate_pool);
    }
    if (j.contains("stage2")) {
        const json& s = j.at("stage2");
        c.stage2.uncertainty_drop_min =
            s.value("uncertainty_drop_min", c.stage2.uncertainty_drop_min);
        c.stage2.patience = s.value("patience", c.stage2.patience);
        c.stage2.expand_messages = s.value("expand_messages", c.stage2.expand_messages);
    }
    c.beta = j.value("beta", c.beta);
    c.budget = j.value("budget", c.budget);
    c.answer_style = j.value("answer_style", c.answer_style);
    c.dimension = j.value("dimension", c.dimension);
    c.seed = j.value("seed", c.seed);
    c.offline = j.value("offline", c.offline);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.naive_top_k = j.value("naive_top_k", c.naive_top_k);
    c.naive_chunk_messages = j.value("naive_chunk_messages", c.naive_chunk_messages);
    c.embed_url = j.value("embed_url", c.embed_url);
    c.embed_model = j.value("embed_model", c.embed_model);
    c.embed_batch_limit = j.value("embed_batch_limit", c.embed_batch_limit);
    c.chat_url = j.value("chat_url", c.chat_url);
    c.chat_model = j.value("chat_model", c.chat_model);
    return c;
}

json adjacency_to_json(const NavGraph& graph) {
    json adjacency = json::object();
    for (const auto& [id, edges] : graph.adjacency()) {
        json list = json::array();
        for (const GraphEdge& e : edges) {
            list.push_back({{"neighbor", e.neighbor}, {"weight", e.weight}});
        }
        adjacency[id] = list;
    }
    return json{{"k", graph.k()}, {"adjacency", adjacency}};
}

std::map<std::string, std::vector<GraphEdge>> adjacency_from_json(const json& j,
                                                                  const char* which) {
    std::map<std::string, std::vector<GraphEdge>> adjacency;
    if (!j.is_object()) throw SchemaError(std::string("store: ") + which + " must be an object");
    for (const auto& [id, list] : j.items()) {
        std::vector<GraphEdge> edges;
        for (const json& e : list) {
            edges.push_back(GraphEdge{e.at("neighbor").get<std::string>(),
                                      e.at("weight").get<double>()});
        }
        adjacency.emplace(id, std::move(edges));
    }
    return adjacency;
}

} // namespace

StoreLock::StoreLock(const std::string& store_path) : lock_path_(store_path + ".lock") {
    fd_ = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
        if (errno == EEXIST) {
            throw IoError("store is locked by another process: " + lock_path_);
        }
        throw IoError("cannot create lock file " + lock_path_ + ": " + std::strerror(errno));
    }
}

StoreLock::~StoreLock() {
    if (fd_ >= 0) {
        ::close(fd_);
        ::unlink(lock_path_.c_str());
    }
}

void save_store(const std::string& path, const MemoryEngine& engine) {
    const MemoryHierarchy& h = engine.hierarchy();
    json doc;
    doc["schema_version"] = kStoreSchemaVersion;
    doc["config"] = config_to_json(engine.config());
    doc["embedding"] = {{"provider_id", engine.suite().embedder->provider_id()},
                        {"dimension", engine.suite().embedder->dimension()}};

    json messages = json::object();
    for (const auto& [id, m] : h.messages) {
        messages[id] = {{"speaker", m.speaker},
                        {"timestamp", format_timestamp(m.timestamp)},
                        {"text", m.text},
                        {"session_id", m.session_id}};
    }
    json episodes = json::object();
    for (const auto& [id, e] : h.episodes) {
        episodes[id] = {{"title", e.title},
                        {"content", e.content},
                        {"timestamp", format_timestamp(e.timestamp)},
                        {"message_ids", e.message_ids},
                        {"embedding", e.embedding}};
    }
    json semantics = json::object();
    for (const auto& [id, s] : h.semantics) {
        semantics[id] = {{"statement", s.statement},
                         {"source_episode_ids", s.source_episode_ids},
                         {"theme_id", s.theme_id},
                         {"embedding", s.embedding}};
    }
    json themes = json::object();
    for (const auto& [id, t] : h.themes) {
        themes[id] = {{"summary", t.summary},
                      {"member_ids", t.member_ids},
                      {"centroid", t.centroid}};
    }
    json log = json::array();
    for (const ReassignmentEvent& ev : h.reassignment_log) {
        log.push_back({{"semantic_id", ev.semantic_id},
                       {"old_theme", ev.old_theme},
                       {"new_theme", ev.new_theme},
                       {"cause", to_string(ev.cause)}});
    }
    json session_order = json::object();
    for (const auto& [sid, order] : h.session_order) session_order[sid] = order;

    doc["hierarchy"] = {{"dimension", h.dimension},
                        {"messages", messages},
                        {"episodes", episodes},
                        {"semantics", semantics},
                        {"themes", themes},
                        {"reassignment_log", log},
                        {"session_order", session_order},
                        {"counters",
                         {{"message", h.next_message},
                          {"episode", h.next_episode},
                          {"semantic", h.next_semantic},
                          {"theme", h.next_theme}}}};

    doc["theme_graph"] = adjacency_to_json(engine.theme_graph());
    doc["semantic_graph"] = adjacency_to_json(engine.semantic_graph());

    json cache = json::object();
    for (const auto& [key, vec] : engine.suite().cache->snapshot()) cache[key] = vec;
    doc["cache"] = cache;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open store file for writing: " + tmp);
        out << doc.dump(2) << "\n";
        if (!out) throw IoError("failed writing store file: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot move store file into place: " + path + ": " +
                      std::strerror(errno));
    }
}

StoreBundle load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading store file: " + path);

    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) throw SchemaError("store: not valid JSON: " + path);
    if (!doc.is_object() || !doc.contains("schema_version") ||
        !doc.at("schema_version").is_string()) {
        throw SchemaError("store: missing schema_version");
    }
    const std::string version = doc.at("schema_version").get<std::string>();
    if (version != kStoreSchemaVersion) {
        throw SchemaError("store schema version " + version + " is not supported; expected " +
                          kStoreSchemaVersion);
    }

    StoreBundle bundle;
    try {
        bundle.config = config_from_json(doc.value("config", json::object()));
        if (doc.contains("embedding")) {
            bundle.embedder_id = doc.at("embedding").value("provider_id", std::string());
        }

        const json& hj = doc.at("hierarchy");
        MemoryHierarchy& h = bundle.hierarchy;
        h.dimension = hj.at("dimension").get<int>();
        for (const auto& [id, m] : hj.at("messages").items()) {
            Message msg;
            msg.id = id;
            msg.speaker = m.at("speaker").get<std::string>();
            msg.timestamp = parse_timestamp(m.at("timestamp").get<std::string>());
            msg.text = m.at("text").get<std::string>();
            msg.session_id = m.at("session_id").get<std::string>();
            h.messages.emplace(id, std::move(msg));
        }
        for (const auto& [id, e] : hj.at("episodes").items()) {
            Episode ep;
            ep.id = id;
            ep.title = e.at("title").get<std::string>();
            ep.content = e.at("content").get<std::string>();
            ep.timestamp = parse_timestamp(e.at("timestamp").get<std::string>());
            ep.message_ids = e.at("message_ids").get<std::vector<std::string>>();
            ep.embedding = e.at("embedding").get<Vec>();
            h.episodes.emplace(id, std::move(ep));
        }
        for (const auto& [id, s] : hj.at("semantics").items()) {
            SemanticNode node;
            node.id = id;
            node.statement = s.at("statement").get<std::string>();
            node.source_episode_ids = s.at("source_episode_ids").get<std::vector<std::string>>();
            node.theme_id = s.at("theme_id").get<std::string>();
            node.embedding = s.at("embedding").get<Vec>();
            h.semantics.emplace(id, std::move(node));
        }
        for (const auto& [id, t] : hj.at("themes").items()) {
            Theme theme;
            theme.id = id;
            theme.summary = t.at("summary").get<std::string>();
            theme.member_ids = t.at("member_ids").get<std::vector<std::string>>();
            theme.centroid = t.at("centroid").get<Vec>();
            h.themes.emplace(id, std::move(theme));
        }
        for (const json& ev : hj.value("reassignment_log", json::array())) {
            h.reassignment_log.push_back(
                ReassignmentEvent{ev.at("semantic_id").get<std::string>(),
                                  ev.at("old_theme").get<std::string>(),
                                  ev.at("new_theme").get<std::string>(),
                                  reassign_cause_from_string(ev.at("cause").get<std::string>())});
        }
        if (hj.contains("session_order")) {
            for (const auto& [sid, order] : hj.at("session_order").items()) {
                h.session_order.emplace(sid, order.get<std::vector<std::string>>());
            }
        }
        const json& counters = hj.at("counters");
        h.next_message = counters.at("message").get<std::uint64_t>();
        h.next_episode = counters.at("episode").get<std::uint64_t>();
        h.next_semantic = counters.at("semantic").get<std::uint64_t>();
        h.next_theme = counters.at("theme").get<std::uint64_t>();

        // Graph vectors equal the live centroids and embeddings by
        // construction, so only adjacency is persisted.
        const json& tg = doc.at("theme_graph");
        std::map<std::string, Vec> theme_vectors;
        for (const auto& [id, theme] : h.themes) theme_vectors.emplace(id, theme.centroid);
        bundle.theme_graph.restore(tg.at("k").get<std::size_t>(), std::move(theme_vectors),
                                   adjacency_from_json(tg.at("adjacency"), "theme_graph"));

        const json& sg = doc.at("semantic_graph");
        std::map<std::string, Vec> semantic_vectors;
        for (const auto& [id, node] : h.semantics) semantic_vectors.emplace(id, node.embedding);
        bundle.semantic_graph.restore(sg.at("k").get<std::size_t>(), std::move(semantic_vectors),
                                      adjacency_from_json(sg.at("adjacency"), "semantic_graph"));

        if (doc.contains("cache")) {
            for (const auto& [key, vec] : doc.at("cache").items()) {
                bundle.cache_entries.emplace(key, vec.get<Vec>());
            }
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("store: malformed field: ") + e.what());
    }

    std::vector<std::string> problems = validate(bundle.hierarchy);
    if (!problems.empty()) {
        std::string joined;
        for (const auto& p : problems) {
            if (!joined.empty()) joined += "; ";
            joined += p;
        }
        throw ValidationError("store failed validation: " + joined);
    }
    return bundle;
}

MemoryEngine engine_from_bundle(StoreBundle bundle, ProviderSuite suite) {
    if (!bundle.embedder_id.empty() &&
        bundle.embedder_id != suite.embedder->provider_id()) {
        throw ValidationError("store embeddings were produced by '" + bundle.embedder_id +
                              "' but the configured embedder is '" +
                              suite.embedder->provider_id() + "'");
    }
    suite.cache->restore(std::move(bundle.cache_entries));
    return MemoryEngine(std::move(bundle.config), std::move(suite), std::move(bundle.hierarchy),
                        std::move(bundle.theme_graph), std::move(bundle.semantic_graph));
}

ProviderSuite make_suite(const RunConfig& config) {
    return config.offline ? make_offline_suite(config) : make_remote_suite(config);
}

} // namespace xmem
