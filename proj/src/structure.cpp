#include "xmem/structure.hpp"

#include "xmem/embedding.hpp"
#include "xmem/errors.hpp"
#include "xmem/hierarchy.hpp"
#include "xmem/text.hpp"
#include "xmem/vecops.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace xmem {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One theme of a (possibly hypothetical) partition: member embeddings only.
struct View {
    std::vector<const Vec*> members;
};

Vec view_centroid(const View& view) {
    Vec c(view.members.front()->size(), 0.0);
    for (const Vec* m : view.members) vecops::add_inplace(c, *m);
    vecops::scale_inplace(c, 1.0 / double(view.members.size()));
    if (!vecops::normalize_inplace(c)) c = *view.members.front();
    return c;
}

struct ViewScore {
    std::vector<double> cohesion;
    std::vector<double> neighbor_sim;
    std::vector<double> regularizer;
    double median_sim = 0.0;
    double sigma = 0.0;
    double sparsity = 0.0;
    double semantic = 0.0;
    double total = 0.0;
};

ViewScore score_views(const std::vector<View>& views, double epsilon) {
    if (views.empty()) throw RejectedInput("guidance: empty partition");
    const std::size_t K = views.size();

    std::vector<std::size_t> sizes;
    std::vector<Vec> centroids;
    for (const View& v : views) {
        if (v.members.empty()) throw RejectedInput("guidance: theme with no members");
        sizes.push_back(v.members.size());
        centroids.push_back(view_centroid(v));
    }

    ViewScore out;
    out.sparsity = sparsity_score(sizes);
    out.cohesion.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (const Vec* m : views[k].members) acc += cosine(*m, centroids[k]);
        out.cohesion[k] = acc / double(views[k].members.size());
    }

    if (K == 1) {
        // No neighbour exists, so the regulariser is defined as 1.
        out.neighbor_sim = {0.0};
        out.regularizer = {1.0};
        out.sigma = epsilon;
        out.semantic = out.cohesion[0];
    } else {
        out.neighbor_sim.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            double best = -2.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (j == k) continue;
                best = std::max(best, cosine(centroids[k], centroids[j]));
            }
            out.neighbor_sim[k] = best;
        }
        out.median_sim = median(out.neighbor_sim);
        std::vector<double> dev;
        dev.reserve(K);
        for (double s : out.neighbor_sim) dev.push_back(std::abs(s - out.median_sim));
        out.sigma = median(dev) + epsilon;
        out.regularizer.resize(K);
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            out.regularizer[k] = gaussian_regularizer(out.neighbor_sim[k], out.median_sim, out.sigma);
            acc += out.cohesion[k] * out.regularizer[k];
        }
        out.semantic = acc / double(K);
    }
    out.total = out.sparsity + out.semantic;
    return out;
}

View view_of_theme(const MemoryHierarchy& h, const Theme& theme) {
    View v;
    v.members.reserve(theme.member_ids.size());
    for (const std::string& mid : theme.member_ids) {
        auto it = h.semantics.find(mid);
        if (it == h.semantics.end())
            throw RejectedInput("guidance: theme " + theme.id + " references unknown semantic " + mid);
        v.members.push_back(&it->second.embedding);
    }
    return v;
}

std::vector<View> views_of(const MemoryHierarchy& h) {
    std::vector<View> views;
    views.reserve(h.themes.size());
    for (const auto& [tid, theme] : h.themes) views.push_back(view_of_theme(h, theme));
    return views;
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag, std::uint64_t a,
                       std::uint64_t b) {
    std::uint64_t x = text::fnv1a64(tag, seed ^ 0x9E3779B97F4A7C15ULL);
    x ^= (a << 32) ^ b;
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    x *= 0xC4CEB9FE1A85EC53ULL;
    x ^= x >> 33;
    return x;
}

struct ClusterResult {
    std::vector<std::size_t> assignment;
    bool degenerate = false;
};

// Spherical k-means with farthest-point seeding (first centre drawn from the
// seed, later centres maximise the minimum cosine distance, ties to the
// lowest index). Degenerates, rather than guesses, when a cluster empties.
ClusterResult spherical_kmeans(const std::vector<const Vec*>& points, std::size_t k,
                               std::uint64_t seed) {
    const std::size_t n = points.size();
    ClusterResult res;
    res.assignment.assign(n, 0);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> centers;
    centers.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    while (centers.size() < k) {
        double best_dist = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(centers.begin(), centers.end(), i) != centers.end()) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t c : centers)
                nearest = std::min(nearest, 1.0 - cosine(*points[i], *points[c]));
            if (nearest > best_dist) {
                best_dist = nearest;
                best_idx = i;
            }
        }
        centers.push_back(best_idx);
    }

    std::vector<Vec> mu;
    mu.reserve(k);
    for (std::size_t c : centers) mu.push_back(*points[c]);

    std::vector<std::size_t> prev(n, k);
    for (int iter = 0; iter < 50; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_sim = -2.0;
            for (std::size_t j = 0; j < k; ++j) {
                double sim = cosine(*points[i], mu[j]);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = j;
                }
            }
            res.assignment[i] = best;
        }
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t a : res.assignment) ++counts[a];
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                res.degenerate = true;
                return res;
            }
        }
        if (res.assignment == prev) break;
        prev = res.assignment;
        for (std::size_t j = 0; j < k; ++j) std::fill(mu[j].begin(), mu[j].end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            vecops::add_inplace(mu[res.assignment[i]], *points[i]);
        for (std::size_t j = 0; j < k; ++j) {
            vecops::scale_inplace(mu[j], 1.0 / double(counts[j]));
            if (!vecops::normalize_inplace(mu[j])) mu[j] = *points[centers[j]];
        }
    }
    return res;
}

} // namespace

std::size_t fano_cap(const FanoParams& params) {
    if (!(params.target_accuracy > 0.0 && params.target_accuracy < 1.0))
        throw RejectedInput("fano_cap: target_accuracy must lie in (0, 1)");
    if (params.bits < 0.0) throw RejectedInput("fano_cap: bits must be non-negative");
    const double raw = std::exp2((params.bits + 1.0) / params.target_accuracy);
    // Round half-up: 11.5 becomes the practical threshold 12; 11.4 floors.
    return static_cast<std::size_t>(std::floor(raw + 0.5));
}

double sparsity_score(const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw RejectedInput("sparsity_score: empty partition");
    double n = 0.0;
    double sq = 0.0;
    for (std::size_t s : sizes) {
        if (s == 0) throw RejectedInput("sparsity_score: theme with no members");
        n += double(s);
        sq += double(s) * double(s);
    }
    return (n * n) / (double(sizes.size()) * sq);
}

double gaussian_regularizer(double s, double m, double sigma) {
    if (!(sigma > 0.0)) throw RejectedInput("gaussian_regularizer: sigma must be positive");
    const double z = (s - m) / sigma;
    return std::exp(-0.5 * z * z);
}

SemScoreBreakdown sem_score_breakdown(const MemoryHierarchy& h, double epsilon) {
    if (h.themes.empty()) throw RejectedInput("sem_score: empty partition");
    ViewScore vs = score_views(views_of(h), epsilon);
    SemScoreBreakdown out;
    for (const auto& [tid, theme] : h.themes) out.theme_ids.push_back(tid);
    out.cohesion = std::move(vs.cohesion);
    out.neighbor_sim = std::move(vs.neighbor_sim);
    out.regularizer = std::move(vs.regularizer);
    out.median_sim = vs.median_sim;
    out.sigma = vs.sigma;
    out.score = vs.semantic;
    return out;
}

double sem_score(const MemoryHierarchy& h, double epsilon) {
    return sem_score_breakdown(h, epsilon).score;
}

GuidanceScore guidance(const MemoryHierarchy& h, double epsilon) {
    if (h.themes.empty()) throw RejectedInput("guidance: empty partition");
    ViewScore vs = score_views(views_of(h), epsilon);
    return {vs.sparsity, vs.semantic, vs.total};
}

double reassignment_ratio(const MemoryHierarchy& h) {
    if (h.semantics.empty()) return 0.0;
    std::set<std::string> moved;
    for (const ReassignmentEvent& ev : h.reassignment_log)
        if (ev.cause == ReassignCause::split || ev.cause == ReassignCause::merge)
            moved.insert(ev.semantic_id);
    return double(moved.size()) / double(h.semantics.size());
}

StructureManager::StructureManager(MemoryHierarchy& h, StructureConfig config,
                                   NavGraph* theme_graph)
    : h_(h), config_(config), theme_graph_(theme_graph) {}

std::string StructureManager::summarize(const std::vector<std::string>& member_ids) const {
    std::vector<std::string> statements;
    statements.reserve(member_ids.size());
    for (const std::string& mid : member_ids) statements.push_back(h_.semantics.at(mid).statement);
    if (summarizer_) return summarizer_(statements);
    std::string joined;
    for (const std::string& s : statements) {
        if (!joined.empty()) joined += "; ";
        joined += s;
    }
    if (joined.size() > 80) joined.resize(80);
    return joined;
}

void StructureManager::refresh_graph_node(const std::string& theme_id) {
    if (theme_graph_) theme_graph_->upsert_node(theme_id, h_.themes.at(theme_id).centroid);
}

void StructureManager::drop_graph_node(const std::string& theme_id) {
    if (theme_graph_ && theme_graph_->contains(theme_id)) theme_graph_->remove_node(theme_id);
}

std::string StructureManager::attach_semantic(const SemanticNode& draft) {
    if (draft.id.empty()) throw RejectedInput("attach: semantic id missing");
    if (draft.embedding.empty()) throw RejectedInput("attach: semantic has no embedding");
    if (h_.dimension != 0 && draft.embedding.size() != std::size_t(h_.dimension))
        throw RejectedInput("attach: embedding dimension mismatch for " + draft.id);
    if (h_.semantics.count(draft.id))
        throw RejectedInput("attach: duplicate semantic id " + draft.id);

    std::string best_id;
    double best_sim = -2.0;
    for (const auto& [tid, theme] : h_.themes) {
        const double sim = cosine(draft.embedding, theme.centroid);
        if (sim > best_sim) { // strict: ties keep the lowest theme id
            best_sim = sim;
            best_id = tid;
        }
    }

    SemanticNode node = draft;
    std::string target;
    if (best_id.empty() || best_sim < config_.attach_threshold) {
        target = h_.new_theme_id();
        node.theme_id = target;
        h_.semantics[node.id] = node;
        Theme t;
        t.id = target;
        t.member_ids = {node.id};
        t.centroid = node.embedding;
        t.summary = summarize(t.member_ids);
        h_.themes[target] = t;
    } else {
        target = best_id;
        node.theme_id = target;
        h_.semantics[node.id] = node;
        Theme& t = h_.themes.at(target);
        t.member_ids.insert(
            std::upper_bound(t.member_ids.begin(), t.member_ids.end(), node.id), node.id);
        t.centroid = recompute_centroid(h_, t);
        t.summary = summarize(t.member_ids);
    }
    h_.reassignment_log.push_back({node.id, "", target, ReassignCause::attach});
    refresh_graph_node(target);

    if (config_.enable_split && h_.themes.at(target).member_ids.size() > config_.theme_cap)
        split_theme(target);
    return h_.semantics.at(node.id).theme_id;
}

SplitReport StructureManager::split_theme(const std::string& theme_id) {
    auto it = h_.themes.find(theme_id);
    if (it == h_.themes.end()) throw RejectedInput("split: unknown theme " + theme_id);
    if (it->second.member_ids.size() <= config_.theme_cap)
        throw RejectedInput("split: theme " + theme_id + " is within the cap");

    std::vector<std::string> member_ids = it->second.member_ids;
    std::sort(member_ids.begin(), member_ids.end());
    const std::size_t n = member_ids.size();
    std::vector<const Vec*> points;
    points.reserve(n);
    for (const std::string& mid : member_ids) points.push_back(&h_.semantics.at(mid).embedding);

    // Other themes form the fixed context every candidate is scored against.
    std::vector<View> base;
    for (const auto& [tid, theme] : h_.themes)
        if (tid != theme_id) base.push_back(view_of_theme(h_, theme));

    SplitReport report;
    report.source_theme_id = theme_id;

    auto score_candidate = [&](SplitCandidate& cand) {
        std::vector<View> views = base;
        for (const auto& group : cand.groups) {
            View v;
            v.members.reserve(group.size());
            for (const std::string& mid : group)
                v.members.push_back(&h_.semantics.at(mid).embedding);
            views.push_back(std::move(v));
        }
        cand.guidance_total = score_views(views, config_.epsilon).total;
    };

    for (std::size_t ways : {std::size_t(2), std::size_t(3)}) {
        if (ways >= n) continue;
        for (std::size_t r = 0; r < config_.split_candidate_count; ++r) {
            SplitCandidate cand;
            cand.ways = ways;
            cand.seed = mix_seed(config_.rng_seed, theme_id, ways, r);
            ClusterResult cl = spherical_kmeans(points, ways, cand.seed);
            cand.degenerate = cl.degenerate;
            cand.groups.assign(ways, {});
            for (std::size_t i = 0; i < n; ++i)
                cand.groups[cl.assignment[i]].push_back(member_ids[i]);
            if (!cand.degenerate) score_candidate(cand);
            report.candidates.push_back(std::move(cand));
        }
    }

    const bool any_valid = std::any_of(report.candidates.begin(), report.candidates.end(),
                                       [](const SplitCandidate& c) { return !c.degenerate; });
    if (!any_valid) {
        // Balanced bisection by similarity to the current centroid.
        const Vec centroid = recompute_centroid(h_, it->second);
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::vector<double> sim(n);
        for (std::size_t i = 0; i < n; ++i) sim[i] = cosine(*points[i], centroid);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (sim[a] != sim[b]) return sim[a] > sim[b];
            return member_ids[a] < member_ids[b];
        });
        SplitCandidate cand;
        cand.ways = 2;
        cand.fallback = true;
        cand.groups.assign(2, {});
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < n; ++i)
            cand.groups[i < half ? 0 : 1].push_back(member_ids[order[i]]);
        for (auto& group : cand.groups) std::sort(group.begin(), group.end());
        score_candidate(cand);
        report.candidates.push_back(std::move(cand));
    }

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const SplitCandidate& c = report.candidates[i];
        if (!c.degenerate && c.guidance_total > best_score) {
            best_score = c.guidance_total;
            best = i;
        }
    }
    report.chosen_index = best;
#ifndef NDEBUG
    for (const SplitCandidate& c : report.candidates)
        assert(c.degenerate || report.candidates[best].guidance_total >= c.guidance_total);
#endif

    std::vector<std::string> created;
    for (const auto& group : report.candidates[best].groups) {
        const std::string nid = h_.new_theme_id();
        Theme t;
        t.id = nid;
        t.member_ids = group;
        h_.themes[nid] = t;
        for (const std::string& mid : group) {
            h_.semantics.at(mid).theme_id = nid;
            h_.reassignment_log.push_back({mid, theme_id, nid, ReassignCause::split});
        }
        Theme& stored = h_.themes.at(nid);
        stored.centroid = recompute_centroid(h_, stored);
        stored.summary = summarize(stored.member_ids);
        created.push_back(nid);
    }
    h_.themes.erase(theme_id);
    drop_graph_node(theme_id);
    for (const std::string& nid : created) refresh_graph_node(nid);
    ++split_count_;

    for (const std::string& nid : created) {
        if (h_.themes.at(nid).member_ids.size() > config_.theme_cap) {
            SplitReport sub = split_theme(nid);
            for (const std::string& sid : sub.new_theme_ids) report.new_theme_ids.push_back(sid);
        } else {
            report.new_theme_ids.push_back(nid);
        }
    }
    return report;
}

MergeReport StructureManager::merge_theme(const std::string& tiny_theme_id) {
    auto it = h_.themes.find(tiny_theme_id);
    if (it == h_.themes.end()) throw RejectedInput("merge: unknown theme " + tiny_theme_id);
    if (it->second.member_ids.size() > config_.tiny_theme_size)
        throw RejectedInput("merge: theme " + tiny_theme_id + " exceeds the tiny threshold");

    MergeReport report;
    report.tiny_theme_id = tiny_theme_id;

    const double keep_score = guidance(h_, config_.epsilon).total;
    report.options.push_back({"", keep_score, true});
    if (h_.themes.size() == 1) return report;

    const Vec tiny_centroid = it->second.centroid;
    const std::vector<std::string> tiny_members = it->second.member_ids;

    std::vector<std::pair<double, std::string>> neighbors;
    for (const auto& [tid, theme] : h_.themes) {
        if (tid == tiny_theme_id) continue;
        neighbors.push_back({cosine(tiny_centroid, theme.centroid), tid});
    }
    std::sort(neighbors.begin(), neighbors.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return a.second < b.second;
              });
    if (neighbors.size() > config_.merge_neighbor_count)
        neighbors.resize(config_.merge_neighbor_count);

    std::string best_target;
    double best_score = keep_score;
    for (const auto& [sim, tid] : neighbors) {
        (void)sim;
        const Theme& other = h_.themes.at(tid);
        MergeOption opt;
        opt.target_theme_id = tid;
        opt.feasible =
            tiny_members.size() + other.member_ids.size() <= config_.theme_cap;
        if (opt.feasible) {
            std::vector<View> views;
            View merged = view_of_theme(h_, other);
            for (const std::string& mid : tiny_members)
                merged.members.push_back(&h_.semantics.at(mid).embedding);
            for (const auto& [vid, theme] : h_.themes)
                if (vid != tiny_theme_id && vid != tid)
                    views.push_back(view_of_theme(h_, theme));
            views.push_back(std::move(merged));
            opt.guidance_total = score_views(views, config_.epsilon).total;
            if (opt.guidance_total > best_score ||
                (!best_target.empty() && opt.guidance_total == best_score &&
                 tid < best_target)) {
                best_score = opt.guidance_total;
                best_target = tid;
            }
        }
        report.options.push_back(std::move(opt));
    }

    if (!best_target.empty()) {
        Theme& target = h_.themes.at(best_target);
        for (const std::string& mid : tiny_members) {
            target.member_ids.insert(
                std::upper_bound(target.member_ids.begin(), target.member_ids.end(), mid),
                mid);
            h_.semantics.at(mid).theme_id = best_target;
            h_.reassignment_log.push_back({mid, tiny_theme_id, best_target, ReassignCause::merge});
        }
        h_.themes.erase(tiny_theme_id);
        target.centroid = recompute_centroid(h_, target);
        target.summary = summarize(target.member_ids);
        drop_graph_node(tiny_theme_id);
        refresh_graph_node(best_target);
        ++merge_count_;
        report.applied_target_id = best_target;
    }
    return report;
}

std::vector<MergeReport> StructureManager::merge_sweep() {
    std::vector<MergeReport> reports;
    insertions_since_sweep_ = 0;
    if (!config_.enable_merge) return reports;
    std::vector<std::string> tiny_ids;
    for (const auto& [tid, theme] : h_.themes)
        if (theme.member_ids.size() <= config_.tiny_theme_size) tiny_ids.push_back(tid);
    for (const std::string& tid : tiny_ids) {
        auto it = h_.themes.find(tid);
        if (it == h_.themes.end()) continue; // absorbed earlier in this sweep
        if (it->second.member_ids.size() > config_.tiny_theme_size) continue;
        reports.push_back(merge_theme(tid));
    }
    return reports;
}

bool StructureManager::note_insertion() {
    ++insertions_since_sweep_;
    if (config_.enable_merge && insertions_since_sweep_ >= config_.merge_sweep_interval) {
        merge_sweep();
        return true;
    }
    return false;
}

} // namespace xmem
