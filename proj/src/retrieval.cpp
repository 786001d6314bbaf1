// Two-stage retrieval: greedy representative selection over the navigation
// graphs, then uncertainty-gated evidence inclusion under a token budget.

#include "xmem/retrieval.hpp"

#include "xmem/embedding.hpp"
#include "xmem/errors.hpp"
#include "xmem/text.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace xmem {

namespace {

// Fills ids (raw descending, ties ascending id), s~, and Z for a candidate
// set whose raw similarities are already present.
void finalize_candidates(CandidateSet& set, const NavGraph& graph) {
    set.ids.clear();
    set.ids.reserve(set.raw.size());
    for (const auto& [id, raw] : set.raw) {
        (void)raw;
        set.ids.push_back(id);
    }
    std::sort(set.ids.begin(), set.ids.end(), [&](const std::string& a, const std::string& b) {
        double ra = set.raw.at(a);
        double rb = set.raw.at(b);
        if (ra != rb) return ra > rb;
        return a < b;
    });

    set.s_tilde.clear();
    if (!set.ids.empty()) {
        double lo = set.raw.at(set.ids.back());
        double hi = set.raw.at(set.ids.front());
        double span = hi - lo;
        for (const auto& id : set.ids) {
            set.s_tilde[id] = span < 1e-12 ? 1.0 : (set.raw.at(id) - lo) / span;
        }
    }

    // Z = max_i (w_ii + sum of edge weights into the candidate set), so every
    // coverage gain lands in [0, 1].
    set.z = 1.0;
    for (const auto& id : set.ids) {
        double mass = 1.0;
        if (graph.contains(id)) {
            for (const auto& edge : graph.neighborhood(id)) {
                if (set.raw.count(edge.neighbor) > 0) mass += edge.weight;
            }
        }
        set.z = std::max(set.z, mass);
    }
}

ContextUnit episode_unit(const MemoryHierarchy& h, const std::string& episode_id) {
    const Episode& ep = h.episodes.at(episode_id);
    std::string text = "[" + episode_id + "] (" + format_timestamp(ep.timestamp) + ") " +
                       ep.title + ": " + ep.content;
    return ContextUnit{episode_id, "episode", std::move(text)};
}

ContextUnit messages_unit(const MemoryHierarchy& h, const std::string& episode_id) {
    const Episode& ep = h.episodes.at(episode_id);
    std::string text = "[" + episode_id + " messages]";
    for (const auto& mid : ep.message_ids) {
        const Message& m = h.messages.at(mid);
        text += "\n[" + mid + "] [" + format_timestamp(m.timestamp) + "] " + m.speaker + ": " +
                m.text;
    }
    return ContextUnit{episode_id + " messages", "messages", std::move(text)};
}

bool fits_budget(const std::vector<ContextUnit>& units, std::size_t budget) {
    return text::count_tokens(assemble_context(units)) <= budget;
}

// Similarity-only fallback when the uncertainty oracle is unavailable: the
// coarse context plus the top-ranked episode, if it fits.
void degrade_to_top_episode(const Query& q, const std::vector<std::string>& ranked,
                            RetrievalResult& result, const MemoryHierarchy& h,
                            std::size_t coarse_count) {
    result.degraded = true;
    result.units.resize(coarse_count);
    result.episodes_included.clear();
    result.messages_included.clear();
    if (ranked.empty()) return;
    std::vector<ContextUnit> trial = result.units;
    trial.push_back(episode_unit(h, ranked.front()));
    if (fits_budget(trial, q.budget)) {
        result.units = std::move(trial);
        result.episodes_included.push_back(EpisodeInclusion{ranked.front(), 0.0, 0.0, false});
    }
}

} // namespace

std::pair<CandidateSet, CandidateSet> gather_candidates(const Query& q,
                                                        const MemoryHierarchy& h,
                                                        const NavGraph& semantic_graph,
                                                        const NavGraph& theme_graph) {
    if (q.embedding.empty()) throw RejectedInput("query embedding must not be empty");

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(h.semantics.size());
    for (const auto& [id, node] : h.semantics) {
        scored.emplace_back(id, cosine(q.embedding, node.embedding));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > q.stage1.candidate_pool) scored.resize(q.stage1.candidate_pool);

    CandidateSet semantics;
    std::set<std::string> theme_ids;
    for (const auto& [id, raw] : scored) {
        semantics.raw[id] = raw;
        theme_ids.insert(h.semantics.at(id).theme_id);
    }
    finalize_candidates(semantics, semantic_graph);

    CandidateSet themes;
    for (const auto& tid : theme_ids) {
        themes.raw[tid] = cosine(q.embedding, h.themes.at(tid).centroid);
    }
    finalize_candidates(themes, theme_graph);

    return {std::move(themes), std::move(semantics)};
}

std::vector<std::string> select_representatives(const CandidateSet& candidates,
                                                const NavGraph& graph, double alpha,
                                                double coverage_target,
                                                std::size_t max_representatives) {
    if (alpha < 0.0 || alpha > 1.0) throw RejectedInput("alpha must lie in [0, 1]");
    if (coverage_target < 0.0 || coverage_target > 1.0) {
        throw RejectedInput("coverage target must lie in [0, 1]");
    }

    std::vector<std::string> reps;
    if (candidates.ids.empty() || max_representatives == 0) return reps;

    std::set<std::string> covered;
    std::set<std::string> chosen;
    auto in_set = [&](const std::string& id) { return candidates.raw.count(id) > 0; };

    while (reps.size() < max_representatives &&
           double(covered.size()) < coverage_target * double(candidates.raw.size())) {
        std::string best;
        double best_score = 0.0;
        double best_s = 0.0;
        for (const auto& id : candidates.ids) {
            if (chosen.count(id) > 0) continue;
            double gain = covered.count(id) > 0 ? 0.0 : 1.0; // w_ii = 1
            if (graph.contains(id)) {
                for (const auto& edge : graph.neighborhood(id)) {
                    if (in_set(edge.neighbor) && covered.count(edge.neighbor) == 0) {
                        gain += edge.weight;
                    }
                }
            }
            double s = candidates.s_tilde.at(id);
            double score = alpha * gain / candidates.z + (1.0 - alpha) * s;
            if (best.empty() || score > best_score ||
                (score == best_score && (s > best_s || (s == best_s && id < best)))) {
                best = id;
                best_score = score;
                best_s = s;
            }
        }
        if (best.empty()) break; // candidate set exhausted
        covered.insert(best);
        if (graph.contains(best)) {
            for (const auto& edge : graph.neighborhood(best)) {
                if (in_set(edge.neighbor)) covered.insert(edge.neighbor);
            }
        }
        reps.push_back(best);
        chosen.insert(best);
    }
    return reps;
}

std::vector<std::string> rank_episodes(const Query& q,
                                       const std::vector<std::string>& semantics_selected,
                                       const MemoryHierarchy& h, double beta) {
    if (beta < 0.0 || beta > 1.0) throw RejectedInput("beta must lie in [0, 1]");
    if (semantics_selected.empty()) return {};

    std::map<std::string, std::size_t> support_counts;
    for (const auto& sid : semantics_selected) {
        const SemanticNode& node = h.semantics.at(sid);
        std::set<std::string> seen; // count each episode once per semantic
        for (const auto& eid : node.source_episode_ids) {
            if (h.episodes.count(eid) > 0 && seen.insert(eid).second) support_counts[eid] += 1;
        }
    }
    if (support_counts.empty()) return {};

    const double denom = double(semantics_selected.size());
    std::map<std::string, double> score;
    std::vector<std::string> ids;
    ids.reserve(support_counts.size());
    for (const auto& [eid, count] : support_counts) {
        const Episode& ep = h.episodes.at(eid);
        score[eid] =
            beta * cosine(q.embedding, ep.embedding) + (1.0 - beta) * (double(count) / denom);
        ids.push_back(eid);
    }
    std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
        if (score.at(a) != score.at(b)) return score.at(a) > score.at(b);
        TimePoint ta = h.episodes.at(a).timestamp;
        TimePoint tb = h.episodes.at(b).timestamp;
        if (ta != tb) return ta < tb;
        return a < b;
    });
    return ids;
}

std::string assemble_context(const std::vector<ContextUnit>& units) {
    std::string coarse;
    std::string fine;
    for (const ContextUnit& u : units) {
        std::string& section = (u.kind == "theme" || u.kind == "semantic") ? coarse : fine;
        section += "\n" + u.text;
    }
    return "Semantic Memories:" + coarse + "\nEpisodic Memories:" + fine;
}

void include_evidence(const Query& q, const std::vector<std::string>& ranked_episodes,
                      RetrievalResult& result, const MemoryHierarchy& h,
                      UncertaintyOracle& oracle) {
    if (ranked_episodes.empty()) return;
    const std::size_t coarse_count = result.units.size();

    try {
        OracleEstimate current = oracle.estimate(q.text, assemble_context(result.units));
        result.token_usage.auxiliary_call_tokens += current.call_tokens;

        std::size_t failures = 0;
        for (const auto& eid : ranked_episodes) {
            std::vector<ContextUnit> trial = result.units;
            trial.push_back(episode_unit(h, eid));
            // Budget precedence: the first unit that would overflow stops
            // inclusion before its oracle call is made.
            if (!fits_budget(trial, q.budget)) break;

            OracleEstimate est = oracle.estimate(q.text, assemble_context(trial));
            result.token_usage.auxiliary_call_tokens += est.call_tokens;
            if (current.uncertainty - est.uncertainty >= q.stage2.uncertainty_drop_min) {
                result.units = std::move(trial);
                EpisodeInclusion inc{eid, current.uncertainty, est.uncertainty, false};
                current = est;
                failures = 0;
                if (q.stage2.expand_messages && !h.episodes.at(eid).message_ids.empty()) {
                    std::vector<ContextUnit> expanded = result.units;
                    expanded.push_back(messages_unit(h, eid));
                    if (!fits_budget(expanded, q.budget)) {
                        result.episodes_included.push_back(inc);
                        break;
                    }
                    OracleEstimate est2 = oracle.estimate(q.text, assemble_context(expanded));
                    result.token_usage.auxiliary_call_tokens += est2.call_tokens;
                    if (current.uncertainty - est2.uncertainty >= q.stage2.uncertainty_drop_min) {
                        result.units = std::move(expanded);
                        inc.messages_included = true;
                        inc.uncertainty_after = est2.uncertainty;
                        current = est2;
                        const Episode& ep = h.episodes.at(eid);
                        result.messages_included.insert(result.messages_included.end(),
                                                        ep.message_ids.begin(),
                                                        ep.message_ids.end());
                    }
                    // A rejected expansion does not count toward patience.
                }
                result.episodes_included.push_back(inc);
            } else if (++failures >= q.stage2.patience) {
                break;
            }
        }
    } catch (const TransportError&) {
        degrade_to_top_episode(q, ranked_episodes, result, h, coarse_count);
    } catch (const ProtocolError&) {
        degrade_to_top_episode(q, ranked_episodes, result, h, coarse_count);
    }
}

AnswerResult answer(Query q, const MemoryHierarchy& h, const NavGraph& theme_graph,
                    const NavGraph& semantic_graph, const ProviderSuite& suite,
                    const RetrievalOptions& options) {
    if (q.text.empty()) throw RejectedInput("query text must not be empty");
    if (q.embedding.empty()) q.embedding = suite.embedder->embed(q.text);
    if (h.dimension > 0 && q.embedding.size() != std::size_t(h.dimension)) {
        throw RejectedInput("query embedding dimension does not match the store");
    }

    AnswerResult out;
    RetrievalResult& r = out.retrieval;

    if (h.semantics.empty()) {
        r.empty_hierarchy = true;
    } else {
        auto [theme_candidates, semantic_candidates] =
            gather_candidates(q, h, semantic_graph, theme_graph);

        if (options.use_representative_selection) {
            r.themes_selected = select_representatives(
                theme_candidates, theme_graph, q.stage1.alpha, q.stage1.coverage_target,
                q.stage1.max_theme_representatives);
            r.semantics_selected = select_representatives(
                semantic_candidates, semantic_graph, q.stage1.alpha, q.stage1.coverage_target,
                q.stage1.max_semantic_representatives);
        } else {
            // Ablation: plain similarity ranking in place of the greedy stage.
            for (const auto& id : semantic_candidates.ids) {
                if (r.semantics_selected.size() >= q.stage1.max_semantic_representatives) break;
                r.semantics_selected.push_back(id);
            }
            std::set<std::string> seen;
            for (const auto& sid : r.semantics_selected) {
                const std::string& tid = h.semantics.at(sid).theme_id;
                if (seen.insert(tid).second &&
                    r.themes_selected.size() < q.stage1.max_theme_representatives) {
                    r.themes_selected.push_back(tid);
                }
            }
        }

        // Coarse context; units that would overflow are skipped, not trimmed.
        auto try_add = [&](ContextUnit unit) {
            std::vector<ContextUnit> trial = r.units;
            trial.push_back(std::move(unit));
            if (fits_budget(trial, q.budget)) {
                r.units = std::move(trial);
            } else {
                r.coarse_truncated = true;
            }
        };
        for (const auto& tid : r.themes_selected) {
            try_add(ContextUnit{tid, "theme", "[" + tid + "] " + h.themes.at(tid).summary});
        }
        for (const auto& sid : r.semantics_selected) {
            try_add(
                ContextUnit{sid, "semantic", "[" + sid + "] " + h.semantics.at(sid).statement});
        }

        std::vector<std::string> ranked = rank_episodes(q, r.semantics_selected, h, q.beta);
        if (options.use_uncertainty_gate) {
            include_evidence(q, ranked, r, h, *suite.oracle);
        } else {
            // Ablation: unconditional inclusion until the first overflow.
            for (const auto& eid : ranked) {
                std::vector<ContextUnit> trial = r.units;
                trial.push_back(episode_unit(h, eid));
                if (!fits_budget(trial, q.budget)) break;
                r.units = std::move(trial);
                r.episodes_included.push_back(EpisodeInclusion{eid, 0.0, 0.0, false});
            }
        }
    }

    r.context = assemble_context(r.units);
    r.token_usage.context_tokens = text::count_tokens(r.context);
    ReaderResult reader = suite.reader->answer(q.text, r.context);
    out.answer = reader.text;
    r.token_usage.total = r.token_usage.auxiliary_call_tokens + reader.call_tokens;
    return out;
}

} // namespace xmem
