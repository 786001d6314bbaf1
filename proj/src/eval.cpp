// Evaluation harness implementation: per-item scoring, the naive baseline,
// aggregation, and deterministic report rendering.

#include "xmem/eval.hpp"

#include "xmem/embedding.hpp"
#include "xmem/errors.hpp"
#include "xmem/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <thread>
#include <utility>

namespace xmem {

namespace {

using nlohmann::json;

const char* kHitLabels[4] = {"zero", "1-hit", "2-hit", "multi-hit"};

std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, value);
    return buf;
}

} // namespace

EvalSystem eval_system_from_string(const std::string& name) {
    if (name == "ours") return EvalSystem::ours;
    if (name == "naive") return EvalSystem::naive;
    if (name == "memory_only") return EvalSystem::memory_only;
    if (name == "+repsel") return EvalSystem::repsel;
    if (name == "+uncsion") return EvalSystem::uncsion;
    throw RejectedInput("unknown eval system: " + name +
                        " (expected ours, naive, memory_only, +repsel, +uncsion)");
}

std::string to_string(EvalSystem system) {
    switch (system) {
        case EvalSystem::ours: return "ours";
        case EvalSystem::naive: return "naive";
        case EvalSystem::memory_only: return "memory_only";
        case EvalSystem::repsel: return "+repsel";
        case EvalSystem::uncsion: return "+uncsion";
    }
    return "ours";
}

RetrievalOptions options_for(EvalSystem system) {
    RetrievalOptions options;
    switch (system) {
        case EvalSystem::ours:
            break;
        case EvalSystem::memory_only:
            options.use_representative_selection = false;
            options.use_uncertainty_gate = false;
            break;
        case EvalSystem::repsel:
            options.use_uncertainty_gate = false;
            break;
        case EvalSystem::uncsion:
            options.use_representative_selection = false;
            break;
        case EvalSystem::naive:
            throw RejectedInput("the naive baseline has no retrieval options");
    }
    return options;
}

std::vector<NaiveChunk> naive_chunks(const MemoryHierarchy& h, EmbeddingProvider& embedder,
                                     std::size_t chunk_messages) {
    if (chunk_messages == 0) throw RejectedInput("chunk size must be positive");
    std::vector<NaiveChunk> chunks;
    for (const auto& [session_id, order] : h.session_order) {
        for (std::size_t start = 0; start < order.size(); start += chunk_messages) {
            NaiveChunk chunk;
            chunk.id = session_id + "#" + std::to_string(start / chunk_messages + 1);
            std::size_t end = std::min(start + chunk_messages, order.size());
            for (std::size_t i = start; i < end; ++i) {
                const Message& m = h.messages.at(order[i]);
                if (i > start) chunk.text += "\n";
                chunk.text += "[" + format_timestamp(m.timestamp) + "] " + m.speaker + ": " +
                              m.text;
            }
            chunks.push_back(std::move(chunk));
        }
    }
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    std::vector<Vec> embeddings = embedder.embed_batch(texts);
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].embedding = std::move(embeddings[i]);
    return chunks;
}

std::vector<std::size_t> naive_topk(const Vec& query, const std::vector<NaiveChunk>& chunks,
                                    std::size_t k) {
    std::vector<std::size_t> order(chunks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> sim(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) sim[i] = cosine(query, chunks[i].embedding);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sim[a] != sim[b]) return sim[a] > sim[b];
        return a < b;
    });
    if (order.size() > k) order.resize(k);
    return order;
}

namespace {

ItemResult score_item(const MemoryEngine& engine, const QAItem& qa, std::size_t index,
                      const Vec& question_embedding, EvalSystem system,
                      const std::vector<NaiveChunk>& chunks) {
    ItemResult r;
    r.index = index;
    r.question = qa.question;
    r.gold_answer = qa.answer;
    r.category = qa.category;
    try {
        if (system == EvalSystem::naive) {
            std::vector<std::size_t> top =
                naive_topk(question_embedding, chunks, engine.config().naive_top_k);
            std::string context;
            for (std::size_t rank = 0; rank < top.size(); ++rank) {
                if (rank > 0) context += "\n";
                context += chunks[top[rank]].text;
                r.blocks.push_back(chunks[top[rank]].text);
            }
            ReaderResult reader = engine.suite().reader->answer(qa.question, context);
            r.answer = reader.text;
            r.tokens.context_tokens = text::count_tokens(context);
            r.tokens.auxiliary_call_tokens = 0;
            r.tokens.total = reader.call_tokens;
        } else {
            Query q = engine.make_query(qa.question);
            q.embedding = question_embedding;
            AnswerResult ar = xmem::answer(std::move(q), engine.hierarchy(),
                                           engine.theme_graph(), engine.semantic_graph(),
                                           engine.suite(), options_for(system));
            r.answer = ar.answer;
            r.tokens = ar.retrieval.token_usage;
            for (const ContextUnit& unit : ar.retrieval.units) r.blocks.push_back(unit.text);
        }
        r.bleu1 = xmem::bleu1(r.answer, qa.answer);
        r.token_f1 = xmem::token_f1(r.answer, qa.answer);
        r.rouge_l = xmem::rouge_l(r.answer, qa.answer);
        r.evidence = classify_hits(r.blocks, qa.answer);
        r.coverage = coverage_efficiency(r.blocks, qa.answer);
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    return r;
}

} // namespace

EvalReport run_eval(const MemoryEngine& engine, const Dataset& dataset, EvalSystem system,
                    std::size_t parallelism) {
    EvalReport report;
    report.system = system;
    if (dataset.qa.empty()) return report;

    // Embeddings are computed up front (and serially) so that workers never
    // touch the shared embedding cache.
    std::vector<std::string> questions;
    questions.reserve(dataset.qa.size());
    for (const auto& qa : dataset.qa) questions.push_back(qa.question);
    std::vector<Vec> question_embeddings = engine.suite().embedder->embed_batch(questions);

    std::vector<NaiveChunk> chunks;
    if (system == EvalSystem::naive) {
        chunks = naive_chunks(engine.hierarchy(), *engine.suite().embedder,
                              engine.config().naive_chunk_messages);
    }

    report.items.resize(dataset.qa.size());
    auto work = [&](std::size_t i) {
        report.items[i] =
            score_item(engine, dataset.qa[i], i, question_embeddings[i], system, chunks);
    };
    if (parallelism <= 1 || dataset.qa.size() <= 1) {
        for (std::size_t i = 0; i < dataset.qa.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::size_t workers = std::min(parallelism, dataset.qa.size());
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < dataset.qa.size();
                     i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // Aggregation in index order: identical output for any worker schedule.
    std::map<std::string, std::vector<const ItemResult*>> by_category;
    std::array<std::size_t, 4> hit_counts{};
    double sum_blocks = 0.0;
    double sum_cover_tokens = 0.0;
    for (const ItemResult& r : report.items) {
        if (r.failed) {
            report.failures += 1;
            continue;
        }
        by_category[r.category].push_back(&r);
        if (r.evidence.undefined) {
            report.undefined_items += 1;
        } else {
            for (HitClass cls : r.evidence.block_classes) {
                hit_counts[std::size_t(cls)] += 1;
                report.blocks_total += 1;
            }
            if (r.coverage.covered) {
                report.covered_items += 1;
                sum_blocks += double(r.coverage.blocks_for_coverage);
                sum_cover_tokens += double(r.coverage.tokens_for_coverage);
            } else {
                report.uncovered_items += 1;
            }
        }
    }
    if (report.blocks_total > 0) {
        for (std::size_t c = 0; c < 4; ++c) {
            report.hit_proportions[c] = double(hit_counts[c]) / double(report.blocks_total);
        }
    }
    if (report.covered_items > 0) {
        report.mean_blocks_for_coverage = sum_blocks / double(report.covered_items);
        report.mean_tokens_for_coverage = sum_cover_tokens / double(report.covered_items);
    }

    auto mean_row = [](const std::string& name, const std::vector<const ItemResult*>& items) {
        CategoryRow row;
        row.category = name;
        row.items = items.size();
        for (const ItemResult* r : items) {
            row.bleu1 += r->bleu1;
            row.token_f1 += r->token_f1;
            row.rouge_l += r->rouge_l;
            row.tokens_per_query += double(r->tokens.total);
        }
        if (!items.empty()) {
            row.bleu1 /= double(items.size());
            row.token_f1 /= double(items.size());
            row.rouge_l /= double(items.size());
            row.tokens_per_query /= double(items.size());
        }
        return row;
    };
    std::vector<const ItemResult*> scored;
    for (const auto& [name, items] : by_category) {
        report.categories.push_back(mean_row(name, items));
        scored.insert(scored.end(), items.begin(), items.end());
    }
    if (!scored.empty()) report.categories.push_back(mean_row("average", scored));
    return report;
}

std::string eval_report_json(const EvalReport& report) {
    json doc;
    doc["system"] = to_string(report.system);
    doc["failures"] = report.failures;

    json items = json::array();
    for (const ItemResult& r : report.items) {
        json item;
        item["index"] = r.index;
        item["category"] = r.category;
        item["question"] = r.question;
        item["gold_answer"] = r.gold_answer;
        if (r.failed) {
            item["failed"] = true;
            item["error"] = r.error;
        } else {
            item["answer"] = r.answer;
            item["bleu1"] = fmt("%.4f", r.bleu1);
            item["token_f1"] = fmt("%.4f", r.token_f1);
            item["rouge_l"] = fmt("%.4f", r.rouge_l);
            item["blocks"] = r.blocks.size();
            item["tokens"] = {{"context", r.tokens.context_tokens},
                              {"auxiliary", r.tokens.auxiliary_call_tokens},
                              {"total", r.tokens.total}};
            if (r.evidence.undefined) {
                item["evidence_undefined"] = true;
            } else {
                json classes = json::array();
                for (HitClass cls : r.evidence.block_classes) classes.push_back(int(cls));
                item["hit_classes"] = classes;
                json cover;
                cover["covered"] = r.coverage.covered;
                if (r.coverage.covered) {
                    cover["blocks_for_coverage"] = r.coverage.blocks_for_coverage;
                    cover["tokens_for_coverage"] = r.coverage.tokens_for_coverage;
                }
                item["coverage"] = cover;
            }
        }
        items.push_back(item);
    }
    doc["items"] = items;

    json categories = json::array();
    for (const CategoryRow& row : report.categories) {
        categories.push_back({{"category", row.category},
                              {"items", row.items},
                              {"bleu1", fmt("%.4f", row.bleu1)},
                              {"token_f1", fmt("%.4f", row.token_f1)},
                              {"rouge_l", fmt("%.4f", row.rouge_l)},
                              {"tokens_per_query", fmt("%.2f", row.tokens_per_query)}});
    }
    doc["categories"] = categories;

    json evidence;
    evidence["blocks_total"] = report.blocks_total;
    for (std::size_t c = 0; c < 4; ++c) {
        evidence[kHitLabels[c]] = fmt("%.4f", report.hit_proportions[c]);
    }
    doc["evidence"] = evidence;

    json coverage;
    coverage["covered_items"] = report.covered_items;
    coverage["uncovered_items"] = report.uncovered_items;
    coverage["undefined_items"] = report.undefined_items;
    coverage["mean_blocks_for_coverage"] = fmt("%.2f", report.mean_blocks_for_coverage);
    coverage["mean_tokens_for_coverage"] = fmt("%.2f", report.mean_tokens_for_coverage);
    doc["coverage"] = coverage;

    return doc.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& report) {
    std::string out = "system: " + to_string(report.system) + "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %6s %10s %10s %10s %14s\n", "category", "items",
                  "bleu1", "token_f1", "rouge_l", "tokens/query");
    out += line;
    for (const CategoryRow& row : report.categories) {
        std::snprintf(line, sizeof(line), "%-16s %6zu %10.4f %10.4f %10.4f %14.2f\n",
                      row.category.c_str(), row.items, row.bleu1, row.token_f1, row.rouge_l,
                      row.tokens_per_query);
        out += line;
    }
    std::snprintf(line, sizeof(line),
                  "evidence blocks: %zu  zero %.4f  1-hit %.4f  2-hit %.4f  multi-hit %.4f\n",
                  report.blocks_total, report.hit_proportions[0], report.hit_proportions[1],
                  report.hit_proportions[2], report.hit_proportions[3]);
    out += line;
    std::snprintf(line, sizeof(line),
                  "coverage: covered %zu  uncovered %zu  undefined %zu  mean blocks %.2f  "
                  "mean tokens %.2f\n",
                  report.covered_items, report.uncovered_items, report.undefined_items,
                  report.mean_blocks_for_coverage, report.mean_tokens_for_coverage);
    out += line;
    std::snprintf(line, sizeof(line), "failures: %zu\n", report.failures);
    out += line;
    return out;
}

} // namespace xmem
