// Metric implementations over the shared metric tokenisation.

#include "xmem/metrics.hpp"

#include "xmem/errors.hpp"
#include "xmem/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace xmem {

namespace {

std::map<std::string, std::size_t> bag(const std::vector<std::string>& tokens) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) counts[t] += 1;
    return counts;
}

std::size_t multiset_overlap(const std::map<std::string, std::size_t>& a,
                             const std::map<std::string, std::size_t>& b) {
    std::size_t overlap = 0;
    for (const auto& [token, count] : a) {
        auto it = b.find(token);
        if (it != b.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

} // namespace

double bleu1(const std::string& candidate, const std::string& reference) {
    std::vector<std::string> ref = text::metric_tokens(reference);
    if (ref.empty()) throw RejectedInput("bleu1: reference must carry at least one token");
    std::vector<std::string> cand = text::metric_tokens(candidate);
    if (cand.empty()) return 0.0;

    std::size_t clipped = multiset_overlap(bag(cand), bag(ref));
    double precision = double(clipped) / double(cand.size());
    double brevity =
        cand.size() >= ref.size() ? 1.0 : std::exp(1.0 - double(ref.size()) / double(cand.size()));
    return precision * brevity;
}

double token_f1(const std::string& candidate, const std::string& reference) {
    std::vector<std::string> cand = text::metric_tokens(candidate);
    std::vector<std::string> ref = text::metric_tokens(reference);
    if (cand.empty() && ref.empty()) return 1.0; // both empty, by convention
    if (cand.empty() || ref.empty()) return 0.0;

    std::size_t overlap = multiset_overlap(bag(cand), bag(ref));
    if (overlap == 0) return 0.0;
    double precision = double(overlap) / double(cand.size());
    double recall = double(overlap) / double(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    std::vector<std::string> cand = text::metric_tokens(candidate);
    std::vector<std::string> ref = text::metric_tokens(reference);
    if (cand.empty() && ref.empty()) return 1.0;
    if (cand.empty() || ref.empty()) return 0.0;

    // Classic O(n*m) LCS table, rolling rows.
    std::vector<std::size_t> prev(ref.size() + 1, 0);
    std::vector<std::size_t> cur(ref.size() + 1, 0);
    for (std::size_t i = 1; i <= cand.size(); ++i) {
        for (std::size_t j = 1; j <= ref.size(); ++j) {
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    std::size_t lcs = prev[ref.size()];
    if (lcs == 0) return 0.0;
    double precision = double(lcs) / double(cand.size());
    double recall = double(lcs) / double(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

EvidenceReport classify_hits(const std::vector<std::string>& blocks,
                             const std::string& gold_answer) {
    EvidenceReport report;
    std::vector<std::string> answer_tokens = text::distinct_content_tokens(gold_answer);
    if (answer_tokens.empty()) {
        report.undefined = true;
        return report;
    }
    std::set<std::string> answer(answer_tokens.begin(), answer_tokens.end());

    report.block_classes.reserve(blocks.size());
    for (const auto& block : blocks) {
        std::set<std::string> present;
        for (const auto& t : text::metric_tokens(block)) {
            if (answer.count(t) > 0) present.insert(t);
        }
        HitClass cls = present.empty()   ? HitClass::zero
                       : present.size() == 1 ? HitClass::one
                       : present.size() == 2 ? HitClass::two
                                             : HitClass::multi;
        report.block_classes.push_back(cls);
    }
    if (!report.block_classes.empty()) {
        for (HitClass cls : report.block_classes) {
            report.proportions[std::size_t(cls)] += 1.0;
        }
        for (double& p : report.proportions) p /= double(report.block_classes.size());
    }
    return report;
}

CoverageEfficiency coverage_efficiency(const std::vector<std::string>& blocks,
                                       const std::string& gold_answer) {
    CoverageEfficiency out;
    std::vector<std::string> answer_tokens = text::distinct_content_tokens(gold_answer);
    if (answer_tokens.empty()) {
        out.undefined = true;
        return out;
    }

    std::vector<std::set<std::string>> block_hits(blocks.size());
    std::set<std::string> answer(answer_tokens.begin(), answer_tokens.end());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (const auto& t : text::metric_tokens(blocks[i])) {
            if (answer.count(t) > 0) block_hits[i].insert(t);
        }
    }

    std::set<std::string> uncovered = answer;
    std::vector<bool> used(blocks.size(), false);
    while (!uncovered.empty()) {
        std::size_t best = blocks.size();
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (used[i]) continue;
            std::size_t gain = 0;
            for (const auto& t : block_hits[i]) {
                if (uncovered.count(t) > 0) ++gain;
            }
            if (gain > best_gain) { // ties keep the earlier rank
                best_gain = gain;
                best = i;
            }
        }
        if (best == blocks.size()) return out; // covered stays false: impossible
        used[best] = true;
        for (const auto& t : block_hits[best]) uncovered.erase(t);
        out.blocks_for_coverage += 1;
        out.tokens_for_coverage += text::count_tokens(blocks[best]);
    }
    out.covered = true;
    return out;
}

} // namespace xmem
