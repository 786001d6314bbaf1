#include "xmem/hierarchy.hpp"

#include "xmem/errors.hpp"
#include "xmem/vecops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace xmem {

TimePoint parse_timestamp(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char sep = 0;
    int n = std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se);
    if (n < 6 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 ||
        h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) {
        throw RejectedInput("unparseable timestamp: '" + iso + "'");
    }
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = (n >= 7) ? se : 0;
    return static_cast<TimePoint>(timegm(&tm));
}

std::string format_timestamp(TimePoint t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[72];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

const char* to_string(ReassignCause c) {
    switch (c) {
        case ReassignCause::attach: return "attach";
        case ReassignCause::split: return "split";
        case ReassignCause::merge: return "merge";
    }
    return "attach";
}

ReassignCause reassign_cause_from_string(const std::string& s) {
    if (s == "split") return ReassignCause::split;
    if (s == "merge") return ReassignCause::merge;
    if (s == "attach") return ReassignCause::attach;
    throw RejectedInput("unknown reassignment cause: '" + s + "'");
}

std::string MemoryHierarchy::make_id(const char* prefix, std::uint64_t n) {
    char buf[72];
    std::snprintf(buf, sizeof(buf), "%s-%08llu", prefix, static_cast<unsigned long long>(n));
    return buf;
}

Vec recompute_centroid(const MemoryHierarchy& h, const Theme& theme) {
    Vec mean(static_cast<std::size_t>(h.dimension), 0.0);
    const Vec* first = nullptr;
    for (const auto& sid : theme.member_ids) {
        auto it = h.semantics.find(sid);
        if (it == h.semantics.end()) continue;
        if (!first) first = &it->second.embedding;
        vecops::add_inplace(mean, it->second.embedding);
    }
    if (!vecops::normalize_inplace(mean)) {
        // Antipodal members can cancel; fall back to the first member.
        if (first) return *first;
    }
    return mean;
}

ThemePartition build_partition(const MemoryHierarchy& h) {
    ThemePartition p;
    for (const auto& [tid, theme] : h.themes) {
        p.sizes.push_back(theme.member_ids.size());
        for (const auto& sid : theme.member_ids) p.assignments[sid] = tid;
    }
    p.theme_count = h.themes.size();
    p.semantic_count = h.semantics.size();
    return p;
}

namespace {

bool is_unit(const Vec& v, double tol = 1e-6) {
    double n = std::sqrt(vecops::squared_norm(v));
    return std::abs(n - 1.0) <= tol;
}

} // namespace

std::vector<std::string> validate(const MemoryHierarchy& h) {
    std::vector<std::string> out;
    auto bad = [&](const std::string& s) { out.push_back(s); };
    const auto dim = static_cast<std::size_t>(h.dimension);

    for (const auto& [id, m] : h.messages) {
        if (m.text.empty()) bad("empty message text: " + id);
    }

    // Per-session non-decreasing timestamps in insertion order.
    for (const auto& [sid, order] : h.session_order) {
        TimePoint prev = INT64_MIN;
        for (const auto& mid : order) {
            auto it = h.messages.find(mid);
            if (it == h.messages.end()) {
                bad("session order references unknown message: " + mid);
                continue;
            }
            if (it->second.timestamp < prev)
                bad("timestamp regression in session " + sid + " at " + mid);
            prev = it->second.timestamp;
        }
    }

    // Episodes: links resolve, block is contiguous within one session, and
    // no message appears in more than one episode.
    std::map<std::string, std::string> message_owner;
    for (const auto& [id, ep] : h.episodes) {
        if (ep.message_ids.empty()) {
            bad("episode without messages: " + id);
            continue;
        }
        if (!ep.embedding.empty() && (ep.embedding.size() != dim || !is_unit(ep.embedding)))
            bad("bad episode embedding: " + id);
        std::string session;
        bool links_ok = true;
        for (const auto& mid : ep.message_ids) {
            auto it = h.messages.find(mid);
            if (it == h.messages.end()) {
                bad("episode references unknown message: " + id + " -> " + mid);
                links_ok = false;
                continue;
            }
            if (session.empty()) session = it->second.session_id;
            else if (session != it->second.session_id) {
                bad("episode spans sessions: " + id);
                links_ok = false;
            }
            auto [owner, inserted] = message_owner.emplace(mid, id);
            if (!inserted) bad("message in two episodes: " + mid);
        }
        if (links_ok && !session.empty()) {
            const auto& order = h.session_order.at(session);
            auto start = std::find(order.begin(), order.end(), ep.message_ids.front());
            bool contiguous = start != order.end() &&
                              static_cast<std::size_t>(order.end() - start) >= ep.message_ids.size() &&
                              std::equal(ep.message_ids.begin(), ep.message_ids.end(), start);
            if (!contiguous) bad("episode block not contiguous: " + id);
        }
    }

    // Semantics: links resolve both ways, embedding well formed.
    for (const auto& [id, s] : h.semantics) {
        if (s.statement.empty()) bad("empty semantic statement: " + id);
        if (s.source_episode_ids.empty()) bad("semantic without sources: " + id);
        for (const auto& eid : s.source_episode_ids)
            if (!h.episodes.count(eid)) bad("dangling episode link: " + id + " -> " + eid);
        auto t = h.themes.find(s.theme_id);
        if (t == h.themes.end()) {
            bad("dangling theme link: " + id + " -> " + s.theme_id);
        } else {
            const auto& members = t->second.member_ids;
            if (std::find(members.begin(), members.end(), id) == members.end())
                bad("theme does not list member: " + s.theme_id + " missing " + id);
        }
        if (s.embedding.size() != dim || !is_unit(s.embedding))
            bad("bad semantic embedding: " + id);
    }

    // Themes: non-empty, members resolve and point back, centroid fresh.
    std::size_t member_total = 0;
    for (const auto& [id, t] : h.themes) {
        if (t.member_ids.empty()) {
            bad("empty theme: " + id);
            continue;
        }
        member_total += t.member_ids.size();
        bool members_ok = true;
        for (const auto& sid : t.member_ids) {
            auto it = h.semantics.find(sid);
            if (it == h.semantics.end()) {
                bad("theme references unknown semantic: " + id + " -> " + sid);
                members_ok = false;
            } else if (it->second.theme_id != id) {
                bad("member assigned elsewhere: " + sid + " in " + id);
            }
        }
        if (members_ok) {
            Vec expect = recompute_centroid(h, t);
            if (t.centroid.size() != expect.size()) {
                bad("stale centroid: " + id);
            } else {
                double d2 = 0.0;
                for (std::size_t i = 0; i < expect.size(); ++i) {
                    double d = t.centroid[i] - expect[i];
                    d2 += d * d;
                }
                if (std::sqrt(d2) > 1e-6) bad("stale centroid: " + id);
            }
        }
    }

    if (member_total != h.semantics.size())
        bad("partition sizes sum to " + std::to_string(member_total) + ", expected " +
            std::to_string(h.semantics.size()));

    return out;
}

std::string add_message(MemoryHierarchy& h, const std::string& speaker, TimePoint timestamp,
                        const std::string& text, const std::string& session_id) {
    if (text.empty()) throw RejectedInput("message text must be non-empty");
    auto& order = h.session_order[session_id];
    if (!order.empty() && h.messages.at(order.back()).timestamp > timestamp)
        throw RejectedInput("timestamps within session " + session_id + " must be non-decreasing");
    std::string id = h.new_message_id();
    h.messages[id] = Message{id, speaker, timestamp, text, session_id};
    order.push_back(id);
    return id;
}

} // namespace xmem
