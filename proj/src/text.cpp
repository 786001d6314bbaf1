#include "xmem/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace xmem::text {

namespace {

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

char to_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Fixed English stopword list, versioned with the repo.
const char* kStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
    "any", "are", "aren", "as", "at", "be", "because", "been", "before", "being",
    "below", "between", "both", "but", "by", "can", "cannot", "could", "couldn",
    "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during",
    "each", "few", "for", "from", "further", "had", "hadn", "has", "hasn",
    "have", "haven", "having", "he", "her", "here", "hers", "herself", "him",
    "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its",
    "itself", "just", "let", "ll", "me", "more", "most", "mustn", "my", "myself",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other",
    "ought", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same",
    "shan", "she", "should", "shouldn", "so", "some", "such", "t", "than",
    "that", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until",
    "up", "ve", "very", "was", "wasn", "we", "were", "weren", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "won",
    "would", "wouldn", "you", "your", "yours", "yourself", "yourselves",
    "also", "been", "get", "got", "im", "m", "d", "o", "u", "us", "via", "vs",
    "etc", "ok", "okay", "yes", "yeah", "oh", "ah", "hey", "hi", "hello",
    "really", "well", "much", "many", "like", "one", "two", "even", "still",
    "said", "says", "say", "told", "tell", "asked", "ask",
};

} // namespace

const std::unordered_set<std::string>& stopword_list() {
    static const std::unordered_set<std::string> set(std::begin(kStopwords), std::end(kStopwords));
    return set;
}

bool is_stopword(const std::string& token) {
    return stopword_list().count(token) > 0;
}

std::vector<std::string> alnum_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_alnum(c)) {
            cur.push_back(to_lower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> metric_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        // Trim joiners that ended up on the edges ("2024-" -> "2024").
        while (!cur.empty() && (cur.back() == '-' || cur.back() == '/')) cur.pop_back();
        while (!cur.empty() && (cur.front() == '-' || cur.front() == '/')) cur.erase(cur.begin());
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (is_alnum(c)) {
            cur.push_back(to_lower(c));
        } else if ((c == '-' || c == '/') && !cur.empty() && i + 1 < s.size() && is_alnum(s[i + 1])) {
            cur.push_back(c);
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        }
        // other punctuation: stripped, token continues ("don't" -> "dont")
    }
    flush();
    return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : metric_tokens(s))
        if (!is_stopword(t)) out.push_back(std::move(t));
    return out;
}

std::vector<std::string> distinct_content_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& t : content_tokens(s))
        if (seen.insert(t).second) out.push_back(std::move(t));
    return out;
}

std::vector<std::string> sentences(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        cur.push_back(c);
        bool terminal = (c == '.' || c == '!' || c == '?');
        bool at_break = terminal && (i + 1 == s.size() ||
                                     std::isspace(static_cast<unsigned char>(s[i + 1])));
        if (at_break) {
            // Trim surrounding whitespace.
            std::size_t b = cur.find_first_not_of(" \t\n\r");
            std::size_t e = cur.find_last_not_of(" \t\n\r");
            if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
            cur.clear();
        }
    }
    std::size_t b = cur.find_first_not_of(" \t\n\r");
    if (b != std::string::npos) {
        std::size_t e = cur.find_last_not_of(" \t\n\r");
        out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

std::size_t count_tokens(std::string_view s) {
    std::size_t n = 0;
    bool in_tok = false;
    for (char c : s) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_tok) ++n;
        in_tok = !ws;
    }
    return n;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), to_lower);
    return out;
}

std::string normalized_statement(std::string_view s) {
    std::string out;
    for (auto& t : alnum_tokens(s)) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::unordered_map<std::string, int> token_counts(std::string_view s) {
    std::unordered_map<std::string, int> counts;
    for (auto& t : alnum_tokens(s)) ++counts[t];
    return counts;
}

double overlap_ratio(std::string_view a, std::string_view b) {
    std::unordered_set<std::string> ta;
    for (auto& t : alnum_tokens(a)) ta.insert(t);
    if (ta.empty()) return 0.0;
    std::unordered_set<std::string> tb;
    for (auto& t : alnum_tokens(b)) tb.insert(t);
    std::size_t hit = 0;
    for (const auto& t : ta)
        if (tb.count(t)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(ta.size());
}

} // namespace xmem::text
