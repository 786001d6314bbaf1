#include "xmem/providers.hpp"

#include "xmem/errors.hpp"
#include "xmem/prompts.hpp"
#include "xmem/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace xmem {

OracleEstimate OfflineUncertaintyOracle::estimate(const std::string& query,
                                                  const std::string& context) {
    const auto wanted = text::distinct_content_tokens(query);
    OracleEstimate out;
    out.call_tokens = text::count_tokens(query) + text::count_tokens(context);
    if (wanted.empty()) {
        out.uncertainty = 0.0;
        return out;
    }
    std::set<std::string> have;
    for (const std::string& t : text::content_tokens(context)) have.insert(t);
    std::size_t found = 0;
    for (const std::string& t : wanted)
        if (have.count(t)) ++found;
    out.uncertainty = 1.0 - double(found) / double(wanted.size());
    return out;
}

RemoteUncertaintyOracle::RemoteUncertaintyOracle(RemoteChatConfig config)
    : client_(std::move(config)) {}

std::string RemoteUncertaintyOracle::id() const { return "remote-judge:" + client_.config().model; }

OracleEstimate RemoteUncertaintyOracle::estimate(const std::string& query,
                                                 const std::string& context) {
    static constexpr const char* kJudgeSystem =
        "You estimate how uncertain a reader would remain about a question given only the "
        "provided context. Respond with a single number between 0 and 1, where 0 means the "
        "context fully determines the answer and 1 means it contains nothing relevant. "
        "Return only the number.";
    const std::string user = "Question: " + query + "\n\nContext:\n" + context;
    const std::string raw = client_.complete(kJudgeSystem, user);
    try {
        std::size_t pos = 0;
        const double value = std::stod(raw, &pos);
        while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
        if (pos != raw.size() || value < 0.0) throw std::invalid_argument("range");
        OracleEstimate out;
        out.uncertainty = value;
        out.call_tokens = text::count_tokens(user) + text::count_tokens(raw);
        return out;
    } catch (const std::exception&) {
        throw ProtocolError("uncertainty judge did not return a number", raw);
    }
}

ReaderResult OfflineReader::answer(const std::string& question, const std::string& context) {
    const auto wanted = text::distinct_content_tokens(question);
    std::string best_line;
    std::size_t best_overlap = 0;
    bool found = false;
    std::istringstream lines(context);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::set<std::string> have;
        for (const std::string& t : text::distinct_content_tokens(line)) have.insert(t);
        std::size_t overlap = 0;
        for (const std::string& t : wanted)
            if (have.count(t)) ++overlap;
        if (!found || overlap > best_overlap) { // ties keep the earlier line
            found = true;
            best_overlap = overlap;
            best_line = line;
        }
    }
    // Strip leading "[unit-id]" prefixes so the echoed text is the bare
    // statement or narrative.
    std::string answer = best_line;
    while (!answer.empty() && answer.front() == '[') {
        auto close = answer.find("] ");
        if (close == std::string::npos) break;
        answer = answer.substr(close + 2);
    }
    ReaderResult out;
    out.text = answer;
    out.call_tokens =
        text::count_tokens(question) + text::count_tokens(context) + text::count_tokens(answer);
    return out;
}

RemoteReader::RemoteReader(RemoteChatConfig config, std::string style)
    : client_(std::move(config)), style_(std::move(style)) {
    if (style_ != "short" && style_ != "sentence")
        throw RejectedInput("reader style must be 'short' or 'sentence', got " + style_);
}

std::string RemoteReader::id() const { return "remote-reader:" + client_.config().model; }

ReaderResult RemoteReader::answer(const std::string& question, const std::string& context) {
    const char* system =
        style_ == "short" ? prompts::kAnswerShortSystem : prompts::kAnswerSentenceSystem;
    const std::string user = context + "\n\nQuestion: " + question + "\n\nAnswer:";
    const std::string raw = client_.complete(system, user);
    ReaderResult out;
    out.text = raw;
    out.call_tokens = text::count_tokens(user) + text::count_tokens(raw);
    return out;
}

ProviderSuite make_offline_suite(const RunConfig& config) {
    ProviderSuite suite;
    suite.offline = true;
    suite.cache = std::make_shared<EmbeddingCache>();
    suite.embedder = std::make_shared<CachingEmbedder>(
        std::make_shared<DeterministicEmbedder>(int(config.dimension), config.seed), suite.cache);
    suite.generator = std::make_shared<RuleBasedProvider>();
    suite.oracle = std::make_shared<OfflineUncertaintyOracle>();
    suite.reader = std::make_shared<OfflineReader>();
    return suite;
}

ProviderSuite make_remote_suite(const RunConfig& config) {
    if (config.embed_url.empty() || config.chat_url.empty())
        throw RejectedInput(
            "remote suite requires both embedding and chat endpoints; "
            "mixing online and offline providers is rejected");
    ProviderSuite suite;
    suite.offline = false;
    suite.cache = std::make_shared<EmbeddingCache>();
    RemoteEmbeddingConfig embed;
    embed.url = config.embed_url;
    embed.model = config.embed_model;
    embed.dimension = int(config.dimension);
    embed.batch_limit = config.embed_batch_limit;
    suite.embedder = std::make_shared<CachingEmbedder>(
        std::make_shared<RemoteEmbeddingClient>(embed), suite.cache);
    RemoteChatConfig chat;
    chat.url = config.chat_url;
    chat.model = config.chat_model;
    suite.generator = std::make_shared<RemoteChatProvider>(chat);
    suite.oracle = std::make_shared<RemoteUncertaintyOracle>(chat);
    suite.reader = std::make_shared<RemoteReader>(chat, config.answer_style);
    return suite;
}

} // namespace xmem
