#include "lumber/ragpipe.hpp"

#include <cctype>
#include <regex>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "lumber/text.hpp"

namespace lumber {

namespace {

// Question and function words that are capitalized only because they start a
// sentence.
const std::set<std::string, std::less<>> kSentenceInitial = {
    "A",    "After", "Also",  "An",    "And",   "Are",  "As",    "At",    "Before", "But",
    "By",   "Can",   "Could", "During", "Finally", "Later", "Next", "Now", "Once", "Then",
    "Did",  "Do",    "Does",  "For",  "From",  "Had",   "Has",   "Have",  "He",   "Her",
    "His",  "How",   "If",    "In",   "Is",    "It",    "Its",   "Of",    "On",   "Or",
    "She",  "Should", "So",   "That", "The",   "Their", "There", "They",  "This", "To",
    "Was",  "We",    "Were",  "What", "When",  "Where", "Which", "While", "Who",  "Whom",
    "Whose", "Why",  "Will",  "With", "Would", "You",   "Your"};

bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u >= 0x80;
}

std::string strip_possessive(std::string word) {
    for (std::string_view suffix : {std::string_view("'s"), std::string_view("\xE2\x80\x99s")}) {
        if (word.size() > suffix.size() && word.ends_with(suffix)) {
            word.resize(word.size() - suffix.size());
            break;
        }
    }
    return word;
}

std::vector<std::string> response_lines(std::string_view response) {
    static const std::regex kMarker(R"(^(?:(?:-|\*|•)\s+|\d+[.)]\s+))");
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        std::size_t end = response.find('\n', pos);
        if (end == std::string_view::npos) end = response.size();
        std::string line(text::trim(response.substr(pos, end - pos)));
        line = std::string(text::trim(std::regex_replace(line, kMarker, "")));
        if (!line.empty()) out.push_back(std::move(line));
        pos = end + 1;
    }
    return out;
}

std::string numbered(const std::vector<std::string>& chunks, std::size_t limit) {
    std::string out;
    for (std::size_t i = 0; i < chunks.size() && i < limit; ++i) {
        if (i > 0) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] " + chunks[i];
    }
    return out;
}

}  // namespace

std::vector<std::string> CapitalizationDetector::mentions(std::string_view query) {
    std::vector<std::string> found;
    std::vector<std::string> span;
    bool span_has_inner_capital = false;
    auto close = [&] {
        if (!span.empty() && (span_has_inner_capital || span.size() >= 2)) {
            found.push_back(text::join(span, " "));
        }
        span.clear();
        span_has_inner_capital = false;
    };

    bool sentence_start = true;
    for (std::string_view raw : text::words(query)) {
        std::size_t b = 0;
        std::size_t e = raw.size();
        while (b < e && !is_word_char(raw[b])) ++b;
        while (e > b && !is_word_char(raw[e - 1])) --e;
        const bool breaks_after = e < raw.size();  // trailing punctuation ends a span
        const bool ends_sentence = raw.find_last_of(".!?") != std::string_view::npos &&
                                   raw.find_last_of(".!?") >= e;
        std::string word = strip_possessive(std::string(raw.substr(b, e - b)));

        const bool capital = !word.empty() && std::isupper(static_cast<unsigned char>(word[0])) &&
                             word != "I";
        const bool initial_function_word = sentence_start && kSentenceInitial.contains(word);
        if (capital && !initial_function_word) {
            span.push_back(word);
            if (!sentence_start) span_has_inner_capital = true;
        } else {
            close();
        }
        if (breaks_after) close();
        sentence_start = ends_sentence;
    }
    close();
    return found;
}

std::string render_mention_prompt(std::string_view query) {
    return "List every person or event mentioned by name in the question below, one per line. "
           "If there are none, answer NONE.\n\nQuestion: " +
           std::string(query);
}

std::vector<std::string> LlmMentionDetector::mentions(std::string_view query) {
    std::vector<std::string> out;
    for (std::string& line : response_lines(backend_.complete(render_mention_prompt(query), 0.0))) {
        std::string upper = line;
        for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (upper == "NONE" || upper == "NONE.") continue;
        out.push_back(std::move(line));
    }
    return out;
}

RoutingDecision detect_mentions(std::string_view query, MentionDetector& detector) {
    RoutingDecision decision;
    try {
        decision.mention_strings = detector.mentions(query);
    } catch (const std::exception&) {
        decision.mention_strings.clear();
    }
    decision.mentions_found = !decision.mention_strings.empty();
    decision.bm25_k = decision.mentions_found ? kBm25KWithMentions : kBm25KWithoutMentions;
    return decision;
}

RoutingDecision detect_mentions(std::string_view query) {
    CapitalizationDetector detector;
    return detect_mentions(query, detector);
}

std::vector<std::size_t> ContextAssembly::chunk_ids() const {
    std::vector<std::size_t> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.chunk_id);
    return ids;
}

ContextAssembly assemble_context(const std::vector<std::size_t>& lexical,
                                 const std::vector<std::size_t>& dense) {
    std::unordered_set<std::size_t> seen;
    std::vector<std::size_t> dense_unique;
    for (std::size_t id : dense) {
        if (seen.insert(id).second) dense_unique.push_back(id);
    }
    std::vector<std::size_t> survivors;
    for (std::size_t id : lexical) {
        if (seen.insert(id).second) survivors.push_back(id);
    }

    ContextAssembly assembly;
    auto push = [&](std::size_t id, Provenance p) {
        assembly.entries.push_back({id, p, assembly.entries.size()});
    };
    if (!survivors.empty()) push(survivors.front(), Provenance::lexical);
    for (std::size_t id : dense_unique) push(id, Provenance::dense);
    for (std::size_t i = 1; i < survivors.size(); ++i) push(survivors[i], Provenance::lexical);
    return assembly;
}

ContextAssembly hybrid_retrieve(const std::string& query, std::span<const float> query_vector,
                                const Bm25Index& bm25, const VectorIndex& vectors,
                                const RoutingDecision& decision, std::size_t dense_k) {
    if (bm25.empty() || vectors.empty()) {
        throw std::invalid_argument("hybrid retrieval needs non-empty indexes");
    }
    std::vector<std::size_t> lexical;
    for (const Hit& h : bm25.topk(query, decision.bm25_k)) {
        if (h.score > 0.0) lexical.push_back(h.chunk_id);
    }
    std::vector<std::size_t> dense;
    for (const Hit& h : cosine_topk(vectors, query_vector, dense_k)) dense.push_back(h.chunk_id);
    return assemble_context(lexical, dense);
}

std::string render_rerank_prompt(std::string_view query, const std::vector<std::string>& chunks) {
    return "Query: " + std::string(query) + "\n\nDocuments:\n" + numbered(chunks, chunks.size()) +
           "\n\nOrder the documents by decreasing relevance to the query. Answer only with the "
           "document numbers, most relevant first, separated by commas.";
}

RerankResult parse_rerank(std::string_view response, std::size_t n) {
    static const std::regex kNumber(R"(\d+)");
    RerankResult result;
    std::vector<bool> used(n, false);
    const std::string s(response);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kNumber); it != std::sregex_iterator();
         ++it) {
        const std::string digits = it->str();
        if (digits.size() > 9) continue;
        std::size_t v = std::stoul(digits);
        if (v >= 1 && v <= n && !used[v - 1]) {
            used[v - 1] = true;
            result.order.push_back(v - 1);
        }
    }
    result.degraded = result.order.empty() && n > 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) result.order.push_back(i);
    }
    return result;
}

RerankResult rerank(const std::vector<std::string>& chunks, std::string_view query,
                    CompletionBackend& backend) {
    if (chunks.size() <= 1) return parse_rerank("1", chunks.size());
    std::string response;
    try {
        response = backend.complete(render_rerank_prompt(query, chunks), 0.0);
    } catch (const BackendError&) {
        response.clear();
    }
    return parse_rerank(response, chunks.size());
}

std::string render_answer_prompt(std::string_view query, const std::vector<std::string>& chunks) {
    return "Answer the question using the context documents below.\n\nContext:\n" +
           numbered(chunks, kAnswerContext) + "\n\nQuestion: " + std::string(query) + "\nAnswer:";
}

std::string answer(std::string_view query, const std::vector<std::string>& reranked_chunks,
                   CompletionBackend& backend) {
    return backend.complete(render_answer_prompt(query, reranked_chunks), 0.0);
}

bool NormalizedMatchJudge::correct(std::string_view generated, std::string_view gold) {
    std::string g = text::normalize_for_matching(gold);
    std::string a = text::normalize_for_matching(generated);
    if (g.empty()) return a.empty();
    return (" " + a + " ").find(" " + g + " ") != std::string::npos;
}

bool LlmJudge::correct(std::string_view generated, std::string_view gold) {
    std::string prompt =
        "Decide whether the candidate answer conveys the same information as the reference "
        "answer. Reply with CORRECT or INCORRECT.\n\nReference: " +
        std::string(gold) + "\nCandidate: " + std::string(generated) + "\nVerdict:";
    std::string verdict = backend_.complete(prompt, 0.0);
    for (char& c : verdict) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (verdict.find("INCORRECT") != std::string::npos) return false;
    return verdict.find("CORRECT") != std::string::npos;
}

double qa_accuracy(const std::vector<AnswerPair>& answers, AnswerJudge& judge) {
    if (answers.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& a : answers) ok += judge.correct(a.generated, a.gold) ? 1 : 0;
    return 100.0 * static_cast<double>(ok) / static_cast<double>(answers.size());
}

RagPipeline::RagPipeline(std::vector<Chunk> chunks, EmbeddingBackend& embedder,
                         CompletionBackend& llm, MentionDetector& detector)
    : chunks_(std::move(chunks)), embedder_(embedder), llm_(llm), detector_(detector) {
    bm25_ = Bm25Index::build(chunks_);
    vectors_ = embed_chunks(chunks_, embedder_);
}

const Chunk& RagPipeline::by_id(std::size_t chunk_id) const {
    for (const Chunk& c : chunks_) {
        if (c.chunk_id == chunk_id) return c;
    }
    throw std::out_of_range("unknown chunk id " + std::to_string(chunk_id));
}

RagResult RagPipeline::run(const std::string& question) {
    RagResult result;
    result.question = question;
    result.routing = detect_mentions(question, detector_);
    const std::string q[] = {question};
    Vector qv = embedder_.embed(q).at(0);
    result.assembly = hybrid_retrieve(question, qv, bm25_, vectors_, result.routing);
    result.reordered = midpoint_reverse(result.assembly.chunk_ids());

    std::vector<std::string> texts;
    for (std::size_t id : result.reordered) texts.push_back(by_id(id).text);
    RerankResult order = rerank(texts, question, llm_);
    result.rerank_degraded = order.degraded;
    std::vector<std::string> reranked_texts;
    for (std::size_t pos : order.order) {
        result.reranked.push_back(result.reordered[pos]);
        reranked_texts.push_back(texts[pos]);
    }
    for (std::size_t i = 0; i < result.reranked.size() && i < kAnswerContext; ++i) {
        result.context.push_back(result.reranked[i]);
    }
    result.answer = answer(question, reranked_texts, llm_);
    return result;
}

}  // namespace lumber
