#include "lumber/chunker.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <regex>
#include <stdexcept>

namespace lumber {

namespace {

std::size_t digits(std::size_t n) {
    std::size_t d = 1;
    while (n >= 10) {
        n /= 10;
        ++d;
    }
    return d;
}

std::string padded_id(std::size_t index, std::size_t width) {
    std::string s = std::to_string(index);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::optional<std::size_t> match_id(std::string_view response, const std::regex& pattern) {
    std::cmatch m;
    if (!std::regex_search(response.data(), response.data() + response.size(), m, pattern)) {
        return std::nullopt;
    }
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(m[1].first, m[1].second, value);
    if (ec == std::errc::result_out_of_range) return std::numeric_limits<std::size_t>::max();
    return value;
}

Chunk make_chunk(const Document& document, std::size_t chunk_id, std::size_t first,
                 std::size_t last, const TokenCounter& counter) {
    Chunk c;
    c.doc_id = document.doc_id();
    c.chunk_id = chunk_id;
    c.start_para = first;
    c.end_para = last;
    c.text = document.span_text(first, last);
    c.token_count = counter.count(c.text);
    return c;
}

}  // namespace

void ChunkerConfig::validate() const {
    if (theta == 0) throw std::invalid_argument("theta must be at least 1");
    if (id_width == 0) throw std::invalid_argument("id_width must be at least 1");
    if (min_tail_paragraphs == 0) {
        throw std::invalid_argument("min_tail_paragraphs must be at least 1");
    }
}

Group build_group(const Document& document, std::span<const std::size_t> token_counts,
                  std::size_t start, const ChunkerConfig& config) {
    if (start < 1 || start > document.size()) {
        throw std::out_of_range("group start " + std::to_string(start) + " outside 1.." +
                                std::to_string(document.size()));
    }
    Group group;
    group.doc_id = document.doc_id();
    group.start_index = start;
    for (std::size_t i = start; i <= document.size(); ++i) {
        group.paragraphs.push_back(document.paragraph(i));
        group.token_total += token_counts[i - 1];
        if (group.token_total > config.theta) break;
    }
    return group;
}

Group build_group(const Document& document, std::size_t start, const ChunkerConfig& config,
                  const TokenCounter& counter) {
    if (start < 1 || start > document.size()) {
        throw std::out_of_range("group start " + std::to_string(start) + " outside 1.." +
                                std::to_string(document.size()));
    }
    // Counting stops with the group, so later paragraphs are never measured.
    std::vector<std::size_t> counts(document.size(), 0);
    std::size_t total = 0;
    for (std::size_t i = start; i <= document.size() && total <= config.theta; ++i) {
        counts[i - 1] = counter.count(document.paragraph(i).text);
        total += counts[i - 1];
    }
    return build_group(document, counts, start, config);
}

std::string render_prompt(const Group& group, const ChunkerConfig& config) {
    const std::size_t width = std::max(config.id_width, digits(group.last_index()));
    std::string prompt =
        "You will receive as input an English document with paragraphs identified by "
        "'ID XXXX: <text>'.\n\n"
        "Task: Find the first paragraph (not the first one) where the content clearly changes "
        "compared to the previous paragraphs.\n\n"
        "Output: Return the ID of the paragraph with the content shift as in the exemplified "
        "format: 'Answer: ID XXXX'.\n\n"
        "Additional Considerations: Avoid very long groups of paragraphs. Aim for a good balance "
        "between identifying content shifts and keeping groups manageable.\n\n"
        "Document:\n";
    for (std::size_t i = 0; i < group.paragraphs.size(); ++i) {
        if (i > 0) prompt.append("\n\n");
        prompt.append("ID ");
        prompt.append(padded_id(group.paragraphs[i].index, width));
        prompt.append(": ");
        prompt.append(group.paragraphs[i].text);
    }
    return prompt;
}

std::size_t parse_split_id(std::string_view response, const Group& group) {
    static const std::regex kAnswer(R"(answer[\s*:]*id[\s:#]*(\d+))", std::regex::icase);
    static const std::regex kBareId(R"(\bid[\s:#]*(\d+))", std::regex::icase);

    auto id = match_id(response, kAnswer);
    if (!id) id = match_id(response, kBareId);
    if (!id) throw ParseError("no paragraph ID in response");
    if (*id <= group.start_index || *id > group.last_index()) {
        throw OutOfRangeError(*id, group.start_index, group.last_index());
    }
    return *id;
}

LumberRun run_lumberchunker(const Document& document, const ChunkerConfig& config,
                            CompletionBackend& backend, const TokenCounter& counter) {
    config.validate();
    if (document.empty()) throw std::invalid_argument("cannot chunk an empty document");

    std::vector<std::size_t> counts;
    counts.reserve(document.size());
    for (const Paragraph& p : document.paragraphs()) counts.push_back(counter.count(p.text));

    LumberRun run;
    const std::size_t n = document.size();
    std::size_t start = 1;
    while (start <= n) {
        Group group = build_group(document, counts, start, config);
        GroupTrace trace;
        trace.start_index = group.start_index;
        trace.last_index = group.last_index();
        trace.paragraph_count = group.paragraphs.size();
        trace.token_total = group.token_total;
        trace.last_tokens = counts[group.last_index() - 1];
        trace.reaches_end = group.last_index() == n;

        const bool single = group.paragraphs.size() == 1;
        const bool short_tail =
            trace.reaches_end && (group.paragraphs.size() < config.min_tail_paragraphs ||
                                  group.token_total <= config.theta);

        std::size_t next = group.last_index() + 1;
        if (!single && !short_tail) {
            trace.asked_model = true;
            const std::string prompt = render_prompt(group, config);
            std::optional<std::size_t> split;
            for (std::size_t attempt = 0; attempt <= config.max_retries && !split; ++attempt) {
                std::string response;
                try {
                    response = with_retries(config.max_retries, [&] {
                        ++run.backend_calls;
                        return backend.complete(prompt, config.temperature);
                    });
                } catch (const BackendError& e) {
                    std::string last = run.chunks.empty()
                                           ? std::string("none")
                                           : std::to_string(run.chunks.back().chunk_id) + " (paragraphs " +
                                                 std::to_string(run.chunks.back().start_para) + "-" +
                                                 std::to_string(run.chunks.back().end_para) + ")";
                    throw ChunkingAborted("backend failed on group starting at paragraph " +
                                              std::to_string(start) + ": " + e.what() +
                                              "; last emitted chunk: " + last,
                                          std::move(run.chunks));
                }
                ++trace.attempts;
                try {
                    split = parse_split_id(response, group);
                } catch (const ParseError&) {
                } catch (const OutOfRangeError&) {
                }
            }
            if (split) {
                next = *split;
            } else {
                trace.fell_back = true;
                ++run.fallbacks;
            }
        }
        trace.split_id = next;
        run.chunks.push_back(make_chunk(document, run.chunks.size(), start, next - 1, counter));
        run.groups.push_back(trace);
        start = next;
    }
    return run;
}

std::vector<Chunk> lumberchunk(const Document& document, const ChunkerConfig& config,
                               CompletionBackend& backend, const TokenCounter& counter) {
    return run_lumberchunker(document, config, backend, counter).chunks;
}

}  // namespace lumber
