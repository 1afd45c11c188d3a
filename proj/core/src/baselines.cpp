#include "lumber/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <regex>
#include <stdexcept>

#include "lumber/error.hpp"
#include "lumber/text.hpp"

namespace lumber {

std::vector<Chunk> paragraph_chunks(const Document& document, const TokenCounter& counter) {
    std::vector<Chunk> chunks;
    chunks.reserve(document.size());
    for (const Paragraph& p : document.paragraphs()) {
        chunks.push_back({document.doc_id(), chunks.size(), p.index, p.index, p.text,
                          counter.count(p.text)});
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Recursive splitting

void RecursiveConfig::validate() const {
    if (max_tokens == 0) throw std::invalid_argument("max_tokens must be at least 1");
    if (separators.empty() || !separators.back().empty()) {
        throw std::invalid_argument("separator hierarchy must end with the empty string");
    }
}

namespace {

class RecursiveSplitter {
public:
    RecursiveSplitter(std::string_view text, const RecursiveConfig& config,
                      const TokenCounter& counter)
        : text_(text), config_(config), counter_(counter) {}

    std::vector<TextSpan> run() {
        if (!text_.empty()) split({0, text_.size()}, 0);
        return std::move(out_);
    }

private:
    std::size_t tokens(TextSpan s) const { return counter_.count(text_.substr(s.offset, s.length)); }

    // Pieces of `span` cut after every occurrence of `sep`; "" cuts code points.
    std::vector<TextSpan> pieces(TextSpan span, const std::string& sep) const {
        std::string_view view = text_.substr(span.offset, span.length);
        std::vector<TextSpan> result;
        if (sep.empty()) {
            std::size_t at = span.offset;
            for (std::string_view cp : text::code_points(view)) {
                result.push_back({at, cp.size()});
                at += cp.size();
            }
            return result;
        }
        std::size_t begin = 0;
        std::size_t pos = view.find(sep);
        while (pos != std::string_view::npos) {
            std::size_t end = pos + sep.size();
            result.push_back({span.offset + begin, end - begin});
            begin = end;
            pos = view.find(sep, begin);
        }
        if (begin < view.size()) result.push_back({span.offset + begin, view.size() - begin});
        return result;
    }

    void split(TextSpan span, std::size_t level) {
        if (tokens(span) <= config_.max_tokens) {
            out_.push_back(span);
            return;
        }
        std::string_view view = text_.substr(span.offset, span.length);
        while (level + 1 < config_.separators.size() &&
               view.find(config_.separators[level]) == std::string_view::npos) {
            ++level;
        }
        const bool finest = config_.separators[level].empty();

        std::optional<TextSpan> buffer;
        auto flush = [&] {
            if (buffer) out_.push_back(*buffer);
            buffer.reset();
        };
        for (TextSpan piece : pieces(span, config_.separators[level])) {
            if (tokens(piece) > config_.max_tokens) {
                flush();
                if (finest) {
                    out_.push_back(piece);  // indivisible
                } else {
                    split(piece, level + 1);
                }
            } else if (!buffer) {
                buffer = piece;
            } else if (TextSpan merged{buffer->offset, buffer->length + piece.length};
                       tokens(merged) <= config_.max_tokens) {
                buffer = merged;
            } else {
                flush();
                buffer = piece;
            }
        }
        flush();
    }

    std::string_view text_;
    const RecursiveConfig& config_;
    const TokenCounter& counter_;
    std::vector<TextSpan> out_;
};

}  // namespace

std::vector<TextSpan> recursive_split(std::string_view text, const RecursiveConfig& config,
                                      const TokenCounter& counter) {
    config.validate();
    return RecursiveSplitter(text, config, counter).run();
}

std::vector<Chunk> recursive_chunks(const Document& document, const RecursiveConfig& config,
                                    const TokenCounter& counter) {
    const std::string full = document.text();
    // Start offset of every paragraph in `full`.
    std::vector<std::size_t> starts;
    std::size_t at = 0;
    for (const Paragraph& p : document.paragraphs()) {
        starts.push_back(at);
        at += p.text.size() + kParagraphSeparator.size();
    }
    auto paragraph_at = [&](std::size_t offset) {
        auto it = std::upper_bound(starts.begin(), starts.end(), offset);
        return static_cast<std::size_t>(it - starts.begin());  // 1-based
    };

    std::vector<Chunk> chunks;
    for (TextSpan span : recursive_split(full, config, counter)) {
        std::string_view view = std::string_view(full).substr(span.offset, span.length);
        std::size_t first = span.offset;
        std::size_t last = span.offset + span.length - 1;
        std::size_t lead = view.find_first_not_of(" \t\r\n");
        if (lead != std::string_view::npos) {
            first = span.offset + lead;
            last = span.offset + view.find_last_not_of(" \t\r\n");
        }
        Chunk c;
        c.doc_id = document.doc_id();
        c.chunk_id = chunks.size();
        c.start_para = paragraph_at(first);
        c.end_para = paragraph_at(last);
        c.text = std::string(view);
        c.token_count = counter.count(c.text);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Semantic chunking

void SemanticConfig::validate() const {
    if (!(breakpoint_percentile > 0.0 && breakpoint_percentile < 100.0)) {
        throw std::invalid_argument("breakpoint percentile must lie strictly between 0 and 100");
    }
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(rank));
    auto hi = static_cast<std::size_t>(std::ceil(rank));
    return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::string> split_sentences(std::string_view paragraph) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < paragraph.size(); ++i) {
        char c = paragraph[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t end = i + 1;
        while (end < paragraph.size() &&
               (paragraph[end] == '"' || paragraph[end] == '\'' || paragraph[end] == ')')) {
            ++end;
        }
        if (end < paragraph.size() && !text::is_space(paragraph[end])) continue;
        auto sentence = text::trim(paragraph.substr(begin, end - begin));
        if (!sentence.empty()) out.emplace_back(sentence);
        begin = end;
        i = end - 1;
    }
    auto rest = text::trim(paragraph.substr(std::min(begin, paragraph.size())));
    if (!rest.empty()) out.emplace_back(rest);
    return out;
}

std::vector<Chunk> semantic_chunks(const Document& document, EmbeddingBackend& embedder,
                                   const SemanticConfig& config, const TokenCounter& counter) {
    config.validate();
    struct Unit {
        std::size_t paragraph;
        std::string text;
    };
    std::vector<Unit> units;
    for (const Paragraph& p : document.paragraphs()) {
        if (config.unit == SemanticUnit::paragraph) {
            units.push_back({p.index, p.text});
        } else {
            for (std::string& s : split_sentences(p.text)) units.push_back({p.index, std::move(s)});
        }
    }
    if (units.empty()) return {};

    std::vector<std::size_t> breaks;  // a chunk ends after unit i
    if (units.size() > 1) {
        std::vector<std::string> texts;
        texts.reserve(units.size());
        for (const Unit& u : units) texts.push_back(u.text);
        auto vectors = embed_batched(embedder, texts, config.batch_size);
        std::vector<double> distances;
        distances.reserve(units.size() - 1);
        for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
            distances.push_back(1.0 - cosine(vectors[i], vectors[i + 1]));
        }
        const double threshold = percentile(distances, config.breakpoint_percentile);
        for (std::size_t i = 0; i < distances.size(); ++i) {
            if (distances[i] > threshold) breaks.push_back(i);
        }
    }
    breaks.push_back(units.size() - 1);

    std::vector<Chunk> chunks;
    std::size_t first = 0;
    for (std::size_t last : breaks) {
        Chunk c;
        c.doc_id = document.doc_id();
        c.chunk_id = chunks.size();
        c.start_para = units[first].paragraph;
        c.end_para = units[last].paragraph;
        for (std::size_t i = first; i <= last; ++i) {
            if (i > first) {
                c.text.append(units[i].paragraph == units[i - 1].paragraph
                                  ? std::string_view(" ")
                                  : kParagraphSeparator);
            }
            c.text.append(units[i].text);
        }
        c.token_count = counter.count(c.text);
        chunks.push_back(std::move(c));
        first = last + 1;
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Propositions

std::string render_proposition_prompt(std::string_view passage) {
    std::string prompt =
        "Decompose the passage below into propositions: minimal, self-contained factual "
        "statements that can each be understood without the rest of the passage. Replace "
        "pronouns with the entities they refer to where the passage makes this clear. Write "
        "exactly one proposition per line and nothing else.\n\nPassage: ";
    prompt.append(passage);
    return prompt;
}

namespace {

std::vector<std::string> proposition_lines(std::string_view response) {
    static const std::regex kMarker(
        R"(^(?:(?:-|\*|•)\s+|\d+[.)]\s+|proposition\s+[\d.]+\s*:\s*))", std::regex::icase);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        std::size_t end = response.find('\n', pos);
        if (end == std::string_view::npos) end = response.size();
        std::string line(text::trim(response.substr(pos, end - pos)));
        line = std::regex_replace(line, kMarker, "", std::regex_constants::format_first_only);
        line = std::string(text::trim(line));
        if (!line.empty()) lines.push_back(std::move(line));
        pos = end + 1;
    }
    return lines;
}

}  // namespace

PropositionResult propositionize(const Chunk& chunk, CompletionBackend& backend,
                                 const TokenCounter& counter) {
    const std::string prompt = render_proposition_prompt(chunk.text);
    std::vector<std::string> lines;
    for (int attempt = 0; attempt < 2 && lines.empty(); ++attempt) {
        try {
            lines = proposition_lines(backend.complete(prompt, 0.0));
        } catch (const BackendError&) {
        }
    }
    PropositionResult result;
    if (lines.empty()) {
        result.chunks.push_back(chunk);
        result.warnings = 1;
        return result;
    }
    for (std::string& line : lines) {
        Chunk c;
        c.doc_id = chunk.doc_id;
        c.chunk_id = result.chunks.size();
        c.start_para = chunk.start_para;
        c.end_para = chunk.end_para;
        c.token_count = counter.count(line);
        c.text = std::move(line);
        result.chunks.push_back(std::move(c));
    }
    return result;
}

PropositionResult proposition_chunks(const std::vector<Chunk>& chunks, CompletionBackend& backend,
                                     const TokenCounter& counter) {
    PropositionResult all;
    for (const Chunk& parent : chunks) {
        PropositionResult part = propositionize(parent, backend, counter);
        all.warnings += part.warnings;
        for (Chunk& c : part.chunks) {
            c.chunk_id = all.chunks.size();
            all.chunks.push_back(std::move(c));
        }
    }
    return all;
}

// ---------------------------------------------------------------------------
// HyDE

std::string render_hyde_prompt(std::string_view query) {
    std::string prompt =
        "Write a short passage from a book that answers the question below. Answer with the "
        "passage only.\n\nQuestion: ";
    prompt.append(query);
    prompt.append("\n\nPassage:");
    return prompt;
}

HydeResult hyde_transform(std::string_view query, CompletionBackend& backend) {
    try {
        std::string passage(text::trim(backend.complete(render_hyde_prompt(query), 0.0)));
        if (!passage.empty()) return {std::move(passage), false};
    } catch (const BackendError&) {
    }
    return {std::string(query), true};
}

}  // namespace lumber
