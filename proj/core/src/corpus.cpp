#include "lumber/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "io.hpp"
#include "lumber/error.hpp"
#include "lumber/text.hpp"

namespace lumber {

using ordered_json = nlohmann::ordered_json;

namespace {

bool blank(std::string_view line) { return text::trim(line).empty(); }

// A line break, optional whitespace, then another line break.
bool contains_blank_line(std::string_view s) {
    std::size_t pos = s.find('\n');
    while (pos != std::string_view::npos) {
        std::size_t next = s.find('\n', pos + 1);
        if (next == std::string_view::npos) return false;
        if (blank(s.substr(pos + 1, next - pos - 1))) return true;
        pos = next;
    }
    return false;
}

std::string read_utf8(const std::filesystem::path& path) {
    std::string content = io::read_file(path);
    if (!text::valid_utf8(content)) {
        throw DecodeError("'" + path.string() + "' is not valid UTF-8");
    }
    return content;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string unescape_tsv(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] == '\\' && i + 1 < field.size()) {
            char n = field[i + 1];
            if (n == 'n' || n == 't' || n == '\\') {
                out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : '\\');
                ++i;
                continue;
            }
        }
        out.push_back(field[i]);
    }
    return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
}

}  // namespace

Document::Document(std::string doc_id, std::string title, std::vector<Paragraph> paragraphs)
    : doc_id_(std::move(doc_id)), title_(std::move(title)), paragraphs_(std::move(paragraphs)) {
    for (std::size_t i = 0; i < paragraphs_.size(); ++i) {
        const Paragraph& p = paragraphs_[i];
        if (p.index != i + 1) {
            throw CorpusError("paragraph " + std::to_string(i + 1) + " of '" + doc_id_ +
                              "' has index " + std::to_string(p.index));
        }
        if (p.text.empty() || text::trim(p.text).size() != p.text.size()) {
            throw CorpusError("paragraph " + std::to_string(p.index) + " of '" + doc_id_ +
                              "' is empty or not trimmed");
        }
        if (contains_blank_line(p.text)) {
            throw CorpusError("paragraph " + std::to_string(p.index) + " of '" + doc_id_ +
                              "' contains a blank line");
        }
    }
}

std::string Document::text() const {
    return paragraphs_.empty() ? std::string{} : span_text(1, paragraphs_.size());
}

std::string Document::span_text(std::size_t first, std::size_t last) const {
    if (first < 1 || last > paragraphs_.size() || first > last) {
        throw std::out_of_range("paragraph span [" + std::to_string(first) + ", " +
                                std::to_string(last) + "] outside document '" + doc_id_ + "'");
    }
    std::string out;
    for (std::size_t i = first; i <= last; ++i) {
        if (i > first) out.append(kParagraphSeparator);
        out.append(paragraphs_[i - 1].text);
    }
    return out;
}

std::vector<Paragraph> split_paragraphs(std::string_view raw_text) {
    std::vector<Paragraph> paragraphs;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            paragraphs.push_back({paragraphs.size() + 1, std::move(current)});
            current.clear();
        }
    };
    for (std::string_view line : io::lines(raw_text)) {
        std::string_view trimmed = text::trim(line);
        if (trimmed.empty()) {
            flush();
            continue;
        }
        if (!current.empty()) current.push_back(' ');
        current.append(trimmed);
    }
    flush();
    if (paragraphs.empty()) throw EmptyInputError("input has no non-whitespace content");
    return paragraphs;
}

DocumentFormat parse_document_format(std::string_view name) {
    if (name == "plain_text" || name == "text" || name == "txt") return DocumentFormat::plain_text;
    if (name == "paragraph_records" || name == "records" || name == "jsonl") {
        return DocumentFormat::paragraph_records;
    }
    throw std::invalid_argument("unknown document format '" + std::string(name) + "'");
}

Document load_document(const std::filesystem::path& path, DocumentFormat format) {
    std::string content = read_utf8(path);
    if (format == DocumentFormat::paragraph_records) {
        return parse_paragraph_records(content, path.string());
    }
    std::string stem = path.stem().string();
    try {
        return Document(stem, stem, split_paragraphs(content));
    } catch (const EmptyInputError&) {
        throw EmptyInputError("'" + path.string() + "' has no non-whitespace content");
    }
}

std::string paragraph_records(const Document& document) {
    std::string out;
    for (const Paragraph& p : document.paragraphs()) {
        ordered_json record;
        record["doc_id"] = document.doc_id();
        record["index"] = p.index;
        record["text"] = p.text;
        out.append(record.dump());
        out.push_back('\n');
    }
    return out;
}

Document parse_paragraph_records(std::string_view content, const std::string& source) {
    std::string doc_id;
    std::vector<Paragraph> paragraphs;
    auto lines = io::lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        std::size_t line_no = n + 1;
        if (blank(lines[n])) continue;
        ordered_json record;
        try {
            record = ordered_json::parse(lines[n]);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(source, line_no, e.what());
        }
        if (!record.is_object()) throw MalformedRecordError(source, line_no, "not an object");
        auto id = record.find("doc_id");
        auto body = record.find("text");
        if (id == record.end() || !id->is_string()) {
            throw MalformedRecordError(source, line_no, "missing string field 'doc_id'");
        }
        if (body == record.end() || !body->is_string()) {
            throw MalformedRecordError(source, line_no, "missing string field 'text'");
        }
        std::string value = std::string(text::trim(body->get<std::string>()));
        if (value.empty()) throw MalformedRecordError(source, line_no, "empty 'text'");
        if (contains_blank_line(value)) {
            throw MalformedRecordError(source, line_no, "'text' contains a blank line");
        }
        if (paragraphs.empty()) {
            doc_id = id->get<std::string>();
        } else if (id->get<std::string>() != doc_id) {
            throw MalformedRecordError(source, line_no, "doc_id differs from earlier records");
        }
        paragraphs.push_back({paragraphs.size() + 1, std::move(value)});
    }
    if (paragraphs.empty()) throw EmptyInputError("'" + source + "' holds no paragraph records");
    return Document(doc_id, doc_id, std::move(paragraphs));
}

void write_paragraph_records(const Document& document, const std::filesystem::path& path) {
    io::write_file(path, paragraph_records(document));
}

QaColumnMap QaColumnMap::parse(std::string_view mapping) {
    QaColumnMap map;
    std::size_t pos = 0;
    while (pos <= mapping.size()) {
        std::size_t comma = mapping.find(',', pos);
        if (comma == std::string_view::npos) comma = mapping.size();
        std::string_view pair = text::trim(mapping.substr(pos, comma - pos));
        pos = comma + 1;
        if (pair.empty()) continue;
        std::size_t eq = pair.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("column mapping '" + std::string(pair) + "' lacks '='");
        }
        std::string_view canonical = text::trim(pair.substr(0, eq));
        std::string external(text::trim(pair.substr(eq + 1)));
        if (canonical == "doc_id") map.doc_id = external;
        else if (canonical == "question") map.question = external;
        else if (canonical == "answer") map.answer = external;
        else if (canonical == "supporting_passage") map.supporting_passage = external;
        else throw std::invalid_argument("unknown QA field '" + std::string(canonical) + "'");
    }
    return map;
}

QaLoadResult parse_qa_records(std::string_view content, const QaColumnMap& columns,
                              const std::string& source) {
    struct Row {
        std::size_t line;
        ordered_json record;
    };
    std::vector<Row> rows;
    std::set<std::string> seen;
    auto lines = io::lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (blank(lines[n])) continue;
        ordered_json record;
        try {
            record = ordered_json::parse(lines[n]);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(source, n + 1, e.what());
        }
        if (!record.is_object()) throw MalformedRecordError(source, n + 1, "not an object");
        for (const auto& item : record.items()) seen.insert(item.key());
        rows.push_back({n + 1, std::move(record)});
    }
    for (const std::string* col :
         {&columns.doc_id, &columns.question, &columns.answer, &columns.supporting_passage}) {
        if (!rows.empty() && !seen.contains(*col)) throw MissingColumnError(*col);
    }

    QaLoadResult result;
    for (const Row& row : rows) {
        auto field = [&](const std::string& col, bool required) -> std::string {
            auto it = row.record.find(col);
            if (it == row.record.end() || it->is_null()) {
                if (required) throw MalformedRecordError(source, row.line, "missing '" + col + "'");
                return {};
            }
            if (!it->is_string()) {
                throw MalformedRecordError(source, row.line, "'" + col + "' is not a string");
            }
            return it->get<std::string>();
        };
        QAPair qa{field(columns.doc_id, true), field(columns.question, true),
                  field(columns.answer, true), field(columns.supporting_passage, false)};
        if (text::trim(qa.supporting_passage).empty()) {
            ++result.skipped_empty_passage;
            continue;
        }
        result.pairs.push_back(std::move(qa));
    }
    return result;
}

QaLoadResult parse_qa_tsv(std::string_view content, const QaColumnMap& columns,
                          const std::string& source) {
    auto lines = io::lines(content);
    std::size_t header_line = 0;
    while (header_line < lines.size() && blank(lines[header_line])) ++header_line;
    if (header_line == lines.size()) throw EmptyInputError("'" + source + "' has no header row");

    auto header = split_tabs(lines[header_line]);
    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (text::trim(header[i]) == name) return i;
        }
        throw MissingColumnError(name);
    };
    std::size_t c_doc = column_of(columns.doc_id);
    std::size_t c_q = column_of(columns.question);
    std::size_t c_a = column_of(columns.answer);
    std::size_t c_p = column_of(columns.supporting_passage);

    QaLoadResult result;
    for (std::size_t n = header_line + 1; n < lines.size(); ++n) {
        if (blank(lines[n])) continue;
        auto fields = split_tabs(lines[n]);
        auto at = [&](std::size_t i) {
            return i < fields.size() ? unescape_tsv(fields[i]) : std::string{};
        };
        QAPair qa{at(c_doc), at(c_q), at(c_a), at(c_p)};
        if (text::trim(qa.supporting_passage).empty()) {
            ++result.skipped_empty_passage;
            continue;
        }
        result.pairs.push_back(std::move(qa));
    }
    return result;
}

QaLoadResult load_qa(const std::filesystem::path& path, const QaColumnMap& columns) {
    std::string content = read_utf8(path);
    std::string ext = lower(path.extension().string());
    if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") {
        return parse_qa_records(content, columns, path.string());
    }
    return parse_qa_tsv(content, columns, path.string());
}

std::string qa_records(const std::vector<QAPair>& pairs) {
    std::string out;
    for (const QAPair& qa : pairs) {
        ordered_json record;
        record["doc_id"] = qa.doc_id;
        record["question"] = qa.question;
        record["answer"] = qa.answer;
        record["supporting_passage"] = qa.supporting_passage;
        out.append(record.dump());
        out.push_back('\n');
    }
    return out;
}

void write_qa(const std::vector<QAPair>& pairs, const std::filesystem::path& path) {
    io::write_file(path, qa_records(pairs));
}

QaPrompt render_qa_prompt(std::string_view book_title, std::string_view passage) {
    QaPrompt prompt;
    prompt.system =
        "Your task is to generate a question-answer pair that is specific to the provided text "
        "excerpts from the book \"" +
        std::string(book_title) +
        "\". The question should be unique to the passage, meaning it cannot be easily answered "
        "by other parts of the book.\n"
        "Instructions:\n\n"
        "Read the Passage: Carefully read the provided text excerpt from the book. Understand "
        "the context, key events, and specific details mentioned.\n\n"
        "Formulate a Question: Create a question that is:\n\n"
        "Directly related to the passage: The question should be based on the specific "
        "information or events described in the text.\n\n"
        "Unique to the passage: The question should not be answerable with information from "
        "other parts of the book.\n\n"
        "Type: Focus on creating a \"When/What/Where\" question to encourage specificity and "
        "conciseness.\n\n"
        "Provide a Concise Answer: Write an answer that is:\n\n"
        "Direct and informative: Limit the answer to a maximum of two sentences. Ensure it "
        "directly addresses the question and is supported by the passage.\n\n"
        "Self-contained: The answer should make sense on its own and should not require "
        "additional context from outside the passage.\n\n"
        "Cite the Supporting Passage: Include the passage that contains the information needed "
        "to answer the question. This will be used to verify the accuracy of the answer and the "
        "relevance of the question. Do not use '...'. The passage should be quoted without "
        "breaks.";
    prompt.user =
        "Example:\n"
        "Passage: \"Vous comprenez l'anglais?\" asked Lidia Ivanovna, and receiving a reply in "
        "the affirmative, she got up and began looking through a shelf of books. \"I want to "
        "read him 'Safe and Happy,' or 'Under the Wing,'\" she said, looking inquiringly at "
        "Karenin.\n\n"
        "Question: What book does Countess Lidia Ivanovna want to read to Karenin?\n\n"
        "Answer: She wants to read him 'Safe and Happy,' or 'Under the Wing.'\n\n"
        "Supporting Passage: \"I want to read him 'Safe and Happy,' or 'Under the Wing,'\" she "
        "said, looking inquiringly at Karenin.\n\n"
        "Passage: " +
        std::string(passage);
    return prompt;
}

ParsedQa parse_qa_response(std::string_view response) {
    static constexpr std::string_view kLabels[] = {"question:", "answer:", "supporting passage:"};
    std::string lowered = lower(response);

    struct Found {
        std::size_t label;
        std::size_t begin;  // label start
        std::size_t end;    // value start
    };
    std::vector<Found> found;
    for (std::size_t l = 0; l < 3; ++l) {
        std::size_t pos = 0;
        while ((pos = lowered.find(kLabels[l], pos)) != std::string::npos) {
            // "answer:" inside "supporting passage:" cannot occur, but reject
            // matches glued to a preceding letter such as "reanswer:".
            if (pos == 0 || !std::isalpha(static_cast<unsigned char>(lowered[pos - 1]))) break;
            pos += kLabels[l].size();
        }
        if (pos == std::string::npos) {
            throw ParseError("response lacks '" + std::string(kLabels[l]) + "'");
        }
        found.push_back({l, pos, pos + kLabels[l].size()});
    }
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) { return a.begin < b.begin; });

    std::string values[3];
    for (std::size_t i = 0; i < found.size(); ++i) {
        std::size_t stop = i + 1 < found.size() ? found[i + 1].begin : response.size();
        std::string_view raw = response.substr(found[i].end, stop - found[i].end);
        while (!raw.empty() && (text::is_space(raw.front()) || raw.front() == '*')) raw.remove_prefix(1);
        while (!raw.empty() && (text::is_space(raw.back()) || raw.back() == '*')) raw.remove_suffix(1);
        if (raw.empty()) throw ParseError("empty '" + std::string(kLabels[found[i].label]) + "'");
        values[found[i].label] = std::string(raw);
    }
    return {values[0], values[1], values[2]};
}

QaGenerationResult generate_qa(const Document& document, CompletionBackend& llm,
                               const QaGenerationConfig& config) {
    QaGenerationResult result;
    if (config.count == 0 || document.empty()) return result;
    if (config.min_window == 0 || config.min_window > config.max_window) {
        throw std::invalid_argument("QA window bounds must satisfy 1 <= min <= max");
    }

    const std::string haystack = text::collapse_whitespace(document.text());
    const std::size_t n = document.size();
    std::mt19937_64 rng(config.seed);

    for (std::size_t sample = 0; sample < config.count; ++sample) {
        std::size_t first = 1;
        std::size_t length = n;
        if (n > config.min_window) {
            std::uniform_int_distribution<std::size_t> len_dist(config.min_window,
                                                                std::min(config.max_window, n));
            length = len_dist(rng);
            std::uniform_int_distribution<std::size_t> start_dist(1, n - length + 1);
            first = start_dist(rng);
        }
        QaPrompt prompt = render_qa_prompt(document.title(),
                                           document.span_text(first, first + length - 1));
        std::string response = with_retries(config.max_retries, [&] {
            ++result.backend_calls;
            return llm.complete(prompt.system, prompt.user, config.temperature);
        });

        ParsedQa parsed;
        try {
            parsed = parse_qa_response(response);
        } catch (const ParseError&) {
            ++result.parse_failures;
            continue;
        }
        std::string needle = text::collapse_whitespace(parsed.supporting_passage);
        if (needle.empty() || haystack.find(needle) == std::string::npos) {
            ++result.rejected_passages;
            continue;
        }
        result.pairs.push_back({document.doc_id(), std::move(parsed.question),
                                std::move(parsed.answer), std::move(parsed.supporting_passage)});
    }
    return result;
}

}  // namespace lumber
