#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lumber/backend.hpp"

namespace lumber {

/// Separator placed between paragraphs whenever they are joined back into text.
inline constexpr std::string_view kParagraphSeparator = "\n\n";

struct Paragraph {
    std::size_t index = 0;  // 1-based
    std::string text;

    friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

/// A parsed text whose paragraphs are numbered 1..N in source order.
class Document {
public:
    Document() = default;
    /// Throws CorpusError if the paragraph invariants do not hold.
    Document(std::string doc_id, std::string title, std::vector<Paragraph> paragraphs);

    const std::string& doc_id() const noexcept { return doc_id_; }
    const std::string& title() const noexcept { return title_; }
    const std::vector<Paragraph>& paragraphs() const noexcept { return paragraphs_; }
    std::size_t size() const noexcept { return paragraphs_.size(); }
    bool empty() const noexcept { return paragraphs_.empty(); }

    /// 1-based access.
    const Paragraph& paragraph(std::size_t index) const { return paragraphs_.at(index - 1); }

    /// Paragraph texts joined with kParagraphSeparator.
    std::string text() const;
    /// Joins paragraphs [first, last] (1-based, inclusive).
    std::string span_text(std::size_t first, std::size_t last) const;

private:
    std::string doc_id_;
    std::string title_;
    std::vector<Paragraph> paragraphs_;
};

struct QAPair {
    std::string doc_id;
    std::string question;
    std::string answer;
    std::string supporting_passage;

    friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Splits on blank lines (a line break, optional whitespace, another line
/// break). Lines inside a paragraph are trimmed and joined by single spaces.
/// Throws EmptyInputError if nothing but whitespace remains.
std::vector<Paragraph> split_paragraphs(std::string_view raw_text);

enum class DocumentFormat { plain_text, paragraph_records };

DocumentFormat parse_document_format(std::string_view name);

/// Reads a document. The doc_id and title of plain-text files default to the
/// file stem; paragraph record files carry their own doc_id.
Document load_document(const std::filesystem::path& path, DocumentFormat format);

/// Paragraph records: one JSON object per line,
/// {"doc_id": str, "index": int, "text": str}.
std::string paragraph_records(const Document& document);
Document parse_paragraph_records(std::string_view content, const std::string& source = "<memory>");
void write_paragraph_records(const Document& document, const std::filesystem::path& path);

/// Maps canonical QA field names (doc_id, question, answer, supporting_passage)
/// onto the column names used by an external file.
struct QaColumnMap {
    std::string doc_id = "doc_id";
    std::string question = "question";
    std::string answer = "answer";
    std::string supporting_passage = "supporting_passage";

    /// Parses "canonical=external,..." pairs; unknown canonical names throw.
    static QaColumnMap parse(std::string_view mapping);
};

struct QaLoadResult {
    std::vector<QAPair> pairs;
    std::size_t skipped_empty_passage = 0;
};

/// Loads QA pairs from a JSON-lines file (.jsonl / .json) or a tab-separated
/// table with a header row (any other extension). Rows whose supporting
/// passage is missing or empty are skipped and counted.
QaLoadResult load_qa(const std::filesystem::path& path, const QaColumnMap& columns = {});
QaLoadResult parse_qa_records(std::string_view content, const QaColumnMap& columns = {},
                              const std::string& source = "<memory>");
QaLoadResult parse_qa_tsv(std::string_view content, const QaColumnMap& columns = {},
                          const std::string& source = "<memory>");

/// QA records: {"doc_id", "question", "answer", "supporting_passage"} per line.
std::string qa_records(const std::vector<QAPair>& pairs);
void write_qa(const std::vector<QAPair>& pairs, const std::filesystem::path& path);

struct QaGenerationConfig {
    std::size_t count = 30;
    std::size_t min_window = 3;
    std::size_t max_window = 6;
    std::uint64_t seed = 0;
    std::size_t max_retries = 3;
    double temperature = 0.0;
};

struct QaGenerationResult {
    std::vector<QAPair> pairs;
    std::size_t parse_failures = 0;
    std::size_t rejected_passages = 0;
    std::size_t backend_calls = 0;
};

struct QaPrompt {
    std::string system;
    std::string user;
};

/// System prompt plus one-shot user prompt asking for a question, answer and
/// verbatim supporting passage for `passage`.
QaPrompt render_qa_prompt(std::string_view book_title, std::string_view passage);

struct ParsedQa {
    std::string question;
    std::string answer;
    std::string supporting_passage;
};

/// Extracts the Question / Answer / Supporting Passage fields. Throws
/// ParseError if any is missing or empty.
ParsedQa parse_qa_response(std::string_view response);

/// Samples `config.count` windows of consecutive paragraphs, asks `llm` for a
/// QA pair per window and keeps the pairs whose supporting passage occurs in
/// the document after whitespace normalization.
QaGenerationResult generate_qa(const Document& document, CompletionBackend& llm,
                               const QaGenerationConfig& config = {});

}  // namespace lumber
