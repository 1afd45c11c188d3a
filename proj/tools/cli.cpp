#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "lumber/baselines.hpp"
#include "lumber/chunker.hpp"
#include "lumber/corpus.hpp"
#include "lumber/embedding.hpp"
#include "lumber/error.hpp"
#include "lumber/eval.hpp"
#include "lumber/http_backend.hpp"
#include "lumber/ragpipe.hpp"

namespace lumber::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kCompletionCache = "completions.jsonl";
constexpr const char* kEmbeddingCache = "embeddings.jsonl";

/// Thrown for user-facing configuration problems; exits nonzero.
class UsageError : public Error {
public:
    using Error::Error;
};

struct BackendOptions {
    std::string llm = "none";  // none | live | replay
    std::string model;
    std::string api_base;
    std::string cache_dir;
    std::size_t max_retries = 3;
    std::string embedder = "mock";  // mock | live
    std::string embed_model;
    std::size_t embed_dim = 256;
    std::uint64_t seed = 0;
};

void add_backend_flags(CLI::App& cmd, BackendOptions& o, bool needs_llm, bool needs_embedder) {
    if (needs_llm) {
        cmd.add_option("--llm", o.llm, "Completion backend")
            ->check(CLI::IsMember({"none", "live", "replay"}))
            ->capture_default_str();
        cmd.add_option("--model", o.model, "Model name (default: $LUMBER_MODEL)");
        cmd.add_option("--max-retries", o.max_retries, "Retries for failing or invalid responses")
            ->capture_default_str();
    }
    if (needs_embedder) {
        cmd.add_option("--embedder", o.embedder, "Embedding backend")
            ->check(CLI::IsMember({"mock", "live"}))
            ->capture_default_str();
        cmd.add_option("--embed-model", o.embed_model,
                       "Embedding model name (default: $LUMBER_EMBED_MODEL)");
        cmd.add_option("--embed-dim", o.embed_dim, "Mock embedder dimension")
            ->capture_default_str();
    }
    cmd.add_option("--api-base", o.api_base, "Service base URL (default: $LUMBER_API_BASE)");
    cmd.add_option("--cache-dir", o.cache_dir, "Directory for response and embedding caches");
    cmd.add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
}

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

HttpEndpoint endpoint_for(const BackendOptions& o, const std::string& model) {
    HttpEndpoint e = HttpEndpoint::from_environment(model);
    if (!o.api_base.empty()) e.base_url = o.api_base;
    e.max_retries = o.max_retries;
    return e;
}

std::string resolved_model(const BackendOptions& o) {
    if (!o.model.empty()) return o.model;
    std::string m = env("LUMBER_MODEL");
    return m.empty() ? "default" : m;
}

/// Owns the completion backend chain selected on the command line.
class LlmStack {
public:
    explicit LlmStack(const BackendOptions& o) {
        const std::string model = resolved_model(o);
        if (o.llm == "replay") {
            if (o.cache_dir.empty()) throw UsageError("--llm replay requires --cache-dir");
            backend_ = std::make_unique<ReplayBackend>(fs::path(o.cache_dir) / kCompletionCache, model);
        } else if (o.llm == "live") {
            HttpEndpoint e = endpoint_for(o, model);
            if (e.base_url.empty()) {
                throw UsageError("--llm live requires --api-base or $LUMBER_API_BASE");
            }
            live_ = std::make_unique<HttpChatBackend>(std::move(e));
            if (!o.cache_dir.empty()) {
                cache_ = std::make_unique<ResponseCache>(fs::path(o.cache_dir) / kCompletionCache);
                backend_ = std::make_unique<CachingBackend>(*live_, *cache_);
            }
        }
    }

    CompletionBackend* get() { return backend_ ? backend_.get() : live_.get(); }

    CompletionBackend& require(const std::string& purpose) {
        if (!get()) {
            throw UsageError(purpose +
                             " needs a completion backend: pass --llm live, or --llm replay "
                             "with --cache-dir");
        }
        return *get();
    }

private:
    std::unique_ptr<CompletionBackend> live_;
    std::unique_ptr<ResponseCache> cache_;
    std::unique_ptr<CompletionBackend> backend_;
};

/// Owns the embedding backend chain selected on the command line.
class EmbedStack {
public:
    explicit EmbedStack(const BackendOptions& o) {
        if (o.embedder == "live") {
            std::string model = o.embed_model.empty() ? env("LUMBER_EMBED_MODEL") : o.embed_model;
            HttpEndpoint e = endpoint_for(o, model);
            if (e.base_url.empty()) {
                throw UsageError("--embedder live requires --api-base or $LUMBER_API_BASE");
            }
            inner_ = std::make_unique<HttpEmbeddingBackend>(std::move(e));
        } else {
            inner_ = std::make_unique<MockEmbedder>(o.embed_dim, o.seed);
        }
        if (!o.cache_dir.empty()) {
            cache_ = std::make_unique<EmbeddingCache>(fs::path(o.cache_dir) / kEmbeddingCache);
            caching_ = std::make_unique<CachingEmbedder>(*inner_, *cache_);
        }
    }

    EmbeddingBackend& get() { return caching_ ? *caching_ : *inner_; }

private:
    std::unique_ptr<EmbeddingBackend> inner_;
    std::unique_ptr<EmbeddingCache> cache_;
    std::unique_ptr<CachingEmbedder> caching_;
};

ordered_json backend_json(const BackendOptions& o, bool llm, bool embedder) {
    ordered_json j;
    if (llm) {
        j["llm"] = o.llm;
        j["model"] = o.llm == "none" ? "" : resolved_model(o);
        j["max_retries"] = o.max_retries;
    }
    if (embedder) {
        j["embedder"] = o.embedder;
        if (o.embedder == "mock") {
            j["embed_dim"] = o.embed_dim;
        } else {
            j["embed_model"] = o.embed_model.empty() ? env("LUMBER_EMBED_MODEL") : o.embed_model;
        }
    }
    const bool live = (llm && o.llm == "live") || (embedder && o.embedder == "live");
    if (live) {
        j["endpoint"] = o.api_base.empty() ? env("LUMBER_API_BASE") : o.api_base;
        j["api_key_source"] = "env:LUMBER_API_KEY";
    }
    j["cache_dir"] = o.cache_dir;
    j["seed"] = o.seed;
    return j;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

void write_run_config(const fs::path& dir, const std::string& command, ordered_json config) {
    ordered_json record;
    record["command"] = command;
    record["config"] = std::move(config);
    write_text(dir / run_config_name(command), record.dump(2) + "\n");
}

std::vector<std::size_t> parse_list(const std::string& csv, const std::string& what) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw UsageError("invalid " + what + " value '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("no " + what + " values given");
    return out;
}

ordered_json stats_json(const ChunkStats& s, double seconds, std::size_t paragraphs) {
    ordered_json j;
    j["chunks"] = s.count;
    j["paragraphs"] = paragraphs;
    auto opt = [](const auto& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    j["mean_tokens"] = opt(s.mean_tokens);
    j["min_tokens"] = opt(s.min_tokens);
    j["max_tokens"] = opt(s.max_tokens);
    j["mean_paragraphs"] = opt(s.mean_paragraphs);
    j["seconds"] = seconds;
    return j;
}

// ---------------------------------------------------------------------------

struct IngestOptions {
    std::string input;
    std::string format = "plain_text";
    std::string output;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
    Document doc = load_document(o.input, parse_document_format(o.format));
    fs::path output(o.output);
    write_paragraph_records(doc, output);
    ordered_json config;
    config["input"] = o.input;
    config["format"] = o.format;
    config["output"] = o.output;
    write_run_config(output.parent_path().empty() ? fs::path(".") : output.parent_path(), "ingest",
                     config);
    out << "ingested " << doc.size() << " paragraphs from '" << o.input << "' into '" << o.output
        << "'\n";
    return 0;
}

struct ChunkOptions {
    std::string document;
    std::string format = "paragraph_records";
    std::string method = "lumber";
    std::string out_dir = ".";
    std::size_t theta = 550;
    std::size_t min_tail = 2;
    std::size_t id_width = 4;
    std::size_t max_tokens = 450;
    double percentile = 95.0;
    std::string semantic_unit = "paragraph";
    BackendOptions backend;
};

std::vector<Chunk> chunk_with(const Document& doc, const ChunkOptions& o, LlmStack& llm,
                              EmbedStack& embed, std::size_t& warnings) {
    if (o.method == "paragraph") return paragraph_chunks(doc);
    if (o.method == "recursive") {
        RecursiveConfig rc;
        rc.max_tokens = o.max_tokens;
        return recursive_chunks(doc, rc);
    }
    if (o.method == "semantic") {
        SemanticConfig sc;
        sc.breakpoint_percentile = o.percentile;
        sc.unit = o.semantic_unit == "sentence" ? SemanticUnit::sentence : SemanticUnit::paragraph;
        return semantic_chunks(doc, embed.get(), sc);
    }
    if (o.method == "proposition") {
        auto result = proposition_chunks(paragraph_chunks(doc), llm.require("method 'proposition'"));
        warnings += result.warnings;
        return std::move(result.chunks);
    }
    ChunkerConfig cc;
    cc.theta = o.theta;
    cc.max_retries = o.backend.max_retries;
    cc.min_tail_paragraphs = o.min_tail;
    cc.id_width = o.id_width;
    auto run = run_lumberchunker(doc, cc, llm.require("method 'lumber'"));
    warnings += run.fallbacks;
    return std::move(run.chunks);
}

int cmd_chunk(const ChunkOptions& o, std::ostream& out, std::ostream& err) {
    const bool needs_llm = o.method == "lumber" || o.method == "proposition";
    LlmStack llm(o.backend);
    if (needs_llm) llm.require("method '" + o.method + "'");  // fail before any work
    EmbedStack embed(o.backend);

    Document doc = load_document(o.document, parse_document_format(o.format));
    std::size_t warnings = 0;
    auto started = std::chrono::steady_clock::now();
    std::vector<Chunk> chunks = chunk_with(doc, o, llm, embed, warnings);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    fs::path dir(o.out_dir);
    const std::string stem = doc.doc_id() + "." + o.method;
    write_chunks(chunks, dir / (stem + ".chunks.jsonl"));
    ordered_json stats = stats_json(chunk_stats(chunks), seconds, doc.size());
    stats["method"] = o.method;
    stats["doc_id"] = doc.doc_id();
    stats["warnings"] = warnings;
    write_text(dir / (stem + ".stats.json"), stats.dump(2) + "\n");

    ordered_json config;
    config["document"] = o.document;
    config["format"] = o.format;
    config["method"] = o.method;
    if (o.method == "lumber") {
        config["theta"] = o.theta;
        config["min_tail_paragraphs"] = o.min_tail;
        config["id_width"] = o.id_width;
    } else if (o.method == "recursive") {
        config["max_tokens"] = o.max_tokens;
    } else if (o.method == "semantic") {
        config["breakpoint_percentile"] = o.percentile;
        config["semantic_unit"] = o.semantic_unit;
    }
    config["token_counter"] = default_token_counter().name();
    config["backend"] =
        backend_json(o.backend, needs_llm || o.backend.llm != "none", o.method == "semantic");
    write_run_config(dir, "chunk", config);

    if (warnings > 0) err << "warning: " << warnings << " fallback(s) while chunking\n";
    out << o.method << ": " << chunks.size() << " chunks";
    if (auto m = chunk_stats(chunks).mean_tokens) out << ", mean " << *m << " tokens";
    out << ", " << seconds << " s\n";
    return 0;
}

struct EvalCliOptions {
    std::vector<std::string> chunk_files;
    std::string qa;
    std::string qa_columns;
    bool hyde = false;
    std::string ks = "1,2,5,10,20";
    std::string out_dir = ".";
    double ngram_threshold = 0.8;
    BackendOptions backend;
};

std::vector<QAPair> load_questions(const std::string& path, const std::string& columns,
                                   std::ostream& err) {
    QaColumnMap map = columns.empty() ? QaColumnMap{} : QaColumnMap::parse(columns);
    QaLoadResult qa = load_qa(path, map);
    if (qa.skipped_empty_passage > 0) {
        err << "warning: skipped " << qa.skipped_empty_passage
            << " QA row(s) without a supporting passage\n";
    }
    return std::move(qa.pairs);
}

int cmd_eval(const EvalCliOptions& o, std::ostream& out, std::ostream& err) {
    LlmStack llm(o.backend);
    if (o.hyde) llm.require("--hyde");
    EmbedStack embed(o.backend);
    std::vector<QAPair> questions = load_questions(o.qa, o.qa_columns, err);

    EvalOptions options;
    options.ks = parse_list(o.ks, "k");
    options.relevance.ngram_threshold = o.ngram_threshold;
    std::size_t hyde_fallbacks = 0;
    if (o.hyde) {
        CompletionBackend& backend = *llm.get();
        options.query_transform = [&](const std::string& q) {
            HydeResult r = hyde_transform(q, backend);
            hyde_fallbacks += r.degraded ? 1 : 0;
            return r.text;
        };
    }

    std::vector<MetricsReport> reports;
    for (const std::string& file : o.chunk_files) {
        std::vector<Chunk> chunks = load_chunks(file);
        std::string method = fs::path(file).filename().string();
        if (auto pos = method.find(".chunks"); pos != std::string::npos) method.resize(pos);
        if (o.hyde) method += "+hyde";
        MetricsReport report = evaluate(method, chunks, questions, embed.get(), options);
        if (report.warnings > 0) {
            err << "warning: " << report.warnings << " question(s) reference documents without chunks in '"
                << file << "'\n";
        }
        reports.push_back(std::move(report));
    }
    if (hyde_fallbacks > 0) err << "warning: HyDE fell back to the raw query " << hyde_fallbacks << " time(s)\n";

    fs::path dir(o.out_dir);
    const std::string table = format_table(reports);
    write_text(dir / "eval.tsv", table);
    write_text(dir / "eval.jsonl", report_records(reports));

    ordered_json config;
    config["chunk_files"] = o.chunk_files;
    config["qa"] = o.qa;
    config["qa_columns"] = o.qa_columns;
    config["hyde"] = o.hyde;
    config["ks"] = options.ks;
    config["relevance"] = {{"containment", options.relevance.use_containment},
                           {"ngram", options.relevance.ngram},
                           {"ngram_threshold", options.relevance.ngram_threshold}};
    config["backend"] = backend_json(o.backend, o.hyde, true);
    write_run_config(dir, "eval", config);

    out << table;
    return 0;
}

struct SweepOptions {
    std::vector<std::string> documents;
    std::string format = "paragraph_records";
    std::string qa;
    std::string qa_columns;
    std::string thetas = "450,550,650,1000";
    std::string ks = "1,2,5,10,20";
    std::string out_dir = ".";
    std::size_t min_tail = 2;
    std::size_t id_width = 4;
    BackendOptions backend;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
    LlmStack llm(o.backend);
    CompletionBackend& backend = llm.require("sweep");
    EmbedStack embed(o.backend);

    std::vector<Document> docs;
    for (const std::string& path : o.documents) {
        docs.push_back(load_document(path, parse_document_format(o.format)));
    }
    std::vector<QAPair> questions = load_questions(o.qa, o.qa_columns, err);
    std::vector<std::size_t> thetas = parse_list(o.thetas, "theta");

    ChunkerConfig base;
    base.max_retries = o.backend.max_retries;
    base.min_tail_paragraphs = o.min_tail;
    base.id_width = o.id_width;
    EvalOptions options;
    options.ks = parse_list(o.ks, "k");
    auto reports = sweep_theta(docs, questions, thetas, backend, embed.get(), base, options);

    fs::path dir(o.out_dir);
    const std::string table = format_table(reports);
    write_text(dir / "sweep.tsv", table);
    write_text(dir / "sweep.jsonl", report_records(reports));

    // Per-theta series for plotting: theta, then DCG@k and Recall@k.
    std::string series = "theta";
    for (std::size_t k : options.ks) series += "\tDCG@" + std::to_string(k);
    for (std::size_t k : options.ks) series += "\tRecall@" + std::to_string(k);
    series += "\n";
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream row;
        row << thetas[i];
        for (std::size_t k : options.ks) row << '\t' << reports[i].dcg.at(k);
        for (std::size_t k : options.ks) row << '\t' << reports[i].recall.at(k);
        series += row.str() + "\n";
    }
    write_text(dir / "sweep_series.tsv", series);

    ordered_json config;
    config["documents"] = o.documents;
    config["format"] = o.format;
    config["qa"] = o.qa;
    config["thetas"] = thetas;
    config["ks"] = options.ks;
    config["min_tail_paragraphs"] = o.min_tail;
    config["id_width"] = o.id_width;
    config["token_counter"] = default_token_counter().name();
    config["backend"] = backend_json(o.backend, true, true);
    write_run_config(dir, "sweep", config);

    out << table;
    return 0;
}

struct RagOptions {
    std::string chunks;
    std::string questions;
    std::string qa_columns;
    std::string judge = "match";
    std::string detector = "heuristic";
    std::string out_dir = ".";
    BackendOptions backend;
};

int cmd_rag(const RagOptions& o, std::ostream& out, std::ostream& err) {
    LlmStack llm(o.backend);
    CompletionBackend& backend = llm.require("rag");
    EmbedStack embed(o.backend);

    std::map<std::string, std::vector<Chunk>> books;
    for (Chunk& c : load_chunks(o.chunks)) books[c.doc_id].push_back(std::move(c));
    std::vector<QAPair> questions = load_questions(o.questions, o.qa_columns, err);

    CapitalizationDetector heuristic;
    LlmMentionDetector llm_detector(backend);
    MentionDetector& detector =
        o.detector == "llm" ? static_cast<MentionDetector&>(llm_detector) : heuristic;
    NormalizedMatchJudge match;
    LlmJudge llm_judge(backend);
    AnswerJudge& judge = o.judge == "llm" ? static_cast<AnswerJudge&>(llm_judge) : match;

    std::map<std::string, std::unique_ptr<RagPipeline>> pipelines;
    std::vector<AnswerPair> answers;
    std::string records;
    std::size_t unknown = 0;
    for (const QAPair& qa : questions) {
        ordered_json record;
        record["doc_id"] = qa.doc_id;
        record["question"] = qa.question;
        auto book = books.find(qa.doc_id);
        if (book == books.end()) {
            ++unknown;
            record["retrieved"] = ordered_json::array();
            record["context"] = ordered_json::array();
            record["answer"] = "";
        } else {
            auto& pipeline = pipelines[qa.doc_id];
            if (!pipeline) {
                pipeline = std::make_unique<RagPipeline>(book->second, embed.get(), backend, detector);
            }
            RagResult result = pipeline->run(qa.question);
            record["mentions"] = result.routing.mention_strings;
            record["retrieved"] = result.assembly.chunk_ids();
            record["reranked"] = result.reranked;
            record["context"] = result.context;
            record["answer"] = result.answer;
        }
        record["gold"] = qa.answer;
        bool correct = judge.correct(record["answer"].get<std::string>(), qa.answer);
        record["correct"] = correct;
        answers.push_back({record["answer"].get<std::string>(), qa.answer});
        records += record.dump() + "\n";
    }
    if (unknown > 0) err << "warning: " << unknown << " question(s) reference unknown documents\n";

    const double accuracy = qa_accuracy(answers, judge);
    fs::path dir(o.out_dir);
    write_text(dir / "rag.jsonl", records);
    ordered_json summary;
    summary["questions"] = questions.size();
    summary["accuracy"] = accuracy;
    summary["judge"] = o.judge;
    write_text(dir / "rag_summary.json", summary.dump(2) + "\n");

    ordered_json config;
    config["chunks"] = o.chunks;
    config["questions"] = o.questions;
    config["judge"] = o.judge;
    config["detector"] = o.detector;
    config["dense_k"] = kDenseK;
    config["answer_context"] = kAnswerContext;
    config["backend"] = backend_json(o.backend, true, true);
    write_run_config(dir, "rag", config);

    out << "answered " << questions.size() << " question(s), accuracy " << accuracy << "\n";
    return 0;
}

struct GenQaOptions {
    std::string document;
    std::string format = "paragraph_records";
    std::string output;
    std::size_t count = 30;
    BackendOptions backend;
};

int cmd_gen_qa(const GenQaOptions& o, std::ostream& out, std::ostream& err) {
    LlmStack llm(o.backend);
    CompletionBackend& backend = llm.require("gen-qa");
    Document doc = load_document(o.document, parse_document_format(o.format));
    QaGenerationConfig qc;
    qc.count = o.count;
    qc.seed = o.backend.seed;
    qc.max_retries = o.backend.max_retries;
    QaGenerationResult result = generate_qa(doc, backend, qc);
    fs::path output(o.output);
    write_qa(result.pairs, output);

    ordered_json config;
    config["document"] = o.document;
    config["format"] = o.format;
    config["output"] = o.output;
    config["count"] = o.count;
    config["window"] = {qc.min_window, qc.max_window};
    config["backend"] = backend_json(o.backend, true, false);
    write_run_config(output.parent_path().empty() ? fs::path(".") : output.parent_path(), "gen-qa",
                     config);

    if (result.parse_failures + result.rejected_passages > 0) {
        err << "warning: " << result.parse_failures << " unparsable response(s), "
            << result.rejected_passages << " passage(s) not found in the document\n";
    }
    out << "generated " << result.pairs.size() << " QA pair(s)\n";
    return 0;
}

}  // namespace

std::string run_config_name(const std::string& command) { return command + ".run_config.json"; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Document chunking and retrieval evaluation toolkit", "lumber"};
    app.require_subcommand(1);

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Split a document into paragraph records");
    c_ingest->add_option("input", ingest.input, "Input document")->required();
    c_ingest->add_option("-o,--output", ingest.output, "Paragraph record file")->required();
    c_ingest->add_option("--format", ingest.format, "plain_text or paragraph_records")
        ->check(CLI::IsMember({"plain_text", "paragraph_records"}))
        ->capture_default_str();

    ChunkOptions chunk;
    auto* c_chunk = app.add_subcommand("chunk", "Chunk one document");
    c_chunk->add_option("document", chunk.document, "Document file")->required();
    c_chunk->add_option("--format", chunk.format)
        ->check(CLI::IsMember({"plain_text", "paragraph_records"}))
        ->capture_default_str();
    c_chunk->add_option("-m,--method", chunk.method)
        ->check(CLI::IsMember({"lumber", "paragraph", "recursive", "semantic", "proposition"}))
        ->capture_default_str();
    c_chunk->add_option("-o,--out-dir", chunk.out_dir)->capture_default_str();
    c_chunk->add_option("--theta", chunk.theta, "Group token budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_chunk->add_option("--min-tail", chunk.min_tail)->check(CLI::PositiveNumber)->capture_default_str();
    c_chunk->add_option("--id-width", chunk.id_width)->check(CLI::PositiveNumber)->capture_default_str();
    c_chunk->add_option("--max-tokens", chunk.max_tokens, "Recursive chunk limit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_chunk->add_option("--percentile", chunk.percentile, "Semantic breakpoint percentile")
        ->check(CLI::Range(0.0, 100.0))
        ->capture_default_str();
    c_chunk->add_option("--semantic-unit", chunk.semantic_unit)
        ->check(CLI::IsMember({"paragraph", "sentence"}))
        ->capture_default_str();
    add_backend_flags(*c_chunk, chunk.backend, true, true);

    EvalCliOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Score chunk files against QA pairs");
    c_eval->add_option("chunks", eval.chunk_files, "Chunk record files")->required();
    c_eval->add_option("--qa", eval.qa, "QA file")->required();
    c_eval->add_option("--qa-columns", eval.qa_columns, "Column mapping, e.g. question=Question");
    c_eval->add_flag("--hyde", eval.hyde, "Replace queries with hypothetical answer passages");
    c_eval->add_option("--ks", eval.ks, "Cutoffs")->capture_default_str();
    c_eval->add_option("--ngram-threshold", eval.ngram_threshold)->capture_default_str();
    c_eval->add_option("-o,--out-dir", eval.out_dir)->capture_default_str();
    add_backend_flags(*c_eval, eval.backend, true, true);

    SweepOptions sweep;
    auto* c_sweep = app.add_subcommand("sweep", "Chunk and evaluate across theta values");
    c_sweep->add_option("documents", sweep.documents, "Document files")->required();
    c_sweep->add_option("--format", sweep.format)
        ->check(CLI::IsMember({"plain_text", "paragraph_records"}))
        ->capture_default_str();
    c_sweep->add_option("--qa", sweep.qa, "QA file")->required();
    c_sweep->add_option("--qa-columns", sweep.qa_columns);
    c_sweep->add_option("--thetas", sweep.thetas)->capture_default_str();
    c_sweep->add_option("--ks", sweep.ks)->capture_default_str();
    c_sweep->add_option("--min-tail", sweep.min_tail)->check(CLI::PositiveNumber)->capture_default_str();
    c_sweep->add_option("--id-width", sweep.id_width)->check(CLI::PositiveNumber)->capture_default_str();
    c_sweep->add_option("-o,--out-dir", sweep.out_dir)->capture_default_str();
    add_backend_flags(*c_sweep, sweep.backend, true, true);

    RagOptions rag;
    auto* c_rag = app.add_subcommand("rag", "Answer questions with the hybrid RAG pipeline");
    c_rag->add_option("chunks", rag.chunks, "Chunk record file")->required();
    c_rag->add_option("--questions", rag.questions, "QA file with gold answers")->required();
    c_rag->add_option("--qa-columns", rag.qa_columns);
    c_rag->add_option("--judge", rag.judge)->check(CLI::IsMember({"match", "llm"}))->capture_default_str();
    c_rag->add_option("--detector", rag.detector)
        ->check(CLI::IsMember({"heuristic", "llm"}))
        ->capture_default_str();
    c_rag->add_option("-o,--out-dir", rag.out_dir)->capture_default_str();
    add_backend_flags(*c_rag, rag.backend, true, true);

    GenQaOptions genqa;
    auto* c_genqa = app.add_subcommand("gen-qa", "Generate QA pairs for a document");
    c_genqa->add_option("document", genqa.document, "Document file")->required();
    c_genqa->add_option("--format", genqa.format)
        ->check(CLI::IsMember({"plain_text", "paragraph_records"}))
        ->capture_default_str();
    c_genqa->add_option("-o,--output", genqa.output, "QA record file")->required();
    c_genqa->add_option("-n,--count", genqa.count)->capture_default_str();
    add_backend_flags(*c_genqa, genqa.backend, true, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (c_ingest->parsed()) return cmd_ingest(ingest, out);
        if (c_chunk->parsed()) return cmd_chunk(chunk, out, err);
        if (c_eval->parsed()) return cmd_eval(eval, out, err);
        if (c_sweep->parsed()) return cmd_sweep(sweep, out, err);
        if (c_rag->parsed()) return cmd_rag(rag, out, err);
        if (c_genqa->parsed()) return cmd_gen_qa(genqa, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace lumber::cli
