#include "lumber/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lumber/index.hpp"
#include "lumber/text.hpp"

namespace lumber {

namespace {

std::vector<std::string> normalized_words(std::string_view s) {
    std::vector<std::string> out;
    const std::string normalized = text::normalize_for_matching(s);
    for (std::string_view w : text::words(normalized)) out.emplace_back(w);
    return out;
}

std::string gram(const std::vector<std::string>& words, std::size_t first, std::size_t n) {
    std::string g;
    for (std::size_t i = first; i < first + n; ++i) {
        if (i > first) g.push_back(' ');
        g.append(words[i]);
    }
    return g;
}

void check_runs(const std::vector<RetrievalRun>& runs, std::size_t k) {
    if (runs.empty()) throw std::invalid_argument("no retrieval runs to score");
    if (k == 0) throw std::invalid_argument("cutoff k must be at least 1");
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

double ngram_containment(std::string_view chunk_text, std::string_view passage, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n-gram size must be positive");
    auto pw = normalized_words(passage);
    if (pw.empty()) return 0.0;
    auto cw = normalized_words(chunk_text);
    if (pw.size() < n) {
        std::string hay = " " + text::join(cw, " ") + " ";
        return hay.find(" " + text::join(pw, " ") + " ") != std::string::npos ? 1.0 : 0.0;
    }
    std::unordered_set<std::string> chunk_grams;
    for (std::size_t i = 0; i + n <= cw.size(); ++i) chunk_grams.insert(gram(cw, i, n));
    std::size_t total = pw.size() - n + 1;
    std::size_t present = 0;
    for (std::size_t i = 0; i < total; ++i) present += chunk_grams.contains(gram(pw, i, n));
    return static_cast<double>(present) / static_cast<double>(total);
}

bool judge_relevance(std::string_view chunk_text, const QAPair& qa,
                     const RelevanceConfig& config) {
    const std::string passage = text::normalize_for_matching(qa.supporting_passage);
    if (passage.empty()) return false;
    if (config.use_containment &&
        text::normalize_for_matching(chunk_text).find(passage) != std::string::npos) {
        return true;
    }
    return config.use_ngram_ratio &&
           ngram_containment(chunk_text, qa.supporting_passage, config.ngram) >=
               config.ngram_threshold;
}

double dcg_at_k(const std::vector<RetrievalRun>& runs, std::size_t k) {
    check_runs(runs, k);
    double sum = 0.0;
    for (const RetrievalRun& r : runs) {
        if (r.gold_rank && *r.gold_rank <= k) {
            sum += 100.0 / std::log2(static_cast<double>(*r.gold_rank) + 1.0);
        }
    }
    return sum / static_cast<double>(runs.size());
}

double recall_at_k(const std::vector<RetrievalRun>& runs, std::size_t k) {
    check_runs(runs, k);
    std::size_t hits = 0;
    for (const RetrievalRun& r : runs) hits += (r.gold_rank && *r.gold_rank <= k) ? 1 : 0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(runs.size());
}

MetricsReport evaluate(std::string method, const std::vector<Chunk>& chunks,
                       const std::vector<QAPair>& qa_pairs, EmbeddingBackend& embedder,
                       const EvalOptions& options) {
    if (options.ks.empty()) throw std::invalid_argument("no cutoffs requested");
    MetricsReport report;
    report.method = std::move(method);
    report.ks = options.ks;
    std::sort(report.ks.begin(), report.ks.end());
    report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
    report.chunking_seconds = options.chunking_seconds;
    report.queries = qa_pairs.size();
    const std::size_t depth = report.ks.back();

    struct Book {
        std::vector<const Chunk*> chunks;
        std::unordered_map<std::size_t, const Chunk*> by_id;
        VectorIndex index;
    };
    std::unordered_map<std::string, Book> books;
    for (const Chunk& c : chunks) {
        Book& b = books[c.doc_id];
        b.chunks.push_back(&c);
        b.by_id[c.chunk_id] = &c;
    }
    {
        std::vector<std::string> texts;
        texts.reserve(chunks.size());
        for (const Chunk& c : chunks) texts.push_back(c.text);
        auto vectors = embed_batched(embedder, texts, options.batch_size);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            books[chunks[i].doc_id].index.add(chunks[i].chunk_id, std::move(vectors[i]));
        }
    }

    std::vector<std::string> queries;
    queries.reserve(qa_pairs.size());
    for (const QAPair& qa : qa_pairs) {
        queries.push_back(options.query_transform ? options.query_transform(qa.question)
                                                  : qa.question);
    }
    auto query_vectors = embed_batched(embedder, queries, options.batch_size);

    for (std::size_t q = 0; q < qa_pairs.size(); ++q) {
        RetrievalRun run;
        run.qa_index = q;
        auto book = books.find(qa_pairs[q].doc_id);
        if (book == books.end() || book->second.chunks.empty()) {
            ++report.warnings;
            report.runs.push_back(std::move(run));
            continue;
        }
        for (const Hit& hit : cosine_topk(book->second.index, query_vectors[q], depth)) {
            run.ranked_chunks.push_back(hit.chunk_id);
            if (!run.gold_rank &&
                judge_relevance(book->second.by_id.at(hit.chunk_id)->text, qa_pairs[q],
                                options.relevance)) {
                run.gold_rank = run.ranked_chunks.size();
            }
        }
        report.runs.push_back(std::move(run));
    }

    if (!report.runs.empty()) {
        for (std::size_t k : report.ks) {
            report.dcg[k] = dcg_at_k(report.runs, k);
            report.recall[k] = recall_at_k(report.runs, k);
        }
    }
    return report;
}

std::string theta_label(std::size_t theta) {
    return "lumberchunker(θ=" + std::to_string(theta) + ")";
}

std::vector<MetricsReport> sweep_theta(const std::vector<Document>& documents,
                                       const std::vector<QAPair>& qa_pairs,
                                       std::vector<std::size_t> thetas, CompletionBackend& backend,
                                       EmbeddingBackend& embedder, const ChunkerConfig& base,
                                       const EvalOptions& options, const TokenCounter& counter) {
    if (thetas.empty()) throw std::invalid_argument("theta sweep needs at least one value");
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

    std::vector<MetricsReport> reports;
    for (std::size_t theta : thetas) {
        ChunkerConfig config = base;
        config.theta = theta;
        std::vector<Chunk> chunks;
        auto started = std::chrono::steady_clock::now();
        for (const Document& doc : documents) {
            auto part = lumberchunk(doc, config, backend, counter);
            chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                          std::make_move_iterator(part.end()));
        }
        EvalOptions opts = options;
        opts.chunking_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        reports.push_back(evaluate(theta_label(theta), chunks, qa_pairs, embedder, opts));
    }
    return reports;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
    std::vector<std::size_t> ks;
    for (const auto& r : reports) ks.insert(ks.end(), r.ks.begin(), r.ks.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    std::string out = "method";
    for (std::size_t k : ks) out += "\tDCG@" + std::to_string(k);
    for (std::size_t k : ks) out += "\tRecall@" + std::to_string(k);
    out += "\tqueries\tchunking_s\n";
    for (const auto& r : reports) {
        out += r.method;
        auto cell = [&](const std::map<std::size_t, double>& m, std::size_t k) {
            auto it = m.find(k);
            return it == m.end() ? std::string("-") : fixed2(it->second);
        };
        for (std::size_t k : ks) out += "\t" + cell(r.dcg, k);
        for (std::size_t k : ks) out += "\t" + cell(r.recall, k);
        out += "\t" + std::to_string(r.queries) + "\t" + fixed2(r.chunking_seconds) + "\n";
    }
    return out;
}

std::string report_records(const std::vector<MetricsReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        nlohmann::ordered_json record;
        record["method"] = r.method;
        record["queries"] = r.queries;
        record["chunking_seconds"] = r.chunking_seconds;
        record["warnings"] = r.warnings;
        nlohmann::ordered_json dcg = nlohmann::ordered_json::object();
        nlohmann::ordered_json recall = nlohmann::ordered_json::object();
        for (std::size_t k : r.ks) {
            if (r.dcg.contains(k)) dcg[std::to_string(k)] = r.dcg.at(k);
            if (r.recall.contains(k)) recall[std::to_string(k)] = r.recall.at(k);
        }
        record["dcg"] = std::move(dcg);
        record["recall"] = std::move(recall);
        out += record.dump() + "\n";
    }
    return out;
}

}  // namespace lumber
