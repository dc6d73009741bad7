#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexrag/aligner.hpp"
#include "lexrag/chunker.hpp"
#include "lexrag/corpus.hpp"
#include "lexrag/dpo.hpp"
#include "lexrag/embedding.hpp"
#include "lexrag/enricher.hpp"
#include "lexrag/evaluator.hpp"
#include "lexrag/index.hpp"
#include "lexrag/remote.hpp"
#include "lexrag/retriever.hpp"

namespace lexrag {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Variant { baseline, enhanced };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);

struct EmbedderConfig {
    /// "deterministic" (hashing embedder) or "remote".
    std::string backend = "deterministic";
    std::size_t dim = 256;
    std::size_t batch_size = 32;
    EndpointConfig endpoint;
};

struct SummarizerConfig {
    /// "extractive" or "remote".
    std::string backend = "extractive";
    EndpointConfig endpoint;
};

/// Everything a run needs. Relative paths in a config file are resolved
/// against the file's directory.
struct PipelineConfig {
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> dataset;
    QaFormat format = QaFormat::snippet_qa;
    std::string dataset_name = "dataset";
    /// Gold spans in the dataset are UTF-8 byte offsets.
    bool byte_offsets = false;

    ChunkConfig chunk;
    Variant variant = Variant::enhanced;
    EnrichConfig enrich;
    SummarizerConfig summarizer;
    EmbedderConfig embedder;
    Bm25Params bm25;
    FusionConfig fusion;
    std::vector<std::size_t> ks = kDefaultKs;
    std::size_t top = 4;

    std::uint64_t seed = 0;
    std::size_t bootstrap_iterations = 10000;
    std::size_t workers = 1;

    AlignConfig align;
    SplitSpec split;
    PromptTemplate prompt = PromptTemplate::with_refusal_instruction;
    bool conversation_export = false;
    RefusalConfig refusal;

    std::filesystem::path out = "run";

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);

    /// Parameter checks plus existence of the referenced input paths.
    void validate() const;
    /// SHA-256 of to_json().dump().
    std::string hash() const;
};

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& cfg);
std::unique_ptr<SummarizerProvider> make_summarizer(const SummarizerConfig& cfg);

struct ContextResult {
    std::string text;
    std::vector<std::string> chunk_ids;
    /// Fewer than n chunks were available.
    bool short_context = false;
};

/// Top-n base chunk texts in rank order, each as "[doc_id]\n<text>",
/// separated by blank lines.
ContextResult end_to_end_context(const RetrievalResult& result, const std::map<std::string, Chunk, std::less<>>& chunks,
                                 std::size_t n = 4);

/// Record of one command's inputs and outputs. Timestamps live only here.
class RunManifest {
public:
    RunManifest(std::string command, const PipelineConfig& cfg);
    void input(const std::filesystem::path& path);
    void output(const std::filesystem::path& path);
    /// Writes <out>/manifests/<command>.json.
    void write() const;

private:
    std::string command_;
    const PipelineConfig& cfg_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

/// Artifact locations inside a run directory.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path ingest_report() const { return root / "ingest_report.json"; }
    std::filesystem::path records() const { return root / "records.jsonl"; }
    std::filesystem::path aligned_records() const { return root / "records_aligned.jsonl"; }
    std::filesystem::path aligned_dataset() const { return root / "aligned_snippet_qa.json"; }
    std::filesystem::path alignment_report() const { return root / "alignment_report.json"; }
    std::filesystem::path chunks() const { return root / "chunks.jsonl"; }
    std::filesystem::path enriched() const { return root / "enriched.jsonl"; }
    std::filesystem::path summaries() const { return root / "summaries.jsonl"; }
    std::filesystem::path enrich_report() const { return root / "enrich_report.json"; }
    std::filesystem::path sparse_index() const { return root / "sparse.idx"; }
    std::filesystem::path dense_index() const { return root / "dense.idx"; }
    std::filesystem::path retrieval() const { return root / "retrieval.jsonl"; }
    std::filesystem::path contexts() const { return root / "contexts.jsonl"; }
    std::filesystem::path metrics() const { return root / "metrics.json"; }
    std::filesystem::path metrics_table() const { return root / "metrics.txt"; }
    std::filesystem::path comparison() const { return root / "comparison.json"; }
    std::filesystem::path comparison_table() const { return root / "comparison.txt"; }
    std::filesystem::path splits() const { return root / "splits.json"; }
    std::filesystem::path pairs() const { return root / "preference_pairs.jsonl"; }
    std::filesystem::path dpo_report() const { return root / "dpo_report.json"; }
    std::filesystem::path refusal_report() const { return root / "refusal_report.json"; }
    std::filesystem::path answers_report() const { return root / "answers_report.json"; }
    std::filesystem::path report() const { return root / "report.txt"; }
};

// Stage runners. Each reads its declared inputs (config paths or earlier
// artifacts in cfg.out), writes its outputs plus a run manifest, and returns
// a JSON summary of what it did.
nlohmann::json run_ingest(const PipelineConfig& cfg);
nlohmann::json run_chunk(const PipelineConfig& cfg);
nlohmann::json run_enrich(const PipelineConfig& cfg);
nlohmann::json run_index(const PipelineConfig& cfg);
nlohmann::json run_retrieve(const PipelineConfig& cfg);
nlohmann::json run_eval_retrieval(const PipelineConfig& cfg);
nlohmann::json run_align_spans(const PipelineConfig& cfg);
nlohmann::json run_dpo_build(const PipelineConfig& cfg);
nlohmann::json run_eval_refusal(const PipelineConfig& cfg, const std::filesystem::path& outputs);

struct AnswerEvalInputs {
    /// JSONL {query_id, prediction} for each system.
    std::filesystem::path predictions_a;
    std::filesystem::path predictions_b;
    /// JSONL {query_id, reference}; defaults to gold answers of the ingested records.
    std::optional<std::filesystem::path> references;
};
nlohmann::json run_eval_answers(const PipelineConfig& cfg, const AnswerEvalInputs& inputs);
nlohmann::json run_compare(const PipelineConfig& cfg, const std::filesystem::path& baseline_run,
                           const std::filesystem::path& enhanced_run);
nlohmann::json run_report(const PipelineConfig& cfg);

/// Loads ingested records (aligned ones when align-spans has run).
std::vector<QueryRecord> load_run_records(const RunPaths& paths);
DocumentCollection load_corpus(const PipelineConfig& cfg);

} // namespace lexrag
