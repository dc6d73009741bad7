#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexrag/aligner.hpp"
#include "lexrag/chunker.hpp"
#include "lexrag/corpus.hpp"
#include "lexrag/dpo.hpp"
#include "lexrag/enricher.hpp"
#include "lexrag/evaluator.hpp"
#include "lexrag/retriever.hpp"

namespace lexrag {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories. Output is written as-is (no trailing newline added).
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// One compact JSON value per line, each followed by '\n'.
std::string to_jsonl(const std::vector<json>& rows);
/// Throws FormatError naming the first bad line.
std::vector<json> parse_jsonl(std::string_view content);

json to_json(const DocumentMeta& meta);
DocumentMeta meta_from_json(const json& j);

json to_json(const Chunk& c);
Chunk chunk_from_json(const json& j);

json to_json(const EnrichedChunk& c);
EnrichedChunk enriched_from_json(const json& j);

json to_json(const WindowSummary& w);

json to_json(const RetrievalResult& r);
RetrievalResult retrieval_from_json(const json& j);

json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const json& j);

json to_json(const PairedComparison& c);

json to_json(const AlignmentReport& r);

/// Records re-emitted as a {"tests": [...]} snippet_qa document; records
/// without gold spans are skipped.
json to_snippet_qa(const std::vector<QueryRecord>& records);

/// snippet_qa-shaped record plus the optional context/source fields.
json to_json(const QueryRecord& r);
QueryRecord record_from_json(const json& j);

/// {"prompt", "chosen", "rejected", "metadata": {...}}.
json to_json(const PreferencePair& p);
/// Chat-style variant: {"messages": [{"role": "user", ...}], "chosen":
/// {"role": "assistant", ...}, "rejected": {...}, "metadata": {...}}.
json to_conversation_json(const PreferencePair& p);

/// {"query_id", "set_tag", "output"} rows.
std::vector<ModelOutput> parse_model_outputs(std::string_view jsonl);

json to_json(const RefusalRates& r);

} // namespace lexrag
