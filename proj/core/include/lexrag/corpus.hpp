#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/text.hpp"

namespace lexrag {

struct DocumentMeta {
    std::string title;
    std::optional<std::string> jurisdiction;
    std::optional<std::string> doc_type;
    std::optional<std::string> source_url;
    std::map<std::string, std::string> extra;
};

struct Document {
    std::string doc_id;
    Utf8Text text;
    DocumentMeta meta;
};

/// Immutable, doc_id-sorted set of documents. Safe for concurrent reads.
class DocumentCollection {
public:
    DocumentCollection() = default;
    /// Throws FormatError on duplicate doc_id or empty text.
    explicit DocumentCollection(std::vector<Document> docs);

    const Document* find(std::string_view doc_id) const noexcept;
    const Document& at(std::string_view doc_id) const;
    /// Document whose meta.source_url equals `url`, if any.
    const Document* find_by_source_url(std::string_view url) const noexcept;

    const std::vector<Document>& documents() const noexcept { return docs_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    auto begin() const noexcept { return docs_.begin(); }
    auto end() const noexcept { return docs_.end(); }

private:
    std::vector<Document> docs_;
    std::map<std::string, std::size_t, std::less<>> by_url_;
};

struct LoadError {
    std::string path;
    std::string message;
};

struct LoadResult {
    DocumentCollection collection;
    std::vector<LoadError> errors;
};

/// One Document per regular file under `root` (hidden files skipped);
/// doc_id is the '/'-separated path relative to root. Unreadable or
/// non-UTF-8 files become error entries. Duplicate ids are fatal.
LoadResult load_documents(const std::filesystem::path& root,
                          const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Parses a sidecar manifest: a JSON object mapping doc_id to metadata.
std::map<std::string, DocumentMeta> parse_manifest(std::string_view json_text);

struct GoldSpan {
    std::string doc_id;
    std::size_t start = 0; // inclusive, in characters
    std::size_t end = 0;   // exclusive
    std::string answer_text;
};

struct QueryRecord {
    std::string query_id;
    std::string question;
    std::vector<GoldSpan> gold_spans;
    std::string gold_answer;
    std::optional<std::string> context_text;
    std::optional<std::string> source_url;
    std::optional<std::string> source_doc_id;
    std::map<std::string, std::string> source_meta;
};

enum class QaFormat { snippet_qa, aus_legal_qa };

QaFormat parse_qa_format(std::string_view name);
std::string_view to_string(QaFormat format) noexcept;

struct RecordError {
    std::size_t index = 0;
    std::string message;
};

struct QaLoadResult {
    std::vector<QueryRecord> records;
    std::vector<RecordError> errors;
};

/// snippet_qa: JSON array (or {"tests": [...]}) of {"query", "snippets":
/// [{"file_path", "span": [start, end], "answer"}]}.
/// aus_legal_qa: JSON array or JSON-lines of {"Question", "document URL",
/// "Context", "Document MetaData", "Answer"}.
/// Malformed records are reported by index and skipped.
QaLoadResult parse_qa_dataset(std::string_view content, QaFormat format);
QaLoadResult load_qa_dataset(const std::filesystem::path& path, QaFormat format);

/// Flat doc_id for a source URL: scheme dropped, every run of characters
/// outside [A-Za-z0-9.-] replaced with '_', ".txt" appended.
std::string url_to_doc_id(std::string_view url);

/// Fills source_doc_id from source_url (manifest source_url match first,
/// then url_to_doc_id, then the URL verbatim). Returns the number of
/// records left unresolved.
std::size_t resolve_source_documents(std::vector<QueryRecord>& records, const DocumentCollection& docs);

/// Converts gold spans expressed as UTF-8 byte offsets into character
/// offsets. Spans whose offsets do not fall on scalar boundaries, or whose
/// document is missing, are reported and left unchanged.
std::vector<RecordError> rebase_byte_spans(std::vector<QueryRecord>& records, const DocumentCollection& docs);

enum class FindingKind { unresolved_doc, out_of_bounds, text_mismatch };

std::string_view to_string(FindingKind kind) noexcept;

struct SpanFinding {
    std::size_t record_index = 0;
    std::string query_id;
    std::size_t span_index = 0;
    FindingKind kind = FindingKind::text_mismatch;
    std::string doc_id;
    /// For text_mismatch: exact byte comparison of slice and answer.
    bool raw_match = false;
    /// Whitespace-collapsed, case-preserving comparison.
    bool normalized_match = false;
    /// Whitespace-collapsed, ASCII case-insensitive comparison.
    bool casefold_match = false;
    std::string message;
};

struct ValidationReport {
    std::size_t records = 0;
    std::size_t spans = 0;
    std::size_t clean_records = 0;
    std::vector<SpanFinding> findings;

    bool clean() const noexcept { return findings.empty(); }
};

/// A record is clean when every span resolves, is in bounds, and its slice
/// equals answer_text after whitespace normalization.
ValidationReport validate_annotations(const std::vector<QueryRecord>& records, const DocumentCollection& docs);

} // namespace lexrag
