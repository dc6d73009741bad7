#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/corpus.hpp"

namespace lexrag {

struct AlignConfig {
    /// Character n-gram size over normalized text.
    std::size_t shingle_size = 3;
    double min_score = 0.6;
    /// Candidate window lengths lie within +-slack of the answer length.
    double max_window_slack = 0.3;

    void validate() const;
};

enum class AlignMethod { exact, normalized, fuzzy };

std::string_view to_string(AlignMethod m) noexcept;

struct AlignOutcome {
    bool ok = false;
    double score = 0.0;
    /// Meaningful when ok.
    GoldSpan span;
    AlignMethod method = AlignMethod::fuzzy;
    std::string message;
};

/// Lowercased text with whitespace runs collapsed to one space and trimmed.
std::u32string normalize_for_alignment(std::u32string_view text);

/// Jaccard similarity of character shingle sets of the normalized texts.
/// Texts shorter than n contribute themselves as a single shingle.
double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n);

/// Locates `answer` in `doc`: first a verbatim occurrence, then an exact
/// match after normalization, then the best shingle-Jaccard window, refined
/// locally and shrunk while the score does not drop (right edge first).
AlignOutcome align_answer(const Document& doc, std::string_view answer, const AlignConfig& cfg);

struct AlignmentEntry {
    std::string query_id;
    std::string doc_id;
    bool ok = false;
    double score = 0.0;
    std::optional<AlignMethod> method;
    std::optional<std::size_t> start;
    std::optional<std::size_t> end;
    std::string message;
};

struct AlignmentReport {
    AlignConfig config;
    std::vector<AlignmentEntry> entries;
    std::size_t aligned = 0;
    std::size_t failed = 0;
};

struct ReconstructResult {
    std::vector<QueryRecord> records;
    AlignmentReport report;
};

/// Aligns each record's context_text inside its source document and stores
/// the span (answer_text = document slice) as the record's only gold span.
/// Failed records keep no gold spans and are listed in the report.
ReconstructResult reconstruct_dataset(const std::vector<QueryRecord>& records, const DocumentCollection& docs,
                                      const AlignConfig& cfg, std::size_t workers = 1);

} // namespace lexrag
