#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/chunker.hpp"
#include "lexrag/corpus.hpp"

namespace lexrag {

/// Summarizes a group of texts into at most `max_tokens` whitespace tokens.
/// Implementations must be safe to call concurrently.
class SummarizerProvider {
public:
    virtual ~SummarizerProvider() = default;
    virtual std::string summarize(const std::vector<std::string>& texts, std::size_t max_tokens) const = 0;
    virtual std::string name() const = 0;
};

/// Leading sentences of each text taken round-robin, then truncated to the
/// budget. Sentences end at '.', '!' or '?' followed by whitespace or the end
/// of the text.
std::string extractive_fallback_summary(const std::vector<std::string>& texts, std::size_t budget_tokens);

class ExtractiveSummarizer final : public SummarizerProvider {
public:
    std::string summarize(const std::vector<std::string>& texts, std::size_t max_tokens) const override {
        return extractive_fallback_summary(texts, max_tokens);
    }
    std::string name() const override { return "extractive"; }
};

struct WindowSummary {
    std::string doc_id;
    std::size_t window_start_ordinal = 0;
    std::size_t window_len = 0;
    std::string summary_text;
    std::size_t token_count = 0;
    /// The provider failed or returned nothing; summary_text is extractive.
    bool fallback = false;
};

struct WindowConfig {
    std::size_t window = 4;
    std::size_t stride = 1;
    std::size_t max_summary_tokens = 200;
    std::size_t max_in_flight = 4;

    void validate() const;
};

/// Window start positions for `n` chunks: 0, stride, 2*stride, ... while the
/// window fits, plus a final window ending at the last chunk when the stride
/// would otherwise leave a tail uncovered. n <= window gives one window.
std::vector<std::size_t> window_starts(std::size_t n, std::size_t window, std::size_t stride);

/// Index into `windows` of the window whose center is nearest `ordinal`;
/// ties go to the earlier window.
std::size_t nearest_window(const std::vector<WindowSummary>& windows, std::size_t ordinal);

struct DocumentSummaries {
    std::vector<WindowSummary> windows;
    /// For each input chunk, the index of its assigned window.
    std::vector<std::size_t> assignment;
};

/// Summaries for the chunks of one document (ordered by ordinal).
DocumentSummaries window_summaries(const std::vector<Chunk>& chunks, const SummarizerProvider& provider,
                                   const WindowConfig& cfg);

struct EnrichedChunk {
    Chunk base;
    std::string header_text;
    std::string full_text;
    double metadata_fraction = 0.0;
};

/// "[DOC] title | jurisdiction | type [SUMMARY] summary", whitespace
/// normalized, with empty fields and empty sections left out.
std::string build_header(const DocumentMeta& meta, std::string_view summary);

/// Prepends the header, truncated from its end until
/// header_tokens / (header_tokens + body_tokens) <= max_fraction.
EnrichedChunk enrich_chunk(const Chunk& chunk, const DocumentMeta& meta, std::string_view summary,
                           double max_fraction = 0.25);

/// Wraps a chunk without any header (the baseline variant).
EnrichedChunk plain_chunk(const Chunk& chunk);

struct EnrichConfig {
    WindowConfig windows;
    double max_fraction = 0.25;
    /// When false only the document header is prepended.
    bool summaries = true;
};

struct EnrichResult {
    std::vector<EnrichedChunk> chunks;
    std::vector<WindowSummary> summaries;
    std::size_t fallback_windows = 0;
};

/// Enriches chunks of many documents. Chunks of one document must be
/// contiguous and in ordinal order (as produced by split_collection).
EnrichResult enrich_collection(const std::vector<Chunk>& chunks, const DocumentCollection& docs,
                               const SummarizerProvider& provider, const EnrichConfig& cfg);

} // namespace lexrag
