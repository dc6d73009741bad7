#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/chunker.hpp"
#include "lexrag/corpus.hpp"
#include "lexrag/retriever.hpp"

namespace lexrag {

struct ChunkLocation {
    std::string doc_id;
    std::size_t start = 0;
    std::size_t end = 0;
};

/// chunk_id -> base-chunk location. Metrics always use base offsets, never
/// enriched text.
class ChunkTable {
public:
    ChunkTable() = default;
    explicit ChunkTable(const std::vector<Chunk>& chunks);

    void add(std::string chunk_id, ChunkLocation loc);
    /// Throws FormatError for an unknown chunk id.
    const ChunkLocation& at(std::string_view chunk_id) const;
    bool has_doc(std::string_view doc_id) const { return docs_.count(doc_id) != 0; }
    std::size_t size() const noexcept { return table_.size(); }

private:
    std::map<std::string, ChunkLocation, std::less<>> table_;
    std::set<std::string, std::less<>> docs_;
};

/// Fraction of the top-min(k, |ranked|) chunks whose document is not gold.
/// nullopt for an empty ranking.
std::optional<double> drm(const RetrievalResult& result, const std::set<std::string>& gold_docs,
                          const ChunkTable& table, std::size_t k);

/// 1 if any of the top-k chunks comes from a non-gold document, else 0.
std::optional<double> drm_query_level(const RetrievalResult& result, const std::set<std::string>& gold_docs,
                                      const ChunkTable& table, std::size_t k);

/// Number of (gold span, top-k chunk) pairs in the same document sharing at
/// least one character, divided by the number of gold spans. Throws
/// ConfigError for an empty gold list.
double span_recall(const RetrievalResult& result, const std::vector<GoldSpan>& gold, const ChunkTable& table,
                   std::size_t k);

struct MetricStats {
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    /// Min and max of the bootstrap resample means.
    double range_lo = 0.0;
    double range_hi = 0.0;
    std::size_t n = 0;
};

struct KMetrics {
    MetricStats drm;
    MetricStats drm_query_level;
    MetricStats span_recall;
};

struct QueryValues {
    double drm = 0.0;
    double drm_query_level = 0.0;
    double span_recall = 0.0;
};

struct ExcludedQuery {
    std::string query_id;
    std::string reason;
};

struct PairedComparison {
    std::string metric;
    std::size_t k = 0;
    std::size_t n = 0;
    double baseline_mean = 0.0;
    double enhanced_mean = 0.0;
    double delta_mean = 0.0; // enhanced - baseline
    double delta_lo = 0.0;
    double delta_hi = 0.0;
    double t = 0.0;
    double p_value = 1.0;
    double p_adjusted = 1.0;
    bool degenerate = false;
};

struct MetricReport {
    std::string dataset;
    std::string variant;
    std::vector<std::size_t> ks;
    std::size_t bootstrap_iterations = 0;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::map<std::size_t, KMetrics> per_k;
    std::map<std::string, std::map<std::size_t, QueryValues>> per_query;
    std::vector<ExcludedQuery> excluded;
};

inline const std::vector<std::size_t> kDefaultKs{1, 2, 4, 8, 16, 32, 64};

struct SweepOptions {
    std::string dataset;
    std::string variant;
    std::vector<std::size_t> ks = kDefaultKs;
    std::size_t bootstrap_iterations = 10000;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// Scores precomputed rankings (matched to records by query_id, ranked to
/// at least max(ks)). Records with no gold span in a chunked document, or
/// with an empty or missing ranking, are excluded and listed.
MetricReport sweep_results(const std::vector<QueryRecord>& records, const std::vector<RetrievalResult>& results,
                           const ChunkTable& table, const SweepOptions& opts);

/// Retrieves once per query at max(ks), then scores every prefix.
MetricReport sweep(const std::vector<QueryRecord>& records, const HybridRetriever& retriever, FusionConfig fusion,
                   const ChunkTable& table, const SweepOptions& opts);

struct CompareOptions {
    std::size_t bootstrap_iterations = 10000;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// Paired comparisons of DRM and span recall at every k common to both
/// reports, over queries scored in both. Bonferroni m = |ks| * 2.
std::vector<PairedComparison> compare_reports(const MetricReport& baseline, const MetricReport& enhanced,
                                              const CompareOptions& opts);

/// Number of simultaneous comparisons used by compare_reports.
std::size_t comparison_count(const MetricReport& baseline, const MetricReport& enhanced);

/// Per-k grid, values in percent: "mean (lo-hi)" using the bootstrap CI,
/// followed by the same grid using the resample min-max range.
std::string render_metric_table(const MetricReport& report);
std::string render_comparison_table(const std::vector<PairedComparison>& comparisons, std::size_t m);

} // namespace lexrag
