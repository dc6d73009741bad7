#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/embedding.hpp"
#include "lexrag/index.hpp"

namespace lexrag {

struct FusionConfig {
    /// Weight on the dense side; the sparse side gets 1 - alpha.
    double alpha = 0.8;
    /// Dense hits considered per query; 0 means max(100, k).
    std::size_t candidate_pool = 0;
    std::size_t k = 10;

    std::size_t effective_pool() const noexcept;
    /// Throws ConfigError unless 0 <= alpha <= 1, k >= 1, pool >= k.
    void validate() const;
};

/// Min-max normalization into [0, 1]; a constant list maps to all 1.0.
/// Order is preserved.
std::vector<ScoredRef> normalize_scores(const std::vector<ScoredRef>& scores);

struct RankedChunk {
    std::string chunk_id;
    ChunkRef ref = 0;
    double fused = 0.0;
    double dense_norm = 0.0;
    double sparse_norm = 0.0;
    std::optional<double> dense_raw;
    std::optional<double> sparse_raw;
};

struct RetrievalResult {
    std::string query_id;
    std::vector<RankedChunk> ranked;
    std::size_t k = 0;
};

/// Fuses two hit lists over the same chunk list. Each side is normalized
/// over its own hits; a candidate missing from a side scores 0 there.
/// Ranked by fused descending, then chunk_id ascending; truncated to k.
std::vector<RankedChunk> fuse(const std::vector<ScoredRef>& dense_hits, const std::vector<ScoredRef>& sparse_hits,
                              const std::vector<std::string>& chunk_ids, double alpha, std::size_t k);

/// Hybrid dense + BM25 retrieval over two indexes built from the same chunks.
class HybridRetriever {
public:
    /// Throws ConfigError if the indexes cover different chunk lists or the
    /// embedder dimension differs from the dense index.
    HybridRetriever(const SparseIndex& sparse, const DenseIndex& dense, const EmbeddingProvider& embedder);

    RetrievalResult retrieve(std::string_view query_id, std::string_view question, const FusionConfig& cfg) const;

    /// Retrieval with a precomputed (normalized) query vector.
    RetrievalResult retrieve_with_vector(std::string_view query_id, std::string_view question, const Vector& query_vec,
                                         const FusionConfig& cfg) const;

    struct Query {
        std::string query_id;
        std::string question;
    };
    /// Embeds all questions, then ranks them on up to `workers` threads.
    /// Output order follows input order.
    std::vector<RetrievalResult> retrieve_batch(const std::vector<Query>& queries, const FusionConfig& cfg,
                                                std::size_t workers = 1) const;

    const SparseIndex& sparse() const noexcept { return sparse_; }
    const DenseIndex& dense() const noexcept { return dense_; }

private:
    const SparseIndex& sparse_;
    const DenseIndex& dense_;
    const EmbeddingProvider& embedder_;
};

RetrievalResult hybrid_retrieve(std::string_view question, const SparseIndex& sparse, const DenseIndex& dense,
                                const EmbeddingProvider& embedder, const FusionConfig& cfg);

} // namespace lexrag
