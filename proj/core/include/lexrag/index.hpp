#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/embedding.hpp"

namespace lexrag {

/// Position of a chunk in the index's chunk list.
using ChunkRef = std::size_t;

struct ScoredRef {
    ChunkRef ref = 0;
    double score = 0.0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    ChunkRef ref = 0;
    std::size_t tf = 0;
};

/// One indexed unit: an id and the text that is tokenized or embedded.
struct IndexedText {
    std::string chunk_id;
    std::string text;
};

class SparseIndex {
public:
    SparseIndex() = default;

    std::size_t size() const noexcept { return chunk_ids_.size(); }
    const std::vector<std::string>& chunk_ids() const noexcept { return chunk_ids_; }
    const std::vector<std::size_t>& doc_lengths() const noexcept { return doc_lengths_; }
    double avg_len() const noexcept { return avg_len_; }
    const Bm25Params& params() const noexcept { return params_; }

    /// Postings of `term` (already lexically normalized), or nullptr.
    const std::vector<Posting>* postings(std::string_view term) const;
    const std::map<std::string, std::vector<Posting>, std::less<>>& all_postings() const noexcept { return postings_; }

    /// ln((N - n_t + 0.5) / (n_t + 0.5) + 1); zero for unseen terms.
    double idf(std::string_view term) const;

private:
    friend SparseIndex build_sparse(const std::vector<IndexedText>&, const Bm25Params&);
    friend SparseIndex load_sparse(const std::filesystem::path&);

    void finalize();

    std::vector<std::string> chunk_ids_;
    std::vector<std::size_t> doc_lengths_;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    double avg_len_ = 0.0;
    Bm25Params params_;
};

/// Throws ConfigError on an empty chunk list or duplicate chunk ids.
SparseIndex build_sparse(const std::vector<IndexedText>& chunks, const Bm25Params& params = {});

/// Okapi BM25 over the lexical terms of `query` (repeated terms count
/// repeatedly). Zero scores are omitted; order is score descending, then
/// chunk_id ascending.
std::vector<ScoredRef> bm25_scores(const SparseIndex& index, std::string_view query);

class DenseIndex {
public:
    DenseIndex() = default;
    /// Rows are normalized on insertion.
    DenseIndex(std::vector<std::string> chunk_ids, const std::vector<Vector>& vectors, std::string backend);

    std::size_t size() const noexcept { return chunk_ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& backend() const noexcept { return backend_; }
    const std::vector<std::string>& chunk_ids() const noexcept { return chunk_ids_; }
    const float* row(ChunkRef r) const noexcept { return data_.data() + r * dim_; }
    const std::vector<float>& data() const noexcept { return data_; }

private:
    friend DenseIndex load_dense(const std::filesystem::path&);

    std::vector<std::string> chunk_ids_;
    std::vector<float> data_;
    std::size_t dim_ = 0;
    std::string backend_;
};

/// Embeds every text and builds an exact index.
DenseIndex build_dense(const std::vector<IndexedText>& chunks, const EmbeddingProvider& provider,
                       std::size_t workers = 1);

/// Exact top-n by inner product; ties by chunk_id ascending. Throws
/// ConfigError on dimension mismatch or n == 0.
std::vector<ScoredRef> dense_search(const DenseIndex& index, const Vector& query, std::size_t n);

// Versioned binary files: 8-byte magic, u32 format version, u32 header
// length, JSON header {format_version, kind, dim, n, backend, checksum, ...},
// little-endian payload. The checksum is SHA-256 over the payload and is
// verified on load (FormatError on mismatch).
void save_sparse(const SparseIndex& index, const std::filesystem::path& path);
SparseIndex load_sparse(const std::filesystem::path& path);
void save_dense(const DenseIndex& index, const std::filesystem::path& path);
DenseIndex load_dense(const std::filesystem::path& path);

} // namespace lexrag
