#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lexrag/error.hpp"

namespace lexrag {

using Vector = std::vector<float>;

/// Maps a batch of texts to fixed-dimension vectors. Implementations must be
/// safe to call concurrently.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    /// "deterministic-test" or "remote"; recorded in index headers.
    virtual std::string backend_tag() const = 0;
    /// Preferred request size for embed().
    virtual std::size_t batch_size() const { return 64; }
    virtual std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const = 0;
};

/// Hashed bag of lexical terms: each term adds +-1 to one of `dim` buckets
/// (bucket and sign from independent FNV-1a hashes). Texts without terms map
/// to a fixed unit vector.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 256);

    std::size_t dim() const override { return dim_; }
    std::string backend_tag() const override { return "deterministic-test"; }
    std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const override;

    /// Raw (unnormalized) bucket counts.
    Vector raw(const std::string& text) const;

private:
    std::size_t dim_;
};

class EmbeddingError : public ProviderError {
public:
    EmbeddingError(const std::string& message, std::vector<std::size_t> failed)
        : ProviderError(message), failed_(std::move(failed)) {}

    /// Indices (into the embed() input) of texts that could not be embedded.
    const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

private:
    std::vector<std::size_t> failed_;
};

/// Embeds `texts` in provider-sized batches with up to `workers` batches in
/// flight. Output order follows input order; every vector is L2-normalized.
/// Throws EmbeddingError naming every failed index.
std::vector<Vector> embed(const EmbeddingProvider& provider, const std::vector<std::string>& texts,
                          std::size_t workers = 1);

/// Scales `v` to unit L2 norm. Throws ProviderError for a zero or non-finite vector.
void l2_normalize(Vector& v);

double dot(const Vector& a, const Vector& b);

} // namespace lexrag
