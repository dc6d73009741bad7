#include "lexrag/embedding.hpp"

#include <cmath>
#include <cstdint>

#include "lexrag/parallel.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t kBucketBasis = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kSignBasis = 0x84222325CBF29CE4ULL;

} // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

Vector HashingEmbedder::raw(const std::string& text) const {
    Vector v(dim_, 0.0f);
    const auto terms = lexical_terms(text);
    if (terms.empty()) {
        v[0] = 1.0f;
        return v;
    }
    for (const auto& t : terms) {
        const auto bucket = fnv1a(t, kBucketBasis) % dim_;
        const bool negative = (fnv1a(t, kSignBasis) >> 63) != 0;
        v[bucket] += negative ? -1.0f : 1.0f;
    }
    bool all_zero = true;
    for (float x : v) all_zero = all_zero && x == 0.0f;
    // Every term cancelled out; keep the vector well-defined.
    if (all_zero) v[0] = 1.0f;
    return v;
}

std::vector<Vector> HashingEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto v = raw(t);
        l2_normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

void l2_normalize(Vector& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ProviderError("cannot normalize a zero or non-finite vector");
    for (auto& x : v) x = static_cast<float>(x / norm);
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

std::vector<Vector> embed(const EmbeddingProvider& provider, const std::vector<std::string>& texts,
                          std::size_t workers) {
    const std::size_t batch = std::max<std::size_t>(1, provider.batch_size());
    const std::size_t n_batches = (texts.size() + batch - 1) / batch;
    std::vector<Vector> out(texts.size());
    std::vector<std::string> errors(n_batches);
    std::vector<char> failed(texts.size(), 0);

    parallel_for(n_batches, workers, [&](std::size_t b) {
        const std::size_t lo = b * batch;
        const std::size_t hi = std::min(texts.size(), lo + batch);
        std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                       texts.begin() + static_cast<std::ptrdiff_t>(hi));
        try {
            auto vecs = provider.embed_batch(slice);
            if (vecs.size() != slice.size()) throw ProviderError("provider returned a wrong number of vectors");
            for (std::size_t i = 0; i < vecs.size(); ++i) {
                if (vecs[i].size() != provider.dim()) throw ProviderError("provider returned a wrong dimension");
                l2_normalize(vecs[i]);
                out[lo + i] = std::move(vecs[i]);
            }
        } catch (const std::exception& e) {
            errors[b] = e.what();
            for (auto i = lo; i < hi; ++i) failed[i] = 1;
        }
    });

    std::vector<std::size_t> failed_idx;
    for (std::size_t i = 0; i < failed.size(); ++i) {
        if (failed[i]) failed_idx.push_back(i);
    }
    if (!failed_idx.empty()) {
        std::string first;
        for (const auto& e : errors) {
            if (!e.empty()) {
                first = e;
                break;
            }
        }
        throw EmbeddingError("embedding failed for " + std::to_string(failed_idx.size()) + " text(s): " + first,
                             std::move(failed_idx));
    }
    return out;
}

} // namespace lexrag
