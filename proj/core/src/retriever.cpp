#include "lexrag/retriever.hpp"

#include <algorithm>
#include <map>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"

namespace lexrag {

std::size_t FusionConfig::effective_pool() const noexcept {
    return candidate_pool == 0 ? std::max<std::size_t>(100, k) : candidate_pool;
}

void FusionConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
    if (k == 0) throw ConfigError("k must be >= 1");
    if (effective_pool() < k) throw ConfigError("candidate_pool must be >= k");
}

std::vector<ScoredRef> normalize_scores(const std::vector<ScoredRef>& scores) {
    if (scores.empty()) return {};
    auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end(),
                                              [](const ScoredRef& a, const ScoredRef& b) { return a.score < b.score; });
    const double lo = lo_it->score;
    const double hi = hi_it->score;
    std::vector<ScoredRef> out;
    out.reserve(scores.size());
    for (const auto& s : scores) out.push_back({s.ref, hi == lo ? 1.0 : (s.score - lo) / (hi - lo)});
    return out;
}

std::vector<RankedChunk> fuse(const std::vector<ScoredRef>& dense_hits, const std::vector<ScoredRef>& sparse_hits,
                              const std::vector<std::string>& chunk_ids, double alpha, std::size_t k) {
    std::map<ChunkRef, RankedChunk> candidates;
    const auto dn = normalize_scores(dense_hits);
    for (std::size_t i = 0; i < dn.size(); ++i) {
        auto& c = candidates[dn[i].ref];
        c.ref = dn[i].ref;
        c.dense_norm = dn[i].score;
        c.dense_raw = dense_hits[i].score;
    }
    const auto sn = normalize_scores(sparse_hits);
    for (std::size_t i = 0; i < sn.size(); ++i) {
        auto& c = candidates[sn[i].ref];
        c.ref = sn[i].ref;
        c.sparse_norm = sn[i].score;
        c.sparse_raw = sparse_hits[i].score;
    }
    std::vector<RankedChunk> ranked;
    ranked.reserve(candidates.size());
    for (auto& [ref, c] : candidates) {
        c.chunk_id = chunk_ids.at(ref);
        c.fused = alpha * c.dense_norm + (1.0 - alpha) * c.sparse_norm;
        ranked.push_back(std::move(c));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedChunk& a, const RankedChunk& b) {
        if (a.fused != b.fused) return a.fused > b.fused;
        return a.chunk_id < b.chunk_id;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

HybridRetriever::HybridRetriever(const SparseIndex& sparse, const DenseIndex& dense, const EmbeddingProvider& embedder)
    : sparse_(sparse), dense_(dense), embedder_(embedder) {
    if (sparse.chunk_ids() != dense.chunk_ids()) throw ConfigError("sparse and dense indexes cover different chunks");
    if (dense.size() > 0 && embedder.dim() != dense.dim()) {
        throw ConfigError("embedder dimension does not match the dense index");
    }
}

RetrievalResult HybridRetriever::retrieve_with_vector(std::string_view query_id, std::string_view question,
                                                      const Vector& query_vec, const FusionConfig& cfg) const {
    cfg.validate();
    RetrievalResult result;
    result.query_id = std::string(query_id);
    result.k = cfg.k;
    if (dense_.size() == 0) return result;
    const auto dense_hits = dense_search(dense_, query_vec, cfg.effective_pool());
    const auto sparse_hits = bm25_scores(sparse_, question);
    result.ranked = fuse(dense_hits, sparse_hits, dense_.chunk_ids(), cfg.alpha, cfg.k);
    return result;
}

RetrievalResult HybridRetriever::retrieve(std::string_view query_id, std::string_view question,
                                          const FusionConfig& cfg) const {
    const auto vecs = embed(embedder_, {std::string(question)});
    return retrieve_with_vector(query_id, question, vecs.front(), cfg);
}

std::vector<RetrievalResult> HybridRetriever::retrieve_batch(const std::vector<Query>& queries, const FusionConfig& cfg,
                                                             std::size_t workers) const {
    cfg.validate();
    std::vector<std::string> questions;
    questions.reserve(queries.size());
    for (const auto& q : queries) questions.push_back(q.question);
    const auto vecs = embed(embedder_, questions, workers);
    std::vector<RetrievalResult> out(queries.size());
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        out[i] = retrieve_with_vector(queries[i].query_id, queries[i].question, vecs[i], cfg);
    });
    return out;
}

RetrievalResult hybrid_retrieve(std::string_view question, const SparseIndex& sparse, const DenseIndex& dense,
                                const EmbeddingProvider& embedder, const FusionConfig& cfg) {
    return HybridRetriever(sparse, dense, embedder).retrieve("", question, cfg);
}

} // namespace lexrag
