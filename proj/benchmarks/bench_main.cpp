#include <benchmark/benchmark.h>

#include "lexrag/chunker.hpp"
#include "lexrag/embedding.hpp"
#include "lexrag/index.hpp"
#include "lexrag/random.hpp"
#include "lexrag/retriever.hpp"
#include "lexrag/stats.hpp"
#include "synthetic.hpp"

namespace {

using namespace lexrag;

DocumentCollection corpus(std::size_t docs, std::size_t tokens) {
    std::mt19937_64 rng(1);
    std::vector<Document> out;
    for (std::size_t d = 0; d < docs; ++d) {
        out.push_back(testing::make_document("doc" + std::to_string(d), testing::random_text(rng, tokens)));
    }
    return DocumentCollection(std::move(out));
}

std::vector<IndexedText> chunk_texts(std::size_t docs) {
    ChunkConfig cfg;
    cfg.target_tokens = 128;
    cfg.overlap_tokens = 32;
    std::vector<IndexedText> out;
    for (const auto& c : split_collection(corpus(docs, 2000), cfg)) out.push_back({c.chunk_id, c.text});
    return out;
}

void BM_Chunk(benchmark::State& state) {
    const auto docs = corpus(static_cast<std::size_t>(state.range(0)), 2000);
    ChunkConfig cfg;
    cfg.target_tokens = 128;
    cfg.overlap_tokens = 32;
    for (auto _ : state) benchmark::DoNotOptimize(split_collection(docs, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Chunk)->Arg(10)->Arg(100);

void BM_Bm25Query(benchmark::State& state) {
    const auto index = build_sparse(chunk_texts(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(bm25_scores(index, "tenant must give written notice within days"));
}
BENCHMARK(BM_Bm25Query)->Arg(10)->Arg(100);

void BM_DenseSearch(benchmark::State& state) {
    const HashingEmbedder embedder(256);
    const auto index = build_dense(chunk_texts(static_cast<std::size_t>(state.range(0))), embedder);
    const auto q = embedder.embed_batch({"tenant must give written notice within days"}).front();
    for (auto _ : state) benchmark::DoNotOptimize(dense_search(index, q, 16));
}
BENCHMARK(BM_DenseSearch)->Arg(10)->Arg(100);

void BM_HybridRetrieve(benchmark::State& state) {
    const HashingEmbedder embedder(256);
    const auto texts = chunk_texts(100);
    const auto sparse = build_sparse(texts);
    const auto dense = build_dense(texts, embedder);
    const HybridRetriever retriever(sparse, dense, embedder);
    FusionConfig cfg;
    cfg.k = 16;
    for (auto _ : state) benchmark::DoNotOptimize(retriever.retrieve("q", "landlord breach of the lease", cfg));
}
BENCHMARK(BM_HybridRetrieve);

void BM_Bootstrap(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<double> v(500);
    for (auto& x : v) x = static_cast<double>(uniform_index(rng, 1000)) / 1000.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bootstrap_ci(v, static_cast<std::size_t>(state.range(0)), 0.95, 0));
    }
}
BENCHMARK(BM_Bootstrap)->Arg(1000)->Arg(10000);

} // namespace
BENCHMARK_MAIN();
