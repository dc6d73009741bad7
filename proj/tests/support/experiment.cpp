#include "experiment.hpp"

namespace lexrag::testing {

MetricReport run_variant(const SyntheticCase& c, Variant variant, const ExperimentConfig& cfg) {
    const auto chunks = split_collection(c.docs, cfg.chunk);
    std::vector<IndexedText> texts;
    if (variant == Variant::enhanced) {
        const ExtractiveSummarizer summarizer;
        const auto enriched = enrich_collection(chunks, c.docs, summarizer, EnrichConfig{});
        for (const auto& e : enriched.chunks) texts.push_back({e.base.chunk_id, e.full_text});
    } else {
        for (const auto& ch : chunks) texts.push_back({ch.chunk_id, ch.text});
    }
    const HashingEmbedder embedder(cfg.dim);
    const auto sparse = build_sparse(texts);
    const auto dense = build_dense(texts, embedder);
    const HybridRetriever retriever(sparse, dense, embedder);

    FusionConfig fusion;
    fusion.alpha = cfg.alpha;
    SweepOptions opts;
    opts.dataset = "near-duplicate statutes";
    opts.variant = std::string(to_string(variant));
    opts.ks = cfg.ks;
    opts.bootstrap_iterations = cfg.bootstrap_iterations;
    opts.seed = cfg.seed;
    return sweep(c.records, retriever, fusion, ChunkTable(chunks), opts);
}

} // namespace lexrag::testing
