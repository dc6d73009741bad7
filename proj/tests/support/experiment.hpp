#pragma once

#include "lexrag/pipeline.hpp"
#include "synthetic.hpp"

namespace lexrag::testing {

struct ExperimentConfig {
    ChunkConfig chunk{64, 16, {"\n\n", "\n", ". ", " ", ""}};
    double alpha = 0.8;
    std::vector<std::size_t> ks{1, 2, 4, 8, 16};
    std::size_t bootstrap_iterations = 1000;
    std::uint64_t seed = 7;
    std::size_t dim = 256;
};

/// Chunk, optionally enrich (extractive summaries), index with the hashing
/// embedder, retrieve every query and sweep the metrics.
MetricReport run_variant(const SyntheticCase& c, Variant variant, const ExperimentConfig& cfg);

} // namespace lexrag::testing
