#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

#include "lexrag/embedding.hpp"
#include "lexrag/enricher.hpp"

namespace lexrag {

struct EndpointConfig {
    /// Full URL, e.g. "http://localhost:8080/embed".
    std::string url;
    /// Name of the environment variable holding a bearer token (optional).
    std::string token_env;
    std::chrono::milliseconds timeout{30000};
    std::size_t retries = 2;
};

/// POSTs a JSON body and returns the response body, retrying on
/// transport errors and 5xx statuses. Throws ProviderError when all attempts
/// fail.
std::string post_json(const EndpointConfig& endpoint, const std::string& body);

/// Embedding contract: {"texts": [...]} -> {"vectors": [[...], ...]}.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(EndpointConfig endpoint, std::size_t dim, std::size_t batch_size = 32);

    std::size_t dim() const override { return dim_; }
    std::string backend_tag() const override { return "remote"; }
    std::size_t batch_size() const override { return batch_size_; }
    std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const override;

private:
    EndpointConfig endpoint_;
    std::size_t dim_;
    std::size_t batch_size_;
};

/// Summarizer contract: {"texts": [...], "max_tokens": N} -> {"summary": "..."}.
class RemoteSummarizer final : public SummarizerProvider {
public:
    explicit RemoteSummarizer(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}

    std::string summarize(const std::vector<std::string>& texts, std::size_t max_tokens) const override;
    std::string name() const override { return "remote"; }

private:
    EndpointConfig endpoint_;
};

} // namespace lexrag
