#include "lexrag/remote.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lexrag/error.hpp"

namespace lexrag {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto path_at = url.find('/', scheme_end + 3);
    if (path_at == std::string::npos) return {url, "/"};
    return {url.substr(0, path_at), url.substr(path_at)};
}

nlohmann::json parse_response(const std::string& body) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("provider returned invalid JSON: ") + e.what());
    }
}

} // namespace

std::string post_json(const EndpointConfig& endpoint, const std::string& body) {
    const auto parts = split_url(endpoint.url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);
    if (!endpoint.token_env.empty()) {
        if (const char* token = std::getenv(endpoint.token_env.c_str()); token != nullptr && *token != '\0') {
            client.set_bearer_token_auth(token);
        }
    }
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= endpoint.retries; ++attempt) {
        auto res = client.Post(parts.path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status < 500) break; // client errors are not retried
    }
    throw ProviderError("request to " + endpoint.url + " failed: " + last_error);
}

RemoteEmbedder::RemoteEmbedder(EndpointConfig endpoint, std::size_t dim, std::size_t batch_size)
    : endpoint_(std::move(endpoint)), dim_(dim), batch_size_(batch_size) {
    if (dim_ == 0) throw ConfigError("remote embedder needs a positive dimension");
    if (batch_size_ == 0) throw ConfigError("remote embedder needs a positive batch size");
}

std::vector<Vector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    const nlohmann::json request = {{"texts", texts}};
    const auto response = parse_response(post_json(endpoint_, request.dump()));
    std::vector<Vector> out;
    try {
        out = response.at("vectors").get<std::vector<Vector>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("embedding response lacks \"vectors\": ") + e.what());
    }
    if (out.size() != texts.size()) throw ProviderError("embedding response has the wrong number of vectors");
    for (const auto& v : out) {
        if (v.size() != dim_) throw ProviderError("embedding response has the wrong dimension");
    }
    return out;
}

std::string RemoteSummarizer::summarize(const std::vector<std::string>& texts, std::size_t max_tokens) const {
    const nlohmann::json request = {{"texts", texts}, {"max_tokens", max_tokens}};
    const auto response = parse_response(post_json(endpoint_, request.dump()));
    const auto it = response.find("summary");
    if (it == response.end() || !it->is_string()) throw ProviderError("summary response lacks \"summary\"");
    return it->get<std::string>();
}

} // namespace lexrag
