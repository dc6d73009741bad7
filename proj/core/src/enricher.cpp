#include "lexrag/enricher.hpp"

#include <cmath>
#include <exception>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

namespace {

std::vector<std::string> split_sentences(std::string_view text) {
    const auto norm = normalize_whitespace(text);
    std::vector<std::string> out;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const char c = norm[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == norm.size() || norm[i + 1] == ' ')) {
            out.push_back(norm.substr(begin, i + 1 - begin));
            begin = i + 2;
        }
    }
    if (begin < norm.size()) out.push_back(norm.substr(begin));
    return out;
}

struct WindowJob {
    const std::vector<Chunk>* chunks;
    std::size_t first; // index into *chunks
    WindowSummary* out;
};

void run_window(const WindowJob& job, const SummarizerProvider& provider, std::size_t max_tokens) {
    std::vector<std::string> texts;
    texts.reserve(job.out->window_len);
    for (std::size_t i = 0; i < job.out->window_len; ++i) texts.push_back((*job.chunks)[job.first + i].text);

    std::string summary;
    bool failed = false;
    try {
        summary = normalize_whitespace(provider.summarize(texts, max_tokens));
    } catch (const std::exception&) {
        failed = true;
    }
    if (failed || summary.empty()) {
        summary = extractive_fallback_summary(texts, max_tokens);
        job.out->fallback = true;
    }
    if (count_tokens(summary) > max_tokens) summary = truncate_tokens(summary, max_tokens);
    job.out->token_count = count_tokens(summary);
    job.out->summary_text = std::move(summary);
}

std::vector<WindowSummary> layout_windows(const std::vector<Chunk>& chunks, std::size_t first, std::size_t n,
                                          const WindowConfig& cfg) {
    std::vector<WindowSummary> windows;
    for (auto p : window_starts(n, cfg.window, cfg.stride)) {
        WindowSummary w;
        w.doc_id = chunks[first].doc_id;
        w.window_start_ordinal = chunks[first + p].ordinal;
        w.window_len = std::min(cfg.window, n - p);
        windows.push_back(std::move(w));
    }
    return windows;
}

} // namespace

std::string extractive_fallback_summary(const std::vector<std::string>& texts, std::size_t budget_tokens) {
    if (budget_tokens == 0) throw ConfigError("summary budget must be positive");
    std::vector<std::vector<std::string>> sentences;
    std::size_t rounds = 0;
    for (const auto& t : texts) {
        sentences.push_back(split_sentences(t));
        rounds = std::max(rounds, sentences.back().size());
    }
    std::string joined;
    std::size_t tokens = 0;
    for (std::size_t r = 0; r < rounds && tokens < budget_tokens; ++r) {
        for (const auto& s : sentences) {
            if (r >= s.size()) continue;
            if (!joined.empty()) joined += ' ';
            joined += s[r];
            tokens += count_tokens(s[r]);
        }
    }
    return truncate_tokens(joined, budget_tokens);
}

void WindowConfig::validate() const {
    if (window == 0) throw ConfigError("window must be positive");
    if (stride == 0) throw ConfigError("stride must be positive");
    if (max_summary_tokens == 0) throw ConfigError("max_summary_tokens must be positive");
}

std::vector<std::size_t> window_starts(std::size_t n, std::size_t window, std::size_t stride) {
    std::vector<std::size_t> starts;
    if (n == 0) return starts;
    if (n <= window) return {0};
    for (std::size_t p = 0; p + window <= n; p += stride) starts.push_back(p);
    if (starts.back() + window < n) starts.push_back(n - window);
    return starts;
}

std::size_t nearest_window(const std::vector<WindowSummary>& windows, std::size_t ordinal) {
    std::size_t best = 0;
    double best_dist = INFINITY;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        const double center = static_cast<double>(w.window_start_ordinal) + (static_cast<double>(w.window_len) - 1.0) / 2.0;
        const double dist = std::abs(static_cast<double>(ordinal) - center);
        if (dist < best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    return best;
}

DocumentSummaries window_summaries(const std::vector<Chunk>& chunks, const SummarizerProvider& provider,
                                   const WindowConfig& cfg) {
    cfg.validate();
    DocumentSummaries out;
    if (chunks.empty()) return out;
    out.windows = layout_windows(chunks, 0, chunks.size(), cfg);
    std::vector<WindowJob> jobs;
    for (auto& w : out.windows) {
        jobs.push_back({&chunks, w.window_start_ordinal - chunks.front().ordinal, &w});
    }
    parallel_for(jobs.size(), cfg.max_in_flight,
                 [&](std::size_t i) { run_window(jobs[i], provider, cfg.max_summary_tokens); });
    for (const auto& c : chunks) out.assignment.push_back(nearest_window(out.windows, c.ordinal));
    return out;
}

std::string build_header(const DocumentMeta& meta, std::string_view summary) {
    std::string fields;
    auto add = [&](std::string_view v) {
        const auto norm = normalize_whitespace(v);
        if (norm.empty()) return;
        if (!fields.empty()) fields += " | ";
        fields += norm;
    };
    add(meta.title);
    if (meta.jurisdiction) add(*meta.jurisdiction);
    if (meta.doc_type) add(*meta.doc_type);

    std::string header;
    if (!fields.empty()) header = "[DOC] " + fields;
    const auto sum = normalize_whitespace(summary);
    if (!sum.empty()) {
        if (!header.empty()) header += ' ';
        header += "[SUMMARY] " + sum;
    }
    return header;
}

EnrichedChunk enrich_chunk(const Chunk& chunk, const DocumentMeta& meta, std::string_view summary,
                           double max_fraction) {
    if (!(max_fraction > 0.0 && max_fraction < 1.0)) throw ConfigError("max_fraction must be in (0, 1)");
    EnrichedChunk out;
    out.base = chunk;
    const std::size_t body = count_tokens(chunk.text);

    // Largest h with h / (h + body) <= max_fraction, i.e. h * (1 - f) <= f * body.
    auto fits = [&](std::size_t h) {
        return static_cast<double>(h) * (1.0 - max_fraction) <= max_fraction * static_cast<double>(body) + 1e-9;
    };
    std::size_t limit = static_cast<std::size_t>(std::floor(max_fraction * static_cast<double>(body) / (1.0 - max_fraction)));
    while (limit > 0 && !fits(limit)) --limit;
    while (fits(limit + 1)) ++limit;

    auto header = build_header(meta, summary);
    if (count_tokens(header) > limit) {
        auto tokens = split_tokens(header);
        tokens.resize(limit);
        // A dangling section marker carries no information.
        if (!tokens.empty() && tokens.back() == "[SUMMARY]") tokens.pop_back();
        if (tokens.size() == 1 && tokens.front() == "[DOC]") tokens.clear();
        std::string kept;
        for (auto t : tokens) {
            if (!kept.empty()) kept += ' ';
            kept += t;
        }
        header = std::move(kept);
    }
    const std::size_t h = count_tokens(header);
    out.header_text = header;
    out.full_text = header.empty() ? chunk.text : header + "\n" + chunk.text;
    out.metadata_fraction = h == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(h + body);
    return out;
}

EnrichedChunk plain_chunk(const Chunk& chunk) {
    EnrichedChunk out;
    out.base = chunk;
    out.full_text = chunk.text;
    return out;
}

EnrichResult enrich_collection(const std::vector<Chunk>& chunks, const DocumentCollection& docs,
                               const SummarizerProvider& provider, const EnrichConfig& cfg) {
    cfg.windows.validate();
    EnrichResult result;

    // Group boundaries: [group_begin[g], group_begin[g + 1]).
    std::vector<std::size_t> group_begin;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (i == 0 || chunks[i].doc_id != chunks[i - 1].doc_id) {
            group_begin.push_back(i);
        } else if (chunks[i].ordinal != chunks[i - 1].ordinal + 1) {
            throw FormatError("chunks of " + chunks[i].doc_id + " are not in ordinal order");
        }
    }
    group_begin.push_back(chunks.size());

    std::vector<std::size_t> window_begin; // per group, offset into result.summaries
    if (cfg.summaries) {
        for (std::size_t g = 0; g + 1 < group_begin.size(); ++g) {
            window_begin.push_back(result.summaries.size());
            auto ws = layout_windows(chunks, group_begin[g], group_begin[g + 1] - group_begin[g], cfg.windows);
            for (auto& w : ws) result.summaries.push_back(std::move(w));
        }
        window_begin.push_back(result.summaries.size());

        std::vector<WindowJob> jobs;
        for (std::size_t g = 0; g + 1 < group_begin.size(); ++g) {
            const auto first_ordinal = chunks[group_begin[g]].ordinal;
            for (auto w = window_begin[g]; w < window_begin[g + 1]; ++w) {
                auto& ws = result.summaries[w];
                jobs.push_back({&chunks, group_begin[g] + (ws.window_start_ordinal - first_ordinal), &ws});
            }
        }
        parallel_for(jobs.size(), cfg.windows.max_in_flight,
                     [&](std::size_t i) { run_window(jobs[i], provider, cfg.windows.max_summary_tokens); });
        for (const auto& w : result.summaries) result.fallback_windows += w.fallback ? 1 : 0;
    }

    result.chunks.reserve(chunks.size());
    for (std::size_t g = 0; g + 1 < group_begin.size(); ++g) {
        const auto& doc = docs.at(chunks[group_begin[g]].doc_id);
        std::vector<WindowSummary> group_windows;
        if (cfg.summaries) {
            group_windows.assign(result.summaries.begin() + static_cast<std::ptrdiff_t>(window_begin[g]),
                                 result.summaries.begin() + static_cast<std::ptrdiff_t>(window_begin[g + 1]));
        }
        for (auto i = group_begin[g]; i < group_begin[g + 1]; ++i) {
            std::string_view summary;
            if (!group_windows.empty()) summary = group_windows[nearest_window(group_windows, chunks[i].ordinal)].summary_text;
            result.chunks.push_back(enrich_chunk(chunks[i], doc.meta, summary, cfg.max_fraction));
        }
    }
    return result;
}

} // namespace lexrag
