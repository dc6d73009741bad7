#include "lexrag/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lexrag/error.hpp"

namespace lexrag {

namespace {

template <typename T>
T get_or_throw(const json& j, const char* key, const char* what) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + ": bad or missing \"" + key + "\": " + e.what());
    }
}

json stats_json(const MetricStats& s) {
    return {{"mean", s.mean}, {"ci", {s.ci_lo, s.ci_hi}}, {"bootstrap_range", {s.range_lo, s.range_hi}}, {"n", s.n}};
}

MetricStats stats_from_json(const json& j) {
    MetricStats s;
    s.mean = get_or_throw<double>(j, "mean", "metric");
    const auto ci = get_or_throw<std::vector<double>>(j, "ci", "metric");
    const auto range = get_or_throw<std::vector<double>>(j, "bootstrap_range", "metric");
    if (ci.size() != 2 || range.size() != 2) throw FormatError("metric intervals must have two bounds");
    s.ci_lo = ci[0];
    s.ci_hi = ci[1];
    s.range_lo = range[0];
    s.range_hi = range[1];
    s.n = get_or_throw<std::size_t>(j, "n", "metric");
    return s;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::vector<json> parse_jsonl(std::string_view content) {
    std::vector<json> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        const auto line = content.substr(pos, nl - pos);
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            try {
                rows.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        pos = nl + 1;
    }
    return rows;
}

json to_json(const DocumentMeta& meta) {
    json j = {{"title", meta.title}};
    if (meta.jurisdiction) j["jurisdiction"] = *meta.jurisdiction;
    if (meta.doc_type) j["doc_type"] = *meta.doc_type;
    if (meta.source_url) j["source_url"] = *meta.source_url;
    if (!meta.extra.empty()) j["extra"] = meta.extra;
    return j;
}

DocumentMeta meta_from_json(const json& j) {
    DocumentMeta m;
    m.title = j.value("title", "");
    if (j.contains("jurisdiction")) m.jurisdiction = j.at("jurisdiction").get<std::string>();
    if (j.contains("doc_type")) m.doc_type = j.at("doc_type").get<std::string>();
    if (j.contains("source_url")) m.source_url = j.at("source_url").get<std::string>();
    if (j.contains("extra")) m.extra = j.at("extra").get<std::map<std::string, std::string>>();
    return m;
}

json to_json(const Chunk& c) {
    return {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"start", c.start},       {"end", c.end},
            {"ordinal", c.ordinal},   {"text", c.text},     {"hard_split", c.hard_split}};
}

Chunk chunk_from_json(const json& j) {
    Chunk c;
    c.chunk_id = get_or_throw<std::string>(j, "chunk_id", "chunk");
    c.doc_id = get_or_throw<std::string>(j, "doc_id", "chunk");
    c.start = get_or_throw<std::size_t>(j, "start", "chunk");
    c.end = get_or_throw<std::size_t>(j, "end", "chunk");
    c.ordinal = get_or_throw<std::size_t>(j, "ordinal", "chunk");
    c.text = get_or_throw<std::string>(j, "text", "chunk");
    c.hard_split = j.value("hard_split", false);
    return c;
}

json to_json(const EnrichedChunk& c) {
    return {{"base", to_json(c.base)},
            {"header_text", c.header_text},
            {"full_text", c.full_text},
            {"metadata_fraction", c.metadata_fraction}};
}

EnrichedChunk enriched_from_json(const json& j) {
    EnrichedChunk c;
    if (!j.contains("base")) throw FormatError("enriched chunk: missing \"base\"");
    c.base = chunk_from_json(j.at("base"));
    c.header_text = get_or_throw<std::string>(j, "header_text", "enriched chunk");
    c.full_text = get_or_throw<std::string>(j, "full_text", "enriched chunk");
    c.metadata_fraction = get_or_throw<double>(j, "metadata_fraction", "enriched chunk");
    return c;
}

json to_json(const WindowSummary& w) {
    return {{"doc_id", w.doc_id},           {"window_start_ordinal", w.window_start_ordinal},
            {"window_len", w.window_len},   {"summary_text", w.summary_text},
            {"token_count", w.token_count}, {"fallback", w.fallback}};
}

json to_json(const RetrievalResult& r) {
    json ranked = json::array();
    for (const auto& c : r.ranked) {
        ranked.push_back({{"chunk_id", c.chunk_id},
                          {"fused", c.fused},
                          {"dense_norm", c.dense_norm},
                          {"sparse_norm", c.sparse_norm},
                          {"dense_raw", optional_json(c.dense_raw)},
                          {"sparse_raw", optional_json(c.sparse_raw)}});
    }
    return {{"query_id", r.query_id}, {"k", r.k}, {"ranked", std::move(ranked)}};
}

RetrievalResult retrieval_from_json(const json& j) {
    RetrievalResult r;
    r.query_id = get_or_throw<std::string>(j, "query_id", "retrieval result");
    r.k = get_or_throw<std::size_t>(j, "k", "retrieval result");
    if (!j.contains("ranked") || !j.at("ranked").is_array()) throw FormatError("retrieval result: missing \"ranked\"");
    for (const auto& e : j.at("ranked")) {
        RankedChunk c;
        c.chunk_id = get_or_throw<std::string>(e, "chunk_id", "ranked chunk");
        c.fused = get_or_throw<double>(e, "fused", "ranked chunk");
        c.dense_norm = get_or_throw<double>(e, "dense_norm", "ranked chunk");
        c.sparse_norm = get_or_throw<double>(e, "sparse_norm", "ranked chunk");
        if (e.contains("dense_raw") && !e.at("dense_raw").is_null()) c.dense_raw = e.at("dense_raw").get<double>();
        if (e.contains("sparse_raw") && !e.at("sparse_raw").is_null()) c.sparse_raw = e.at("sparse_raw").get<double>();
        r.ranked.push_back(std::move(c));
    }
    return r;
}

json to_json(const MetricReport& r) {
    json per_k = json::object();
    for (const auto& [k, m] : r.per_k) {
        per_k[std::to_string(k)] = {{"drm", stats_json(m.drm)},
                                    {"drm_query_level", stats_json(m.drm_query_level)},
                                    {"span_recall", stats_json(m.span_recall)}};
    }
    json per_query = json::object();
    for (const auto& [id, by_k] : r.per_query) {
        json q = json::object();
        for (const auto& [k, v] : by_k) {
            q[std::to_string(k)] = {
                {"drm", v.drm}, {"drm_query_level", v.drm_query_level}, {"span_recall", v.span_recall}};
        }
        per_query[id] = std::move(q);
    }
    json excluded = json::array();
    for (const auto& e : r.excluded) excluded.push_back({{"query_id", e.query_id}, {"reason", e.reason}});
    return {{"dataset", r.dataset},
            {"variant", r.variant},
            {"ks", r.ks},
            {"bootstrap_iterations", r.bootstrap_iterations},
            {"level", r.level},
            {"seed", r.seed},
            {"per_k", std::move(per_k)},
            {"per_query", std::move(per_query)},
            {"excluded", std::move(excluded)}};
}

MetricReport metric_report_from_json(const json& j) {
    MetricReport r;
    r.dataset = j.value("dataset", "");
    r.variant = j.value("variant", "");
    r.ks = get_or_throw<std::vector<std::size_t>>(j, "ks", "metric report");
    r.bootstrap_iterations = j.value("bootstrap_iterations", std::size_t{0});
    r.level = j.value("level", 0.95);
    r.seed = j.value("seed", std::uint64_t{0});
    try {
        for (const auto& [k, m] : j.at("per_k").items()) {
            auto& km = r.per_k[std::stoul(k)];
            km.drm = stats_from_json(m.at("drm"));
            km.drm_query_level = stats_from_json(m.at("drm_query_level"));
            km.span_recall = stats_from_json(m.at("span_recall"));
        }
        for (const auto& [id, by_k] : j.at("per_query").items()) {
            auto& q = r.per_query[id];
            for (const auto& [k, v] : by_k.items()) {
                QueryValues qv;
                qv.drm = v.at("drm").get<double>();
                qv.drm_query_level = v.at("drm_query_level").get<double>();
                qv.span_recall = v.at("span_recall").get<double>();
                q[std::stoul(k)] = qv;
            }
        }
        if (j.contains("excluded")) {
            for (const auto& e : j.at("excluded")) {
                r.excluded.push_back({e.at("query_id").get<std::string>(), e.at("reason").get<std::string>()});
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("metric report: ") + e.what());
    } catch (const std::logic_error& e) {
        throw FormatError(std::string("metric report: bad k key: ") + e.what());
    }
    return r;
}

json to_json(const PairedComparison& c) {
    return {{"metric", c.metric},
            {"k", c.k},
            {"n", c.n},
            {"baseline_mean", c.baseline_mean},
            {"enhanced_mean", c.enhanced_mean},
            {"delta_mean", c.delta_mean},
            {"delta_ci", {c.delta_lo, c.delta_hi}},
            {"t", std::isfinite(c.t) ? json(c.t) : json(c.t > 0 ? "inf" : "-inf")},
            {"p_value", c.p_value},
            {"p_adjusted", c.p_adjusted},
            {"degenerate_variance", c.degenerate}};
}

json to_json(const AlignmentReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        json span = nullptr;
        if (e.start && e.end) span = {*e.start, *e.end};
        entries.push_back({{"query_id", e.query_id},
                           {"doc_id", e.doc_id},
                           {"status", e.ok ? "aligned" : "failed"},
                           {"method", e.method ? json(std::string(to_string(*e.method))) : json(nullptr)},
                           {"score", e.score},
                           {"span", std::move(span)},
                           {"message", e.message}});
    }
    return {{"config",
             {{"shingle_size", r.config.shingle_size},
              {"min_score", r.config.min_score},
              {"max_window_slack", r.config.max_window_slack}}},
            {"aligned", r.aligned},
            {"failed", r.failed},
            {"entries", std::move(entries)}};
}

json to_json(const QueryRecord& r) {
    json spans = json::array();
    for (const auto& s : r.gold_spans) {
        spans.push_back({{"file_path", s.doc_id}, {"span", {s.start, s.end}}, {"answer", s.answer_text}});
    }
    json j = {{"query_id", r.query_id}, {"query", r.question}, {"snippets", std::move(spans)},
              {"gold_answer", r.gold_answer}};
    if (r.context_text) j["context"] = *r.context_text;
    if (r.source_url) j["source_url"] = *r.source_url;
    if (r.source_doc_id) j["source_doc_id"] = *r.source_doc_id;
    if (!r.source_meta.empty()) j["source_meta"] = r.source_meta;
    return j;
}

QueryRecord record_from_json(const json& j) {
    QueryRecord r;
    try {
        r.query_id = j.at("query_id").get<std::string>();
        r.question = j.at("query").get<std::string>();
        r.gold_answer = j.value("gold_answer", "");
        for (const auto& s : j.at("snippets")) {
            GoldSpan g;
            g.doc_id = s.at("file_path").get<std::string>();
            g.start = s.at("span").at(0).get<std::size_t>();
            g.end = s.at("span").at(1).get<std::size_t>();
            g.answer_text = s.value("answer", "");
            r.gold_spans.push_back(std::move(g));
        }
        if (j.contains("context")) r.context_text = j.at("context").get<std::string>();
        if (j.contains("source_url")) r.source_url = j.at("source_url").get<std::string>();
        if (j.contains("source_doc_id")) r.source_doc_id = j.at("source_doc_id").get<std::string>();
        if (j.contains("source_meta")) r.source_meta = j.at("source_meta").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("query record: ") + e.what());
    }
    return r;
}

json to_snippet_qa(const std::vector<QueryRecord>& records) {
    json tests = json::array();
    for (const auto& r : records) {
        if (!r.gold_spans.empty()) tests.push_back(to_json(r));
    }
    return {{"tests", std::move(tests)}};
}

json to_json(const PreferencePair& p) {
    return {{"prompt", p.prompt},
            {"chosen", p.chosen},
            {"rejected", p.rejected},
            {"metadata",
             {{"pair_id", p.pair_id},
              {"set_tag", std::string(to_string(p.set_tag))},
              {"source_query_id", p.source_query_id},
              {"source_doc", p.source_doc},
              {"context_doc", p.context_doc},
              {"context_query_id", p.context_query_id}}}};
}

json to_conversation_json(const PreferencePair& p) {
    auto j = to_json(p);
    return {{"messages", json::array({{{"role", "user"}, {"content", p.prompt}}})},
            {"chosen", {{"role", "assistant"}, {"content", p.chosen}}},
            {"rejected", {{"role", "assistant"}, {"content", p.rejected}}},
            {"metadata", j.at("metadata")}};
}

std::vector<ModelOutput> parse_model_outputs(std::string_view jsonl) {
    std::vector<ModelOutput> out;
    std::size_t row = 0;
    for (const auto& j : parse_jsonl(jsonl)) {
        ++row;
        ModelOutput m;
        const auto where = "model output row " + std::to_string(row);
        m.query_id = get_or_throw<std::string>(j, "query_id", where.c_str());
        m.set_tag = parse_set_tag(get_or_throw<std::string>(j, "set_tag", where.c_str()));
        m.output = get_or_throw<std::string>(j, "output", where.c_str());
        out.push_back(std::move(m));
    }
    return out;
}

json to_json(const RefusalRates& r) {
    return {{"set1", {{"total", r.set1_total}, {"refusals", r.set1_refusals}, {"rate", optional_json(r.set1_rate)},
                      {"rate_display", format_rate(r.set1_rate)}}},
            {"set2", {{"total", r.set2_total}, {"refusals", r.set2_refusals}, {"rate", optional_json(r.set2_rate)},
                      {"rate_display", format_rate(r.set2_rate)}}}};
}

} // namespace lexrag
