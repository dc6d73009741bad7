#include "lexrag/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>

#include "lexrag/checksum.hpp"
#include "lexrag/error.hpp"
#include "lexrag/json_io.hpp"
#include "lexrag/random.hpp"
#include "lexrag/stats.hpp"

namespace lexrag {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return (path.is_absolute() || base.empty()) ? path : base / path;
}

EndpointConfig endpoint_from_json(const json& j) {
    EndpointConfig e;
    e.url = j.value("url", "");
    e.token_env = j.value("token_env", "");
    e.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    e.retries = j.value("retries", std::size_t{2});
    return e;
}

json endpoint_to_json(const EndpointConfig& e) {
    return {{"url", e.url}, {"token_env", e.token_env}, {"timeout_ms", e.timeout.count()}, {"retries", e.retries}};
}

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

void write_json(const fs::path& path, const json& j, RunManifest& manifest) {
    write_text_file(path, pretty(j));
    manifest.output(path);
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows, RunManifest& manifest) {
    write_text_file(path, to_jsonl(rows));
    manifest.output(path);
}

std::vector<json> read_jsonl(const fs::path& path, RunManifest& manifest) {
    if (!fs::exists(path)) throw IoError(path.string() + " does not exist; run the producing command first");
    manifest.input(path);
    return parse_jsonl(read_text_file(path));
}

std::vector<Chunk> read_chunks(const RunPaths& paths, RunManifest& manifest) {
    std::vector<Chunk> chunks;
    for (const auto& j : read_jsonl(paths.chunks(), manifest)) chunks.push_back(chunk_from_json(j));
    return chunks;
}

std::vector<QueryRecord> read_records(const RunPaths& paths, RunManifest& manifest) {
    const auto path = fs::exists(paths.aligned_records()) ? paths.aligned_records() : paths.records();
    std::vector<QueryRecord> records;
    for (const auto& j : read_jsonl(path, manifest)) records.push_back(record_from_json(j));
    return records;
}

std::size_t max_k(const PipelineConfig& cfg) {
    std::size_t k = cfg.top;
    for (auto x : cfg.ks) k = std::max(k, x);
    return k;
}

// Loads both indexes and the embedder and checks they belong together.
struct LoadedIndexes {
    SparseIndex sparse;
    DenseIndex dense;
    std::unique_ptr<EmbeddingProvider> embedder;
};

LoadedIndexes load_indexes(const PipelineConfig& cfg, const RunPaths& paths, RunManifest& manifest) {
    LoadedIndexes out;
    for (const auto& p : {paths.sparse_index(), paths.dense_index()}) {
        if (!fs::exists(p)) throw IoError(p.string() + " does not exist; run the index command first");
        manifest.input(p);
    }
    out.sparse = load_sparse(paths.sparse_index());
    out.dense = load_dense(paths.dense_index());
    out.embedder = make_embedder(cfg.embedder);
    if (out.dense.backend() != out.embedder->backend_tag()) {
        throw ConfigError("dense index was built with backend \"" + out.dense.backend() +
                          "\" but the configured embedder is \"" + out.embedder->backend_tag() + "\"");
    }
    return out;
}

std::vector<RetrievalResult> retrieve_all(const PipelineConfig& cfg, const std::vector<QueryRecord>& records,
                                          const RunPaths& paths, RunManifest& manifest) {
    auto idx = load_indexes(cfg, paths, manifest);
    HybridRetriever retriever(idx.sparse, idx.dense, *idx.embedder);
    FusionConfig fusion = cfg.fusion;
    fusion.k = max_k(cfg);
    std::vector<HybridRetriever::Query> queries;
    queries.reserve(records.size());
    for (const auto& r : records) queries.push_back({r.query_id, r.question});
    return retriever.retrieve_batch(queries, fusion, cfg.workers);
}

std::map<std::string, std::string> read_keyed_jsonl(const fs::path& path, const char* value_key,
                                                    RunManifest& manifest) {
    std::map<std::string, std::string> out;
    for (const auto& j : read_jsonl(path, manifest)) {
        const auto id = j.at("query_id").get<std::string>();
        if (!out.emplace(id, j.at(value_key).get<std::string>()).second) {
            throw FormatError("duplicate query id " + id + " in " + path.string());
        }
    }
    return out;
}

} // namespace

std::string_view to_string(Variant v) noexcept { return v == Variant::baseline ? "baseline" : "enhanced"; }

Variant parse_variant(std::string_view name) {
    if (name == "baseline") return Variant::baseline;
    if (name == "enhanced") return Variant::enhanced;
    throw ConfigError("unknown variant: " + std::string(name));
}

json PipelineConfig::to_json() const {
    json j = {
        {"corpus", corpus.string()},
        {"format", std::string(lexrag::to_string(format))},
        {"dataset_name", dataset_name},
        {"byte_offsets", byte_offsets},
        {"chunk",
         {{"target_tokens", chunk.target_tokens},
          {"overlap_tokens", chunk.overlap_tokens},
          {"separators", chunk.separators}}},
        {"variant", std::string(lexrag::to_string(variant))},
        {"enrich",
         {{"window", enrich.windows.window},
          {"stride", enrich.windows.stride},
          {"max_summary_tokens", enrich.windows.max_summary_tokens},
          {"max_in_flight", enrich.windows.max_in_flight},
          {"max_fraction", enrich.max_fraction},
          {"summaries", enrich.summaries}}},
        {"summarizer", {{"backend", summarizer.backend}, {"endpoint", endpoint_to_json(summarizer.endpoint)}}},
        {"embedder",
         {{"backend", embedder.backend},
          {"dim", embedder.dim},
          {"batch_size", embedder.batch_size},
          {"endpoint", endpoint_to_json(embedder.endpoint)}}},
        {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
        {"fusion", {{"alpha", fusion.alpha}, {"candidate_pool", fusion.candidate_pool}}},
        {"ks", ks},
        {"top", top},
        {"seed", seed},
        {"bootstrap_iterations", bootstrap_iterations},
        {"workers", workers},
        {"align",
         {{"shingle_size", align.shingle_size},
          {"min_score", align.min_score},
          {"max_window_slack", align.max_window_slack}}},
        {"split", {{"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
        {"prompt", prompt == PromptTemplate::with_refusal_instruction ? "with_refusal_instruction"
                                                                      : "without_refusal_instruction"},
        {"conversation_export", conversation_export},
        {"refusal", {{"mode", refusal.mode == RefusalMode::strict ? "strict" : "soft"},
                     {"soft_patterns", refusal.soft_patterns}}},
        {"out", out.string()},
    };
    j["manifest"] = manifest ? json(manifest->string()) : json(nullptr);
    j["dataset"] = dataset ? json(dataset->string()) : json(nullptr);
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    try {
        if (j.contains("corpus")) c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
        if (j.contains("manifest") && !j.at("manifest").is_null()) {
            c.manifest = resolve(base_dir, j.at("manifest").get<std::string>());
        }
        if (j.contains("dataset") && !j.at("dataset").is_null()) {
            c.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
        }
        if (j.contains("format")) c.format = parse_qa_format(j.at("format").get<std::string>());
        c.dataset_name = j.value("dataset_name", c.dataset_name);
        c.byte_offsets = j.value("byte_offsets", c.byte_offsets);
        if (j.contains("chunk")) {
            const auto& k = j.at("chunk");
            c.chunk.target_tokens = k.value("target_tokens", c.chunk.target_tokens);
            c.chunk.overlap_tokens = k.value("overlap_tokens", c.chunk.overlap_tokens);
            c.chunk.separators = k.value("separators", c.chunk.separators);
        }
        if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
        if (j.contains("enrich")) {
            const auto& e = j.at("enrich");
            c.enrich.windows.window = e.value("window", c.enrich.windows.window);
            c.enrich.windows.stride = e.value("stride", c.enrich.windows.stride);
            c.enrich.windows.max_summary_tokens = e.value("max_summary_tokens", c.enrich.windows.max_summary_tokens);
            c.enrich.windows.max_in_flight = e.value("max_in_flight", c.enrich.windows.max_in_flight);
            c.enrich.max_fraction = e.value("max_fraction", c.enrich.max_fraction);
            c.enrich.summaries = e.value("summaries", c.enrich.summaries);
        }
        if (j.contains("summarizer")) {
            const auto& s = j.at("summarizer");
            c.summarizer.backend = s.value("backend", c.summarizer.backend);
            if (s.contains("endpoint")) c.summarizer.endpoint = endpoint_from_json(s.at("endpoint"));
        }
        if (j.contains("embedder")) {
            const auto& e = j.at("embedder");
            c.embedder.backend = e.value("backend", c.embedder.backend);
            c.embedder.dim = e.value("dim", c.embedder.dim);
            c.embedder.batch_size = e.value("batch_size", c.embedder.batch_size);
            if (e.contains("endpoint")) c.embedder.endpoint = endpoint_from_json(e.at("endpoint"));
        }
        if (j.contains("bm25")) {
            c.bm25.k1 = j.at("bm25").value("k1", c.bm25.k1);
            c.bm25.b = j.at("bm25").value("b", c.bm25.b);
        }
        if (j.contains("fusion")) {
            c.fusion.alpha = j.at("fusion").value("alpha", c.fusion.alpha);
            c.fusion.candidate_pool = j.at("fusion").value("candidate_pool", c.fusion.candidate_pool);
        }
        c.ks = j.value("ks", c.ks);
        c.top = j.value("top", c.top);
        c.seed = j.value("seed", c.seed);
        c.bootstrap_iterations = j.value("bootstrap_iterations", c.bootstrap_iterations);
        c.workers = j.value("workers", c.workers);
        if (j.contains("align")) {
            const auto& a = j.at("align");
            c.align.shingle_size = a.value("shingle_size", c.align.shingle_size);
            c.align.min_score = a.value("min_score", c.align.min_score);
            c.align.max_window_slack = a.value("max_window_slack", c.align.max_window_slack);
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            c.split.train = s.value("train", c.split.train);
            c.split.validation = s.value("validation", c.split.validation);
            c.split.test = s.value("test", c.split.test);
        }
        if (j.contains("prompt")) c.prompt = parse_prompt_template(j.at("prompt").get<std::string>());
        c.conversation_export = j.value("conversation_export", c.conversation_export);
        if (j.contains("refusal")) {
            const auto& r = j.at("refusal");
            if (r.contains("mode")) c.refusal.mode = parse_refusal_mode(r.at("mode").get<std::string>());
            c.refusal.soft_patterns = r.value("soft_patterns", c.refusal.soft_patterns);
        }
        if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.split.seed = c.seed;
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void PipelineConfig::validate() const {
    chunk.validate();
    enrich.windows.validate();
    if (!(enrich.max_fraction > 0.0 && enrich.max_fraction < 1.0)) throw ConfigError("max_fraction must be in (0, 1)");
    FusionConfig f = fusion;
    f.k = std::max<std::size_t>(1, top);
    f.validate();
    align.validate();
    if (ks.empty()) throw ConfigError("ks must not be empty");
    for (auto k : ks) {
        if (k == 0) throw ConfigError("every k must be >= 1");
    }
    if (top == 0) throw ConfigError("top must be >= 1");
    if (workers == 0) throw ConfigError("workers must be >= 1");
    if (bootstrap_iterations == 0) throw ConfigError("bootstrap_iterations must be >= 1");
    if (!corpus.empty() && !fs::is_directory(corpus)) throw ConfigError("corpus directory not found: " + corpus.string());
    if (manifest && !fs::is_regular_file(*manifest)) throw ConfigError("manifest not found: " + manifest->string());
    if (dataset && !fs::is_regular_file(*dataset)) throw ConfigError("dataset not found: " + dataset->string());
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json().dump()); }

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& cfg) {
    if (cfg.backend == "deterministic" || cfg.backend == "deterministic-test") {
        return std::make_unique<HashingEmbedder>(cfg.dim);
    }
    if (cfg.backend == "remote") {
        if (cfg.endpoint.url.empty()) throw ConfigError("remote embedder needs embedder.endpoint.url");
        return std::make_unique<RemoteEmbedder>(cfg.endpoint, cfg.dim, cfg.batch_size);
    }
    throw ConfigError("unknown embedder backend: " + cfg.backend);
}

std::unique_ptr<SummarizerProvider> make_summarizer(const SummarizerConfig& cfg) {
    if (cfg.backend == "extractive") return std::make_unique<ExtractiveSummarizer>();
    if (cfg.backend == "remote") {
        if (cfg.endpoint.url.empty()) throw ConfigError("remote summarizer needs summarizer.endpoint.url");
        return std::make_unique<RemoteSummarizer>(cfg.endpoint);
    }
    throw ConfigError("unknown summarizer backend: " + cfg.backend);
}

ContextResult end_to_end_context(const RetrievalResult& result, const std::map<std::string, Chunk, std::less<>>& chunks,
                                 std::size_t n) {
    if (n == 0) throw ConfigError("context needs n >= 1");
    ContextResult out;
    const auto take = std::min(n, result.ranked.size());
    out.short_context = take < n;
    for (std::size_t i = 0; i < take; ++i) {
        const auto it = chunks.find(result.ranked[i].chunk_id);
        if (it == chunks.end()) throw FormatError("unknown chunk id " + result.ranked[i].chunk_id);
        if (i > 0) out.text += "\n\n";
        out.text += "[" + it->second.doc_id + "]\n" + it->second.text;
        out.chunk_ids.push_back(it->first);
    }
    return out;
}

RunManifest::RunManifest(std::string command, const PipelineConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}

void RunManifest::input(const fs::path& path) {
    if (fs::is_regular_file(path)) inputs_[path.string()] = "sha256:" + sha256_file(path);
}

void RunManifest::output(const fs::path& path) {
    if (fs::is_regular_file(path)) outputs_[path.string()] = "sha256:" + sha256_file(path);
}

void RunManifest::write() const {
    const json j = {{"command", command_},      {"version", kVersion},   {"config_hash", "sha256:" + cfg_.hash()},
                    {"config", cfg_.to_json()}, {"inputs", inputs_},     {"outputs", outputs_},
                    {"created_at", now_utc()}};
    write_text_file(cfg_.out / "manifests" / (command_ + ".json"), pretty(j));
}

DocumentCollection load_corpus(const PipelineConfig& cfg) {
    if (cfg.corpus.empty()) throw ConfigError("no corpus directory configured");
    return load_documents(cfg.corpus, cfg.manifest).collection;
}

std::vector<QueryRecord> load_run_records(const RunPaths& paths) {
    const auto path = fs::exists(paths.aligned_records()) ? paths.aligned_records() : paths.records();
    std::vector<QueryRecord> records;
    for (const auto& j : parse_jsonl(read_text_file(path))) records.push_back(record_from_json(j));
    return records;
}

json run_ingest(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("ingest", cfg);
    // Self-contained datasets (records carry their own context) need no corpus.
    if (cfg.corpus.empty() && !(cfg.dataset && cfg.format == QaFormat::aus_legal_qa)) {
        throw ConfigError("no corpus directory configured");
    }
    LoadResult loaded;
    if (!cfg.corpus.empty()) loaded = load_documents(cfg.corpus, cfg.manifest);
    if (cfg.manifest) manifest.input(*cfg.manifest);

    json load_errors = json::array();
    for (const auto& e : loaded.errors) load_errors.push_back({{"path", e.path}, {"message", e.message}});
    json report = {{"documents", loaded.collection.size()}, {"load_errors", std::move(load_errors)}};

    std::vector<QueryRecord> records;
    if (cfg.dataset) {
        manifest.input(*cfg.dataset);
        auto qa = load_qa_dataset(*cfg.dataset, cfg.format);
        records = std::move(qa.records);
        json record_errors = json::array();
        for (const auto& e : qa.errors) record_errors.push_back({{"index", e.index}, {"message", e.message}});

        std::size_t unresolved = 0;
        if (cfg.format == QaFormat::aus_legal_qa) unresolved = resolve_source_documents(records, loaded.collection);
        json rebase_errors = json::array();
        if (cfg.byte_offsets) {
            for (const auto& e : rebase_byte_spans(records, loaded.collection)) {
                rebase_errors.push_back({{"index", e.index}, {"message", e.message}});
            }
        }

        std::size_t spans = 0;
        std::set<std::string> referenced;
        for (const auto& r : records) {
            spans += r.gold_spans.size();
            for (const auto& g : r.gold_spans) referenced.insert(g.doc_id);
            if (r.source_doc_id) referenced.insert(*r.source_doc_id);
        }
        json ds = {{"name", cfg.dataset_name},
                   {"format", std::string(to_string(cfg.format))},
                   {"queries", records.size()},
                   {"spans", spans},
                   {"referenced_documents", referenced.size()},
                   {"record_errors", std::move(record_errors)},
                   {"unresolved_sources", unresolved},
                   {"rebase_errors", std::move(rebase_errors)}};
        if (cfg.format == QaFormat::snippet_qa) {
            const auto v = validate_annotations(records, loaded.collection);
            json findings = json::array();
            std::size_t casefold_only = 0;
            for (const auto& f : v.findings) {
                casefold_only += (f.kind == FindingKind::text_mismatch && f.casefold_match) ? 1 : 0;
                findings.push_back({{"record_index", f.record_index},
                                    {"query_id", f.query_id},
                                    {"span_index", f.span_index},
                                    {"kind", std::string(to_string(f.kind))},
                                    {"doc_id", f.doc_id},
                                    {"raw_match", f.raw_match},
                                    {"normalized_match", f.normalized_match},
                                    {"casefold_match", f.casefold_match},
                                    {"message", f.message}});
            }
            ds["validation"] = {{"records", v.records},
                                {"spans", v.spans},
                                {"clean_records", v.clean_records},
                                {"findings", v.findings.size()},
                                {"casefold_only_mismatches", casefold_only},
                                {"details", std::move(findings)}};
        }
        report["dataset"] = std::move(ds);
    }

    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(paths.records(), rows, manifest);
    // A fresh ingest invalidates earlier alignment output.
    fs::remove(paths.aligned_records());
    write_json(paths.ingest_report(), report, manifest);
    manifest.write();
    return report;
}

json run_chunk(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("chunk", cfg);
    const auto docs = load_corpus(cfg);
    const auto chunks = split_collection(docs, cfg.chunk, cfg.workers);
    std::vector<json> rows;
    std::size_t hard = 0;
    for (const auto& c : chunks) {
        rows.push_back(to_json(c));
        hard += c.hard_split ? 1 : 0;
    }
    write_jsonl(paths.chunks(), rows, manifest);
    manifest.write();
    return {{"documents", docs.size()}, {"chunks", chunks.size()}, {"hard_splits", hard}};
}

json run_enrich(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("enrich", cfg);
    const auto chunks = read_chunks(paths, manifest);
    std::vector<json> rows;
    std::vector<json> summary_rows;
    json report = {{"variant", std::string(to_string(cfg.variant))}, {"chunks", chunks.size()}};
    if (cfg.variant == Variant::baseline) {
        for (const auto& c : chunks) rows.push_back(to_json(plain_chunk(c)));
        report["windows"] = 0;
        report["fallback_windows"] = 0;
        report["max_metadata_fraction"] = 0.0;
    } else {
        const auto docs = load_corpus(cfg);
        const auto provider = make_summarizer(cfg.summarizer);
        const auto res = enrich_collection(chunks, docs, *provider, cfg.enrich);
        double max_fraction = 0.0;
        for (const auto& e : res.chunks) {
            rows.push_back(to_json(e));
            max_fraction = std::max(max_fraction, e.metadata_fraction);
        }
        for (const auto& w : res.summaries) summary_rows.push_back(to_json(w));
        report["summarizer"] = provider->name();
        report["windows"] = res.summaries.size();
        report["fallback_windows"] = res.fallback_windows;
        report["max_metadata_fraction"] = max_fraction;
    }
    write_jsonl(paths.enriched(), rows, manifest);
    write_jsonl(paths.summaries(), summary_rows, manifest);
    write_json(paths.enrich_report(), report, manifest);
    manifest.write();
    return report;
}

json run_index(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("index", cfg);
    std::vector<IndexedText> texts;
    for (const auto& j : read_jsonl(paths.enriched(), manifest)) {
        const auto e = enriched_from_json(j);
        texts.push_back({e.base.chunk_id, e.full_text});
    }
    const auto sparse = build_sparse(texts, cfg.bm25);
    const auto embedder = make_embedder(cfg.embedder);
    const auto dense = build_dense(texts, *embedder, cfg.workers);
    save_sparse(sparse, paths.sparse_index());
    save_dense(dense, paths.dense_index());
    manifest.output(paths.sparse_index());
    manifest.output(paths.dense_index());
    manifest.write();
    return {{"chunks", texts.size()}, {"terms", sparse.all_postings().size()}, {"dim", dense.dim()},
            {"backend", dense.backend()}};
}

json run_retrieve(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("retrieve", cfg);
    const auto records = read_records(paths, manifest);
    const auto results = retrieve_all(cfg, records, paths, manifest);

    std::map<std::string, Chunk, std::less<>> by_id;
    for (auto& c : read_chunks(paths, manifest)) {
        auto id = c.chunk_id;
        by_id.emplace(std::move(id), std::move(c));
    }
    std::vector<json> rows;
    std::vector<json> contexts;
    std::size_t short_contexts = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        rows.push_back(to_json(results[i]));
        const auto ctx = end_to_end_context(results[i], by_id, cfg.top);
        short_contexts += ctx.short_context ? 1 : 0;
        contexts.push_back({{"query_id", records[i].query_id},
                            {"question", records[i].question},
                            {"context", ctx.text},
                            {"chunk_ids", ctx.chunk_ids},
                            {"short_context", ctx.short_context}});
    }
    write_jsonl(paths.retrieval(), rows, manifest);
    write_jsonl(paths.contexts(), contexts, manifest);
    manifest.write();
    return {{"queries", results.size()}, {"k", max_k(cfg)}, {"top", cfg.top}, {"short_contexts", short_contexts}};
}

json run_eval_retrieval(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("eval-retrieval", cfg);
    const auto records = read_records(paths, manifest);
    const auto chunks = read_chunks(paths, manifest);

    const std::size_t need = *std::max_element(cfg.ks.begin(), cfg.ks.end());
    std::vector<RetrievalResult> results;
    bool usable = fs::exists(paths.retrieval());
    if (usable) {
        for (const auto& j : read_jsonl(paths.retrieval(), manifest)) results.push_back(retrieval_from_json(j));
        usable = std::all_of(results.begin(), results.end(), [&](const RetrievalResult& r) { return r.k >= need; });
    }
    if (!usable) results = retrieve_all(cfg, records, paths, manifest);

    SweepOptions opts;
    opts.dataset = cfg.dataset_name;
    opts.variant = std::string(to_string(cfg.variant));
    opts.ks = cfg.ks;
    opts.bootstrap_iterations = cfg.bootstrap_iterations;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    const auto report = sweep_results(records, results, ChunkTable(chunks), opts);
    write_json(paths.metrics(), to_json(report), manifest);
    write_text_file(paths.metrics_table(), render_metric_table(report));
    manifest.output(paths.metrics_table());
    manifest.write();

    json summary = {{"queries", report.per_query.size()}, {"excluded", report.excluded.size()}};
    for (const auto& [k, m] : report.per_k) {
        summary["per_k"][std::to_string(k)] = {{"drm", m.drm.mean}, {"span_recall", m.span_recall.mean}};
    }
    return summary;
}

json run_align_spans(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("align-spans", cfg);
    std::vector<QueryRecord> records;
    for (const auto& j : read_jsonl(paths.records(), manifest)) records.push_back(record_from_json(j));
    const auto docs = load_corpus(cfg);
    const auto res = reconstruct_dataset(records, docs, cfg.align, cfg.workers);

    std::vector<json> rows;
    for (const auto& r : res.records) rows.push_back(to_json(r));
    write_jsonl(paths.aligned_records(), rows, manifest);
    write_json(paths.aligned_dataset(), to_snippet_qa(res.records), manifest);
    write_json(paths.alignment_report(), to_json(res.report), manifest);
    manifest.write();
    return {{"records", records.size()}, {"aligned", res.report.aligned}, {"failed", res.report.failed}};
}

json run_dpo_build(const PipelineConfig& cfg) {
    cfg.validate();
    const RunPaths paths{cfg.out};
    RunManifest manifest("dpo-build", cfg);
    std::vector<QueryRecord> records;
    for (const auto& j : read_jsonl(paths.records(), manifest)) records.push_back(record_from_json(j));

    SplitSpec spec = cfg.split;
    spec.seed = cfg.seed;
    const auto splits = split_dataset(records, spec);
    auto ids = [](const std::vector<QueryRecord>& v) {
        std::vector<std::string> out;
        for (const auto& r : v) out.push_back(r.query_id);
        return out;
    };
    write_json(paths.splits(),
               {{"seed", spec.seed},
                {"train", ids(splits.train)},
                {"validation", ids(splits.validation)},
                {"test", ids(splits.test)}},
               manifest);

    const auto pairs = build_preference_pairs(splits.train, cfg.seed, cfg.prompt);
    std::vector<json> rows;
    std::size_t set1 = 0;
    std::size_t set2 = 0;
    for (const auto& p : pairs) {
        rows.push_back(cfg.conversation_export ? to_conversation_json(p) : to_json(p));
        (p.set_tag == SetTag::set1_correct_context ? set1 : set2) += 1;
    }
    write_jsonl(paths.pairs(), rows, manifest);

    // Evaluation prompts for the test split use the same construction.
    std::vector<json> test_rows;
    if (!splits.test.empty()) {
        for (const auto& p : build_preference_pairs(splits.test, derive_seed(cfg.seed, 1), cfg.prompt)) {
            test_rows.push_back(to_json(p));
        }
    }
    write_jsonl(cfg.out / "test_pairs.jsonl", test_rows, manifest);

    const json report = {{"records", records.size()},
                         {"train", splits.train.size()},
                         {"validation", splits.validation.size()},
                         {"test", splits.test.size()},
                         {"pairs", pairs.size()},
                         {"set1_pairs", set1},
                         {"set2_pairs", set2},
                         {"test_pairs", test_rows.size()},
                         {"export", cfg.conversation_export ? "conversation" : "prompt_chosen_rejected"}};
    write_json(paths.dpo_report(), report, manifest);
    manifest.write();
    return report;
}

json run_eval_refusal(const PipelineConfig& cfg, const fs::path& outputs) {
    const RunPaths paths{cfg.out};
    RunManifest manifest("eval-refusal", cfg);
    if (!fs::exists(outputs)) throw IoError(outputs.string() + " does not exist");
    manifest.input(outputs);
    const auto rows = parse_model_outputs(read_text_file(outputs));
    RefusalConfig strict = cfg.refusal;
    strict.mode = RefusalMode::strict;
    RefusalConfig soft = cfg.refusal;
    soft.mode = RefusalMode::soft;
    const json report = {{"outputs", rows.size()},
                         {"strict", to_json(refusal_rates(rows, strict))},
                         {"soft", to_json(refusal_rates(rows, soft))},
                         {"primary_mode", cfg.refusal.mode == RefusalMode::strict ? "strict" : "soft"}};
    write_json(paths.refusal_report(), report, manifest);
    manifest.write();
    return report;
}

json run_eval_answers(const PipelineConfig& cfg, const AnswerEvalInputs& inputs) {
    const RunPaths paths{cfg.out};
    RunManifest manifest("eval-answers", cfg);
    const auto preds_a = read_keyed_jsonl(inputs.predictions_a, "prediction", manifest);
    const auto preds_b = read_keyed_jsonl(inputs.predictions_b, "prediction", manifest);
    std::map<std::string, std::string> refs;
    if (inputs.references) {
        refs = read_keyed_jsonl(*inputs.references, "reference", manifest);
    } else {
        for (const auto& r : read_records(paths, manifest)) refs[r.query_id] = r.gold_answer;
    }

    std::vector<ScoredAnswer> a;
    std::vector<ScoredAnswer> b;
    json per_query = json::object();
    for (const auto& [id, pred] : preds_a) {
        const auto ref = refs.find(id);
        if (ref == refs.end()) throw FormatError("no reference answer for query " + id);
        a.push_back({id, token_f1(pred, ref->second)});
        const auto other = preds_b.find(id);
        if (other != preds_b.end()) {
            b.push_back({id, token_f1(other->second, ref->second)});
            per_query[id] = {{"a", a.back().score}, {"b", b.back().score}};
        }
    }
    if (b.size() != preds_b.size() || a.size() != b.size()) {
        throw FormatError("prediction files cover different query ids");
    }
    const auto d = mean_score_with_delta_ci(a, b, cfg.bootstrap_iterations, cfg.seed);
    const json report = {{"metric", "token_f1"},
                         {"n", d.n},
                         {"mean_a", d.mean_a},
                         {"mean_b", d.mean_b},
                         {"delta", d.delta},
                         {"delta_ci", {d.delta_lo, d.delta_hi}},
                         {"bootstrap_iterations", cfg.bootstrap_iterations},
                         {"per_query", std::move(per_query)}};
    write_json(paths.answers_report(), report, manifest);
    manifest.write();
    return report;
}

json run_compare(const PipelineConfig& cfg, const fs::path& baseline_run, const fs::path& enhanced_run) {
    const RunPaths paths{cfg.out};
    RunManifest manifest("compare", cfg);
    auto load = [&](const fs::path& run) {
        const auto p = RunPaths{run}.metrics();
        if (!fs::exists(p)) throw IoError(p.string() + " does not exist; run eval-retrieval there first");
        manifest.input(p);
        try {
            return metric_report_from_json(json::parse(read_text_file(p)));
        } catch (const json::exception& e) {
            throw FormatError("cannot parse " + p.string() + ": " + e.what());
        }
    };
    const auto base = load(baseline_run);
    const auto enh = load(enhanced_run);
    CompareOptions opts;
    opts.bootstrap_iterations = cfg.bootstrap_iterations;
    opts.seed = cfg.seed;
    opts.workers = cfg.workers;
    const auto comps = compare_reports(base, enh, opts);
    const auto m = comparison_count(base, enh);
    json rows = json::array();
    for (const auto& c : comps) rows.push_back(to_json(c));
    std::size_t shared = 0;
    for (const auto& [id, _] : base.per_query) shared += enh.per_query.count(id);
    const json report = {{"dataset", base.dataset},
                         {"bonferroni_m", m},
                         {"shared_queries", shared},
                         {"comparisons", std::move(rows)}};
    fs::create_directories(cfg.out);
    write_json(paths.comparison(), report, manifest);
    write_text_file(paths.comparison_table(), render_comparison_table(comps, m));
    manifest.output(paths.comparison_table());
    manifest.write();
    return report;
}

json run_report(const PipelineConfig& cfg) {
    const RunPaths paths{cfg.out};
    RunManifest manifest("report", cfg);
    std::ostringstream out;
    std::vector<std::string> sections;
    auto section = [&](const std::string& name, const std::string& body) {
        out << "== " << name << " ==\n" << body << "\n";
        sections.push_back(name);
    };
    auto read_json = [&](const fs::path& p) {
        manifest.input(p);
        return json::parse(read_text_file(p));
    };
    if (fs::exists(paths.ingest_report())) {
        const auto j = read_json(paths.ingest_report());
        std::ostringstream s;
        s << "documents: " << j.at("documents") << "\n";
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            s << "queries: " << d.at("queries") << "\nspans: " << d.at("spans")
              << "\nreferenced documents: " << d.at("referenced_documents") << "\n";
        }
        section("ingest", s.str());
    }
    if (fs::exists(paths.metrics_table())) {
        manifest.input(paths.metrics_table());
        section("retrieval", read_text_file(paths.metrics_table()));
    }
    if (fs::exists(paths.comparison_table())) {
        manifest.input(paths.comparison_table());
        section("comparison", read_text_file(paths.comparison_table()));
    }
    if (fs::exists(paths.alignment_report())) {
        const auto j = read_json(paths.alignment_report());
        section("alignment", "aligned: " + j.at("aligned").dump() + "\nfailed: " + j.at("failed").dump() + "\n");
    }
    if (fs::exists(paths.dpo_report())) {
        const auto j = read_json(paths.dpo_report());
        section("preference pairs", "train/validation/test: " + j.at("train").dump() + "/" +
                                        j.at("validation").dump() + "/" + j.at("test").dump() +
                                        "\npairs: " + j.at("pairs").dump() + "\n");
    }
    if (fs::exists(paths.refusal_report())) {
        const auto j = read_json(paths.refusal_report());
        std::ostringstream s;
        for (const char* mode : {"strict", "soft"}) {
            s << mode << ": set1 " << j.at(mode).at("set1").at("rate_display").get<std::string>() << "%, set2 "
              << j.at(mode).at("set2").at("rate_display").get<std::string>() << "%\n";
        }
        section("refusal", s.str());
    }
    if (fs::exists(paths.answers_report())) {
        const auto j = read_json(paths.answers_report());
        char buf[160];
        std::snprintf(buf, sizeof buf, "token F1: a %.4f, b %.4f, delta %.4f (%.4f to %.4f)\n",
                      j.at("mean_a").get<double>(), j.at("mean_b").get<double>(), j.at("delta").get<double>(),
                      j.at("delta_ci").at(0).get<double>(), j.at("delta_ci").at(1).get<double>());
        section("answers", buf);
    }
    if (sections.empty()) throw IoError("no reports found in " + cfg.out.string());
    write_text_file(paths.report(), out.str());
    manifest.output(paths.report());
    manifest.write();
    return {{"sections", sections}};
}

} // namespace lexrag
