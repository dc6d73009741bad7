#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "lexrag/error.hpp"
#include "lexrag/pipeline.hpp"
#include "lexrag/random.hpp"
#include "synthetic.hpp"

namespace lexrag {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << s;
}

TEST(Config, RoundTripAndRelativePaths) {
    const auto dir = testing::temp_dir("cfg");
    fs::create_directories(dir / "corpus");
    spit(dir / "ds.json", "[]");
    spit(dir / "run.json", json{{"corpus", "corpus"},
                                {"dataset", "ds.json"},
                                {"chunk", {{"target_tokens", 100}, {"overlap_tokens", 10}}},
                                {"fusion", {{"alpha", 0.5}}},
                                {"ks", {1, 3}},
                                {"seed", 9},
                                {"refusal", {{"mode", "soft"}}},
                                {"out", "out"}}
                               .dump());
    const auto cfg = PipelineConfig::load(dir / "run.json");
    EXPECT_EQ(cfg.corpus, dir / "corpus");
    EXPECT_EQ(*cfg.dataset, dir / "ds.json");
    EXPECT_EQ(cfg.out, dir / "out");
    EXPECT_EQ(cfg.chunk.target_tokens, 100u);
    EXPECT_EQ(cfg.fusion.alpha, 0.5);
    EXPECT_EQ(cfg.ks, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(cfg.split.seed, 9u);
    EXPECT_EQ(cfg.refusal.mode, RefusalMode::soft);
    EXPECT_NO_THROW(cfg.validate());

    const auto back = PipelineConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.to_json(), cfg.to_json());
    EXPECT_EQ(back.hash(), cfg.hash());
    auto changed = cfg;
    changed.fusion.alpha = 0.6;
    EXPECT_NE(changed.hash(), cfg.hash());
}

TEST(Config, Errors) {
    EXPECT_THROW(PipelineConfig::from_json(json::array()), ConfigError);
    EXPECT_THROW(PipelineConfig::from_json(json{{"ks", "many"}}), ConfigError);
    EXPECT_THROW(PipelineConfig::from_json(json{{"variant", "deluxe"}}), ConfigError);
    PipelineConfig c;
    c.ks = {};
    EXPECT_THROW(c.validate(), ConfigError);
    c = PipelineConfig{};
    c.fusion.alpha = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = PipelineConfig{};
    c.corpus = "/definitely/not/here";
    EXPECT_THROW(c.validate(), ConfigError);
    const auto dir = testing::temp_dir("cfg_bad");
    spit(dir / "bad.json", "{oops");
    EXPECT_THROW(PipelineConfig::load(dir / "bad.json"), ConfigError);
}

TEST(Context, TopChunksInRankOrder) {
    std::map<std::string, Chunk, std::less<>> chunks;
    chunks["a#000000"] = Chunk{"a#000000", "a", 0, 5, "alpha", 0, false};
    chunks["b#000000"] = Chunk{"b#000000", "b", 0, 4, "beta", 0, false};
    RetrievalResult r;
    r.query_id = "q";
    RankedChunk b;
    b.chunk_id = "b#000000";
    b.ref = 1;
    RankedChunk a;
    a.chunk_id = "a#000000";
    r.ranked = {b, a};
    r.k = 2;
    const auto one = end_to_end_context(r, chunks, 1);
    EXPECT_EQ(one.text, "[b]\nbeta");
    EXPECT_FALSE(one.short_context);
    const auto two = end_to_end_context(r, chunks, 2);
    EXPECT_EQ(two.text, "[b]\nbeta\n\n[a]\nalpha");
    EXPECT_EQ(two.chunk_ids, (std::vector<std::string>{"b#000000", "a#000000"}));
    const auto more = end_to_end_context(r, chunks, 4);
    EXPECT_TRUE(more.short_context);
    EXPECT_EQ(more.chunk_ids.size(), 2u);
}

PipelineConfig synthetic_run(const fs::path& dir, Variant variant) {
    const auto c = testing::near_duplicate_case();
    testing::write_corpus(c.docs, dir / "corpus", dir / "manifest.json");
    testing::write_snippet_qa(c.records, dir / "dataset.json");
    PipelineConfig cfg;
    cfg.corpus = dir / "corpus";
    cfg.manifest = dir / "manifest.json";
    cfg.dataset = dir / "dataset.json";
    cfg.chunk.target_tokens = 64;
    cfg.chunk.overlap_tokens = 16;
    cfg.variant = variant;
    cfg.ks = {1, 2, 4};
    cfg.bootstrap_iterations = 200;
    cfg.seed = 3;
    cfg.out = dir / (variant == Variant::baseline ? "base" : "enh");
    return cfg;
}

TEST(Pipeline, RetrievalStagesEndToEnd) {
    const auto dir = testing::temp_dir("pipe");
    auto base = synthetic_run(dir, Variant::baseline);
    auto enh = synthetic_run(dir, Variant::enhanced);
    for (auto* cfg : {&base, &enh}) {
        const auto ingest = run_ingest(*cfg);
        EXPECT_EQ(ingest.at("documents"), 12);
        EXPECT_EQ(ingest.at("dataset").at("queries"), 72);
        EXPECT_EQ(ingest.at("dataset").at("validation").at("findings"), 0);
        EXPECT_GT(run_chunk(*cfg).at("chunks").get<int>(), 12);
        run_enrich(*cfg);
        EXPECT_EQ(run_index(*cfg).at("dim"), 256);
        EXPECT_EQ(run_retrieve(*cfg).at("queries"), 72);
        const auto m = run_eval_retrieval(*cfg);
        EXPECT_EQ(m.at("queries"), 72);
        EXPECT_TRUE(m.at("per_k").contains("4"));
        for (const char* f : {"chunks.jsonl", "enriched.jsonl", "sparse.idx", "dense.idx", "retrieval.jsonl",
                              "contexts.jsonl", "metrics.json", "metrics.txt", "manifests/ingest.json",
                              "manifests/eval-retrieval.json"}) {
            EXPECT_TRUE(fs::exists(cfg->out / f)) << f;
        }
    }
    const auto manifest = json::parse(slurp(enh.out / "manifests" / "index.json"));
    EXPECT_EQ(manifest.at("config_hash"), "sha256:" + enh.hash());
    EXPECT_TRUE(manifest.at("outputs").contains((enh.out / "dense.idx").string()));

    // Metadata headers separate the near-duplicate statutes.
    const auto eb = run_eval_retrieval(base).at("per_k").at("2").at("drm").get<double>();
    const auto ee = run_eval_retrieval(enh).at("per_k").at("2").at("drm").get<double>();
    EXPECT_LT(ee, eb);

    auto cmp = enh;
    cmp.out = dir / "cmp";
    const auto c = run_compare(cmp, base.out, enh.out);
    EXPECT_EQ(c.at("bonferroni_m"), 6);
    EXPECT_EQ(c.at("shared_queries"), 72);
    EXPECT_TRUE(fs::exists(cmp.out / "comparison.txt"));

    const auto r = run_report(enh);
    EXPECT_EQ(r.at("sections").at(0), "ingest");
    EXPECT_NE(slurp(enh.out / "report.txt").find("== retrieval =="), std::string::npos);

    // An index built with another embedder is rejected.
    auto other = enh;
    other.embedder.dim = 64;
    EXPECT_THROW(run_retrieve(other), Error);
}

TEST(Pipeline, MissingArtifactIsIoError) {
    const auto dir = testing::temp_dir("pipe_missing");
    auto cfg = synthetic_run(dir, Variant::enhanced);
    EXPECT_THROW(run_index(cfg), IoError);
    EXPECT_THROW(run_report(cfg), IoError);
}

TEST(Pipeline, AlignAndPreferencePairs) {
    const auto dir = testing::temp_dir("pipe_aus");
    const auto s = testing::write_aus_stand_in(dir, 40, 8, 5);
    PipelineConfig cfg;
    cfg.corpus = s.corpus;
    cfg.manifest = s.manifest;
    cfg.dataset = s.dataset;
    cfg.format = QaFormat::aus_legal_qa;
    cfg.split = {30, 4, 6, 0};
    cfg.seed = 8;
    cfg.out = dir / "run";
    const auto ingest = run_ingest(cfg);
    EXPECT_EQ(ingest.at("dataset").at("queries"), 40);
    EXPECT_EQ(ingest.at("dataset").at("unresolved_sources"), 0);

    const auto a = run_align_spans(cfg);
    EXPECT_EQ(a.at("aligned"), 40);
    const auto aligned = load_run_records(RunPaths{cfg.out});
    ASSERT_EQ(aligned.size(), 40u);
    EXPECT_EQ(aligned[0].gold_spans.size(), 1u);

    const auto d = run_dpo_build(cfg);
    EXPECT_EQ(d.at("train"), 30);
    EXPECT_EQ(d.at("pairs"), 60);
    EXPECT_EQ(d.at("set2_pairs"), 30);
    EXPECT_EQ(d.at("test_pairs"), 12);
    const auto first = slurp(cfg.out / "preference_pairs.jsonl");
    run_dpo_build(cfg);
    EXPECT_EQ(slurp(cfg.out / "preference_pairs.jsonl"), first);

    cfg.split = {100, 0, 0, 0};
    EXPECT_THROW(run_dpo_build(cfg), ConfigError);
}

TEST(Pipeline, RefusalAndAnswerEvaluation) {
    const auto dir = testing::temp_dir("pipe_eval");
    PipelineConfig cfg;
    cfg.out = dir / "run";
    cfg.bootstrap_iterations = 100;
    spit(dir / "outputs.jsonl",
         "{\"query_id\":\"a\",\"set_tag\":\"set2\",\"output\":\"Given context is not sufficient to answer.\"}\n"
         "{\"query_id\":\"b\",\"set_tag\":\"set2\",\"output\":\"The context does not provide it.\"}\n"
         "{\"query_id\":\"c\",\"set_tag\":\"set1\",\"output\":\"Fourteen days.\"}\n");
    const auto r = run_eval_refusal(cfg, dir / "outputs.jsonl");
    EXPECT_EQ(r.at("strict").at("set2").at("rate_display"), "50.0");
    EXPECT_EQ(r.at("soft").at("set2").at("rate_display"), "100.0");
    EXPECT_EQ(r.at("strict").at("set1").at("rate_display"), "0.0");
    EXPECT_THROW(run_eval_refusal(cfg, dir / "none.jsonl"), IoError);

    spit(dir / "a.jsonl", "{\"query_id\":\"x\",\"prediction\":\"a b\"}\n{\"query_id\":\"y\",\"prediction\":\"q\"}\n");
    spit(dir / "b.jsonl", "{\"query_id\":\"y\",\"prediction\":\"q\"}\n{\"query_id\":\"x\",\"prediction\":\"b c\"}\n");
    spit(dir / "refs.jsonl", "{\"query_id\":\"x\",\"reference\":\"b c\"}\n{\"query_id\":\"y\",\"reference\":\"q\"}\n");
    const auto ans = run_eval_answers(cfg, {dir / "a.jsonl", dir / "b.jsonl", dir / "refs.jsonl"});
    EXPECT_EQ(ans.at("n"), 2);
    EXPECT_DOUBLE_EQ(ans.at("mean_a").get<double>(), 0.75);
    EXPECT_DOUBLE_EQ(ans.at("mean_b").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(ans.at("delta").get<double>(), 0.25);

    spit(dir / "short.jsonl", "{\"query_id\":\"x\",\"prediction\":\"a\"}\n");
    EXPECT_THROW(run_eval_answers(cfg, {dir / "a.jsonl", dir / "short.jsonl", dir / "refs.jsonl"}), FormatError);
    const auto rep = run_report(cfg);
    EXPECT_EQ(rep.at("sections").size(), 2u);
}

} // namespace
} // namespace lexrag
