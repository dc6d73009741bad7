#include <gtest/gtest.h>

#include <atomic>

#include "lexrag/enricher.hpp"
#include "lexrag/error.hpp"
#include "lexrag/text.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace lexrag {
namespace {

std::vector<Chunk> chunks_of(const std::string& doc_id, std::size_t n) {
    std::vector<Chunk> out;
    for (std::size_t i = 0; i < n; ++i) {
        Chunk c;
        c.doc_id = doc_id;
        c.chunk_id = make_chunk_id(doc_id, i);
        c.ordinal = i;
        c.text = "Chunk " + std::to_string(i) + " opens here. It then closes.";
        out.push_back(c);
    }
    return out;
}

class ThrowingSummarizer final : public SummarizerProvider {
public:
    std::string summarize(const std::vector<std::string>&, std::size_t) const override {
        throw ProviderError("unavailable");
    }
    std::string name() const override { return "throwing"; }
};

class FixedSummarizer final : public SummarizerProvider {
public:
    explicit FixedSummarizer(std::string s) : s_(std::move(s)) {}
    std::string summarize(const std::vector<std::string>&, std::size_t) const override { return s_; }
    std::string name() const override { return "fixed"; }

private:
    std::string s_;
};

TEST(Windows, StartsCoverTail) {
    EXPECT_EQ(window_starts(10, 4, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(window_starts(10, 4, 3), (std::vector<std::size_t>{0, 3, 6}));
    EXPECT_EQ(window_starts(10, 4, 4), (std::vector<std::size_t>{0, 4, 6}));
    EXPECT_EQ(window_starts(3, 4, 1), (std::vector<std::size_t>{0}));
    EXPECT_TRUE(window_starts(0, 4, 1).empty());
}

TEST(Windows, NearestCenterPrefersEarlierOnTie) {
    std::vector<WindowSummary> w(2);
    w[0].window_start_ordinal = 0;
    w[0].window_len = 4; // center 1.5
    w[1].window_start_ordinal = 1;
    w[1].window_len = 4; // center 2.5
    EXPECT_EQ(nearest_window(w, 0), 0u);
    EXPECT_EQ(nearest_window(w, 2), 0u);
    EXPECT_EQ(nearest_window(w, 3), 1u);
}

TEST(Extractive, RoundRobinAndBudget) {
    const std::vector<std::string> texts{"A one. A two.", "B one! B two?"};
    EXPECT_EQ(extractive_fallback_summary(texts, 100), "A one. B one! A two. B two?");
    EXPECT_EQ(extractive_fallback_summary(texts, 3), "A one. B");
    EXPECT_THROW(extractive_fallback_summary(texts, 0), ConfigError);
}

TEST(Windows, ProviderFailureFallsBackPerWindow) {
    const auto chunks = chunks_of("d", 6);
    WindowConfig cfg;
    cfg.max_summary_tokens = 5;
    const auto s = window_summaries(chunks, ThrowingSummarizer{}, cfg);
    ASSERT_EQ(s.windows.size(), 3u);
    for (const auto& w : s.windows) {
        EXPECT_TRUE(w.fallback);
        EXPECT_LE(w.token_count, 5u);
        EXPECT_EQ(w.token_count, count_tokens(w.summary_text));
    }
    EXPECT_EQ(s.assignment, (std::vector<std::size_t>{0, 0, 0, 1, 2, 2}));
}

TEST(Windows, EmptyProviderOutputFallsBack) {
    const auto s = window_summaries(chunks_of("d", 2), FixedSummarizer("   "), WindowConfig{});
    ASSERT_EQ(s.windows.size(), 1u);
    EXPECT_TRUE(s.windows[0].fallback);
    EXPECT_FALSE(s.windows[0].summary_text.empty());
}

TEST(Windows, LongProviderOutputIsTruncated) {
    WindowConfig cfg;
    cfg.max_summary_tokens = 3;
    const auto s = window_summaries(chunks_of("d", 1), FixedSummarizer("w1 w2 w3 w4 w5"), cfg);
    EXPECT_EQ(s.windows[0].summary_text, "w1 w2 w3");
    EXPECT_FALSE(s.windows[0].fallback);
}

TEST(Header, FieldsInOrderAndEmptyOmitted) {
    DocumentMeta m;
    m.title = "  Fair  Work Act ";
    m.doc_type = "statute";
    EXPECT_EQ(build_header(m, "short summary"), "[DOC] Fair Work Act | statute [SUMMARY] short summary");
    EXPECT_EQ(build_header(DocumentMeta{}, ""), "");
    EXPECT_EQ(build_header(DocumentMeta{}, "s"), "[SUMMARY] s");
}

TEST(Enrich, HeaderBudgetHoldsAndFullTextPrefixesHeader) {
    Chunk c;
    c.text = "t1 t2 t3 t4 t5 t6 t7 t8 t9";
    DocumentMeta m;
    m.title = "Title words here";
    m.jurisdiction = "NSW";
    const auto e = enrich_chunk(c, m, "one two three four five", 0.25);
    // 9 body tokens allow h with h * 0.75 <= 2.25, so h = 3.
    EXPECT_EQ(e.header_text, "[DOC] Title words");
    EXPECT_EQ(e.full_text, "[DOC] Title words\n" + c.text);
    EXPECT_DOUBLE_EQ(e.metadata_fraction, 3.0 / 12.0);
}

TEST(Enrich, DropsDanglingMarkers) {
    Chunk c;
    c.text = "a b c d e f g h i j k l";
    DocumentMeta m;
    m.title = "T";
    const auto e = enrich_chunk(c, m, "summary words", 0.25); // limit 4
    EXPECT_EQ(e.header_text, "[DOC] T [SUMMARY] summary");
    Chunk tiny;
    tiny.text = "a b c";
    const auto e2 = enrich_chunk(tiny, m, "s", 0.25); // limit 1
    EXPECT_EQ(e2.header_text, "");
    EXPECT_EQ(e2.full_text, "a b c");
    const auto e3 = enrich_chunk(c, DocumentMeta{}, "", 0.25);
    EXPECT_EQ(e3.full_text, c.text);
    EXPECT_THROW(enrich_chunk(c, m, "", 1.0), ConfigError);
}

TEST(EnrichProperty, FractionNeverExceedsBudget) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        Chunk c;
        c.text = testing::random_text(rng, 1 + i);
        DocumentMeta m;
        m.title = testing::random_text(rng, 1 + i % 7);
        m.jurisdiction = "Jurisdiction";
        const double f = 0.05 + 0.9 * (i % 10) / 10.0;
        const auto e = enrich_chunk(c, m, testing::random_text(rng, 50), f);
        const double h = static_cast<double>(oracle::token_count(e.header_text));
        const double b = static_cast<double>(oracle::token_count(c.text));
        EXPECT_LE(h / (h + b), f + 1e-9);
        EXPECT_EQ(e.base.text, c.text);
    }
}

TEST(EnrichCollection, EveryChunkGetsItsDocumentHeader) {
    std::mt19937_64 rng(2);
    DocumentMeta m;
    m.title = "Alpha";
    DocumentCollection docs({testing::make_document("a", testing::random_text(rng, 400), m),
                             testing::make_document("b", testing::random_text(rng, 50))});
    const auto chunks = split_collection(docs, ChunkConfig{40, 5, {"\n\n", "\n", ". ", " ", ""}});
    const auto r = enrich_collection(chunks, docs, ThrowingSummarizer{}, EnrichConfig{});
    ASSERT_EQ(r.chunks.size(), chunks.size());
    EXPECT_EQ(r.fallback_windows, r.summaries.size());
    for (const auto& e : r.chunks) {
        if (e.base.doc_id == "a") {
            EXPECT_EQ(e.header_text.rfind("[DOC] Alpha", 0), 0u);
        }
        EXPECT_LE(e.metadata_fraction, 0.25 + 1e-9);
    }
}

} // namespace
} // namespace lexrag
