#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "lexrag/error.hpp"
#include "lexrag/index.hpp"
#include "lexrag/random.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace lexrag {
namespace {

std::vector<IndexedText> as_chunks(const std::vector<std::string>& docs) {
    std::vector<IndexedText> out;
    for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({"c" + std::to_string(i), docs[i]});
    return out;
}

TEST(Bm25, HandComputedLn2) {
    const auto idx = build_sparse(as_chunks({"a b", "b c"}));
    EXPECT_DOUBLE_EQ(idx.avg_len(), 2.0);
    EXPECT_NEAR(idx.idf("a"), std::log(2.0), 1e-12);
    const auto hits = bm25_scores(idx, "a");
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].ref, 0u);
    EXPECT_NEAR(hits[0].score, std::log(2.0), 1e-9);
}

TEST(Bm25, TermInEveryDocumentStillScoresPositive) {
    const auto idx = build_sparse(as_chunks({"a b", "b c"}));
    // idf(b) = ln((2 - 2 + 0.5) / 2.5 + 1) = ln 1.2
    const auto hits = bm25_scores(idx, "b");
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_NEAR(hits[0].score, std::log(1.2), 1e-9);
    EXPECT_EQ(hits[0].ref, 0u); // equal scores fall back to chunk id order
}

TEST(Bm25, UnknownTermsAndEmptyQueries) {
    const auto idx = build_sparse(as_chunks({"a b", "b c"}));
    EXPECT_TRUE(bm25_scores(idx, "zzz").empty());
    EXPECT_TRUE(bm25_scores(idx, "  ").empty());
}

TEST(Bm25, BuildRejectsEmptyAndDuplicates) {
    EXPECT_THROW(build_sparse({}), ConfigError);
    EXPECT_THROW(build_sparse({{"x", "a"}, {"x", "b"}}), ConfigError);
}

TEST(Bm25Property, MatchesOracleOnRandomCorpora) {
    const std::vector<std::string> vocab{"tenant", "lease", "court", "rent", "notice", "order", "appeal", "party"};
    for (std::uint64_t t = 0; t < 100; ++t) {
        std::mt19937_64 rng(derive_seed(55, t));
        std::vector<std::string> docs(2 + uniform_index(rng, 10));
        for (auto& d : docs) {
            const auto n = 1 + uniform_index(rng, 30);
            for (std::size_t i = 0; i < n; ++i) d += (i ? " " : "") + vocab[uniform_index(rng, vocab.size())];
        }
        Bm25Params p{0.5 + double(uniform_index(rng, 20)) / 10.0, double(uniform_index(rng, 11)) / 10.0};
        const auto idx = build_sparse(as_chunks(docs), p);
        std::string q;
        for (std::size_t i = 0; i < 1 + uniform_index(rng, 4); ++i) q += vocab[uniform_index(rng, vocab.size())] + " ";
        const auto expected = oracle::bm25(docs, q, p.k1, p.b);
        std::vector<double> got(docs.size(), 0.0);
        const auto hits = bm25_scores(idx, q);
        for (const auto& h : hits) got[h.ref] = h.score;
        for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-9) << t;
        for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i - 1].score, hits[i].score);
    }
}

TEST(Dense, ExactSearchMatchesBruteForce) {
    std::mt19937_64 rng(9);
    std::vector<IndexedText> chunks;
    for (int i = 0; i < 60; ++i) chunks.push_back({"c" + std::to_string(100 + i), testing::random_text(rng, 20)});
    const HashingEmbedder emb(32);
    const auto idx = build_dense(chunks, emb, 3);
    const auto q = embed(emb, {"tenant lease appeal"})[0];
    const auto hits = dense_search(idx, q, 10);
    ASSERT_EQ(hits.size(), 10u);
    std::vector<std::pair<double, std::string>> all;
    const auto vecs = embed(emb, [&] {
        std::vector<std::string> t;
        for (const auto& c : chunks) t.push_back(c.text);
        return t;
    }());
    for (std::size_t i = 0; i < chunks.size(); ++i) all.push_back({-dot(vecs[i], q), chunks[i].chunk_id});
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(idx.chunk_ids()[hits[i].ref], all[i].second);
        EXPECT_NEAR(hits[i].score, -all[i].first, 1e-5);
    }
}

TEST(Dense, RejectsBadQueries) {
    const HashingEmbedder emb(8);
    const auto idx = build_dense({{"a", "x"}}, emb);
    EXPECT_THROW(dense_search(idx, Vector(4, 1.0f), 1), ConfigError);
    EXPECT_THROW(dense_search(idx, Vector(8, 1.0f), 0), ConfigError);
    EXPECT_TRUE(dense_search(DenseIndex{}, Vector(8, 1.0f), 3).empty());
}

TEST(Persistence, RoundTripsBothIndexes) {
    const auto dir = testing::temp_dir("index_io");
    std::mt19937_64 rng(4);
    std::vector<IndexedText> chunks;
    for (int i = 0; i < 30; ++i) chunks.push_back({"c" + std::to_string(i), testing::random_text(rng, 25, true)});
    const auto sparse = build_sparse(chunks, {1.5, 0.6});
    const HashingEmbedder emb(16);
    const auto dense = build_dense(chunks, emb);
    save_sparse(sparse, dir / "s.idx");
    save_dense(dense, dir / "d.idx");
    const auto s2 = load_sparse(dir / "s.idx");
    const auto d2 = load_dense(dir / "d.idx");
    EXPECT_EQ(s2.chunk_ids(), sparse.chunk_ids());
    EXPECT_EQ(s2.params().k1, 1.5);
    for (const std::string q : {"tenant", "court order", "café"}) {
        const auto a = bm25_scores(sparse, q);
        const auto b = bm25_scores(s2, q);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].ref, b[i].ref);
            EXPECT_DOUBLE_EQ(a[i].score, b[i].score);
        }
    }
    EXPECT_EQ(d2.data(), dense.data());
    EXPECT_EQ(d2.backend(), "deterministic-test");

    // Flip one payload byte: the checksum must catch it.
    {
        std::fstream f(dir / "d.idx", std::ios::in | std::ios::out | std::ios::binary);
        f.seekg(-3, std::ios::end);
        char c = 0;
        f.read(&c, 1);
        f.seekp(-3, std::ios::end);
        c = static_cast<char>(c ^ 0x5A);
        f.write(&c, 1);
    }
    EXPECT_THROW(load_dense(dir / "d.idx"), FormatError);
    {
        std::ofstream(dir / "junk.idx") << "not an index";
    }
    EXPECT_THROW(load_sparse(dir / "junk.idx"), FormatError);
    EXPECT_THROW(load_dense(dir / "d.missing"), IoError);
    std::filesystem::remove_all(dir);
}

} // namespace
} // namespace lexrag
