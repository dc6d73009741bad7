#include <gtest/gtest.h>

#include <fstream>

#include "lexrag/corpus.hpp"
#include "lexrag/error.hpp"
#include "synthetic.hpp"

namespace lexrag {
namespace {

namespace fs = std::filesystem;

void put(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << s;
}

TEST(Corpus, LoadsFilesWithManifestMetadata) {
    const auto dir = testing::temp_dir("corpus_load");
    put(dir / "c/b.txt", "second doc");
    put(dir / "c/a.txt", "first doc");
    put(dir / "c/.hidden", "skip me");
    put(dir / "c/bad.txt", "bad \xFF bytes");
    put(dir / "m.json", R"({"a.txt": {"title": "Alpha", "jurisdiction": "NSW", "type": "case", "court": "HCA"}})");
    const auto r = load_documents(dir / "c", dir / "m.json");
    ASSERT_EQ(r.collection.size(), 2u);
    EXPECT_EQ(r.collection.documents()[0].doc_id, "a.txt");
    const auto& a = r.collection.at("a.txt");
    EXPECT_EQ(a.meta.title, "Alpha");
    EXPECT_EQ(a.meta.jurisdiction.value_or(""), "NSW");
    EXPECT_EQ(a.meta.doc_type.value_or(""), "case");
    EXPECT_EQ(a.meta.extra.at("court"), "HCA");
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.errors[0].path, "bad.txt");
    fs::remove_all(dir);
}

TEST(Corpus, MissingRootIsIoError) {
    EXPECT_THROW(load_documents("/nonexistent/lexrag/corpus"), IoError);
}

TEST(Corpus, DuplicateIdsAreFatal) {
    std::vector<Document> docs{testing::make_document("x", "a"), testing::make_document("x", "b")};
    EXPECT_THROW(DocumentCollection{std::move(docs)}, FormatError);
}

TEST(QaDataset, ParsesSnippetRecordsAndReportsMalformedOnes) {
    const std::string content = R"([
      {"query": "q0", "snippets": [{"file_path": "a.txt", "span": [0, 5], "answer": "first"}]},
      {"query": "q1", "snippets": [{"file_path": "a.txt", "span": [5, 2], "answer": "x"}]},
      {"query": "q2", "snippets": [{"file_path": "a.txt", "span": [1, 3], "answer": "ir"},
                                   {"file_path": "b.txt", "span": [0, 1], "answer": "s"}]}
    ])";
    const auto r = parse_qa_dataset(content, QaFormat::snippet_qa);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].query_id, "0");
    EXPECT_EQ(r.records[1].gold_spans.size(), 2u);
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.errors[0].index, 1u);
}

TEST(QaDataset, AcceptsTestsWrapper) {
    const auto r = parse_qa_dataset(
        R"({"tests": [{"query": "q", "snippets": [{"file_path": "a", "span": [0, 1], "answer": "a"}]}]})",
        QaFormat::snippet_qa);
    EXPECT_EQ(r.records.size(), 1u);
    EXPECT_TRUE(r.errors.empty());
}

TEST(QaDataset, ParsesAusRecordsFromJsonLines) {
    const std::string content =
        R"({"Question": "Who won?", "document URL": "https://x.org/c/1", "Context": "ctx", "Document MetaData": {"court": "FCA"}, "Answer": "The applicant."})"
        "\n\nnot json\n"
        R"({"Question": "Q2", "document URL": "u", "Context": "c", "Answer": "a"})";
    const auto r = parse_qa_dataset(content, QaFormat::aus_legal_qa);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].source_url.value_or(""), "https://x.org/c/1");
    EXPECT_EQ(r.records[0].context_text.value_or(""), "ctx");
    EXPECT_EQ(r.records[0].gold_answer, "The applicant.");
    EXPECT_TRUE(r.records[0].gold_spans.empty());
    ASSERT_EQ(r.errors.size(), 1u);
}

TEST(QaDataset, UrlToDocId) {
    EXPECT_EQ(url_to_doc_id("https://www.austlii.edu.au/cases/2019/12.html"), "www.austlii.edu.au_cases_2019_12.html.txt");
    EXPECT_EQ(url_to_doc_id("a b"), "a_b.txt");
}

TEST(QaDataset, ResolvesSourcesByManifestUrlThenFlatName) {
    DocumentMeta m;
    m.source_url = "https://x.org/one";
    DocumentCollection docs({testing::make_document("one.txt", "text", m),
                             testing::make_document("x.org_two.txt", "text")});
    std::vector<QueryRecord> recs(3);
    recs[0].source_url = "https://x.org/one";
    recs[1].source_url = "https://x.org/two";
    recs[2].source_url = "https://x.org/three";
    EXPECT_EQ(resolve_source_documents(recs, docs), 1u);
    EXPECT_EQ(recs[0].source_doc_id.value_or(""), "one.txt");
    EXPECT_EQ(recs[1].source_doc_id.value_or(""), "x.org_two.txt");
    EXPECT_FALSE(recs[2].source_doc_id.has_value());
}

TEST(QaDataset, RebasesByteSpans) {
    DocumentCollection docs({testing::make_document("d", "\xC3\xA9t\xC3\xA9 ok")});
    std::vector<QueryRecord> recs(1);
    recs[0].gold_spans = {{"d", 0, 5, ""}, {"d", 1, 3, ""}};
    const auto errors = rebase_byte_spans(recs, docs);
    EXPECT_EQ(recs[0].gold_spans[0].start, 0u);
    EXPECT_EQ(recs[0].gold_spans[0].end, 3u);
    ASSERT_EQ(errors.size(), 1u);
}

TEST(Validation, ClassifiesFindings) {
    DocumentCollection docs({testing::make_document("d", "The Tenant  shall pay rent.")});
    std::vector<QueryRecord> recs(4);
    recs[0].gold_spans = {{"d", 4, 17, "Tenant shall"}};   // whitespace differs only
    recs[1].gold_spans = {{"d", 4, 10, "tenant"}};         // case differs
    recs[2].gold_spans = {{"d", 0, 99, "x"}};              // out of bounds
    recs[3].gold_spans = {{"missing", 0, 1, "x"}};         // unresolved
    const auto v = validate_annotations(recs, docs);
    EXPECT_EQ(v.records, 4u);
    EXPECT_EQ(v.clean_records, 1u);
    ASSERT_EQ(v.findings.size(), 3u);
    EXPECT_EQ(v.findings[0].kind, FindingKind::text_mismatch);
    EXPECT_TRUE(v.findings[0].casefold_match);
    EXPECT_EQ(v.findings[1].kind, FindingKind::out_of_bounds);
    EXPECT_EQ(v.findings[2].kind, FindingKind::unresolved_doc);
}

} // namespace
} // namespace lexrag
