#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lexrag/corpus.hpp"

namespace lexrag::testing {

/// Random prose with sentences, line breaks and paragraphs. With `unicode`
/// some words carry multi-byte characters.
std::string random_text(std::mt19937_64& rng, std::size_t tokens, bool unicode = false);

/// A single long run with no whitespace.
std::string random_unbroken(std::mt19937_64& rng, std::size_t chars);

Document make_document(std::string doc_id, std::string text, DocumentMeta meta = {});

struct SyntheticCase {
    DocumentCollection docs;
    std::vector<QueryRecord> records;
};

/// Twelve statutes that share their body text and differ mainly in title
/// and jurisdiction. Each query names the jurisdiction and asks about one
/// section; the gold span is that section in the named statute.
SyntheticCase near_duplicate_case();

/// Writes every document under `dir` and the metadata sidecar to `manifest`.
void write_corpus(const DocumentCollection& docs, const std::filesystem::path& dir,
                  const std::filesystem::path& manifest);

/// Writes records as a snippet_qa file.
void write_snippet_qa(const std::vector<QueryRecord>& records, const std::filesystem::path& path);

/// Files shaped like the public datasets, with the published record counts.
struct StandIn {
    std::filesystem::path corpus;
    std::filesystem::path manifest;
    std::filesystem::path dataset;
    QaFormat format = QaFormat::snippet_qa;
};

/// snippet_qa with `queries` records, `spans` spans in total, over `docs` documents.
StandIn write_snippet_stand_in(const std::filesystem::path& root, std::size_t queries, std::size_t spans,
                               std::size_t docs, std::uint64_t seed);

/// aus_legal_qa JSON-lines with `records` records spread over `docs` documents.
StandIn write_aus_stand_in(const std::filesystem::path& root, std::size_t records, std::size_t docs,
                           std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

} // namespace lexrag::testing
