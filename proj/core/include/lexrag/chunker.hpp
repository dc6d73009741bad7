#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/corpus.hpp"

namespace lexrag {

struct ChunkConfig {
    std::size_t target_tokens = 256;
    std::size_t overlap_tokens = 50;
    /// Highest priority first; must end with "" (character fallback).
    std::vector<std::string> separators{"\n\n", "\n", ". ", " ", ""};

    /// Throws ConfigError unless overlap < target and separators end with "".
    void validate() const;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::size_t start = 0; // characters, inclusive
    std::size_t end = 0;   // characters, exclusive
    std::string text;      // exactly document.text[start:end]
    std::size_t ordinal = 0;
    /// A boundary of this chunk cuts through a whitespace-delimited token.
    bool hard_split = false;
};

/// doc_id + "#" + zero-padded ordinal, so chunk ids of one document sort in
/// ordinal order.
std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal);

/// Recursive separator-hierarchy split with greedy packing and token-suffix
/// overlap.
///
/// The document is first cut into pieces: any span longer than
/// target - overlap tokens is split at the highest-priority separator that
/// occurs in it (separator kept on the left piece), recursing to lower
/// priorities for pieces that are still too long. Pieces are then packed
/// greedily into chunks of at most target_tokens. Each chunk after the first
/// starts at the first of the previous chunk's last overlap_tokens tokens, so
/// consecutive chunks share exactly that many tokens by offset, never by
/// copying text. Non-final chunks have trailing whitespace trimmed; the last
/// chunk runs to the end of the document, so the chunks cover it exactly.
std::vector<Chunk> split_recursive(const Document& doc, const ChunkConfig& cfg);

/// Chunks every document, in collection order, using up to `workers` threads.
std::vector<Chunk> split_collection(const DocumentCollection& docs, const ChunkConfig& cfg,
                                    std::size_t workers = 1);

} // namespace lexrag
