#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lexrag {

/// Unicode White_Space property.
bool is_whitespace(char32_t c) noexcept;

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Throws TextError on malformed UTF-8.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view chars);
void append_utf8(std::string& out, char32_t c);

/// UTF-8 text addressed by Unicode scalar value index. All spans and chunk
/// offsets in lexrag are expressed in these indices, never in bytes.
class Utf8Text {
public:
    Utf8Text() = default;
    /// Throws TextError if `utf8` is not valid UTF-8.
    explicit Utf8Text(std::string utf8);

    const std::string& str() const noexcept { return bytes_; }
    std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    bool empty() const noexcept { return size() == 0; }

    /// Characters [start, end). Throws std::out_of_range on bad bounds.
    std::string_view slice(std::size_t start, std::size_t end) const;

    std::size_t byte_offset(std::size_t char_index) const;
    /// Character index for a byte offset that falls on a scalar boundary;
    /// returns size_t(-1) if `byte` is inside a multi-byte sequence.
    std::size_t char_index_of_byte(std::size_t byte) const noexcept;

    std::u32string decode() const { return decode_utf8(bytes_); }

private:
    std::string bytes_;
    std::vector<std::uint32_t> offsets_;
};

/// Number of maximal nonempty whitespace-delimited segments.
std::size_t count_tokens(std::string_view text);

/// Whitespace-delimited segments of `text`, in order.
std::vector<std::string_view> split_tokens(std::string_view text);

/// First `n` tokens of `text` joined by single spaces.
std::string truncate_tokens(std::string_view text, std::size_t n);

/// Collapse whitespace runs to one space and trim. Case is preserved.
std::string normalize_whitespace(std::string_view text);

/// ASCII case folding; non-ASCII scalars pass through unchanged.
std::string ascii_lower(std::string_view text);

/// Lowercased, punctuation-stripped whitespace tokens. This is the lexical
/// view shared by BM25, the hashing embedder and token F1.
std::vector<std::string> lexical_terms(std::string_view text);

/// Replace control characters with spaces and normalize whitespace.
std::string sanitize_plain_text(std::string_view text);

} // namespace lexrag
