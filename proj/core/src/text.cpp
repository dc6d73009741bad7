#include "lexrag/text.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "lexrag/error.hpp"

namespace lexrag {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar starting at `pos`. On malformed input returns false and
// sets `len` to 1 so lenient callers can skip the byte.
bool decode_one(std::string_view s, std::size_t pos, char32_t& out, std::size_t& len) noexcept {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        out = b0;
        len = 1;
        return true;
    }
    std::size_t need = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        cp = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        cp = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        cp = b0 & 0x07;
        min = 0x10000;
    } else {
        len = 1;
        return false;
    }
    if (pos + need >= s.size()) {
        len = 1;
        return false;
    }
    for (std::size_t i = 1; i <= need; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            len = 1;
            return false;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        len = 1;
        return false;
    }
    out = cp;
    len = need + 1;
    return true;
}

// Lenient scalar iteration used by the tokenizers.
template <typename Fn>
void for_each_scalar(std::string_view s, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        char32_t c = 0;
        std::size_t len = 1;
        if (!decode_one(s, pos, c, len)) {
            c = kReplacement;
        }
        fn(c, pos, len);
        pos += len;
    }
}

bool is_ascii_punct(char32_t c) noexcept {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
}

// Common typographic punctuation that shows up in scraped legal text.
bool is_unicode_punct(char32_t c) noexcept {
    switch (c) {
    case 0x00A7: // section sign
    case 0x00B6: // pilcrow
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015:
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x2026:
    case 0x00AB: case 0x00BB:
        return true;
    default:
        return false;
    }
}

} // namespace

bool is_whitespace(char32_t c) noexcept {
    switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        char32_t c = 0;
        std::size_t len = 1;
        if (!decode_one(bytes, pos, c, len)) {
            return false;
        }
        pos += len;
    }
    return true;
}

std::u32string decode_utf8(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        char32_t c = 0;
        std::size_t len = 1;
        if (!decode_one(bytes, pos, c, len)) {
            throw TextError("invalid UTF-8 at byte " + std::to_string(pos));
        }
        out.push_back(c);
        pos += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t c) {
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view chars) {
    std::string out;
    out.reserve(chars.size());
    for (char32_t c : chars) {
        append_utf8(out, c);
    }
    return out;
}

Utf8Text::Utf8Text(std::string utf8) : bytes_(std::move(utf8)) {
    if (bytes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw TextError("text larger than 4 GiB is not supported");
    }
    offsets_.reserve(bytes_.size() + 1);
    std::size_t pos = 0;
    while (pos < bytes_.size()) {
        char32_t c = 0;
        std::size_t len = 1;
        if (!decode_one(bytes_, pos, c, len)) {
            throw TextError("invalid UTF-8 at byte " + std::to_string(pos));
        }
        offsets_.push_back(static_cast<std::uint32_t>(pos));
        pos += len;
    }
    offsets_.push_back(static_cast<std::uint32_t>(bytes_.size()));
    offsets_.shrink_to_fit();
}

std::string_view Utf8Text::slice(std::size_t start, std::size_t end) const {
    if (start > end || end > size()) {
        throw std::out_of_range("slice [" + std::to_string(start) + ", " + std::to_string(end) +
                                ") outside text of length " + std::to_string(size()));
    }
    if (start == end) {
        return {};
    }
    const std::size_t b0 = offsets_[start];
    const std::size_t b1 = offsets_[end];
    return std::string_view(bytes_).substr(b0, b1 - b0);
}

std::size_t Utf8Text::byte_offset(std::size_t char_index) const {
    if (offsets_.empty()) {
        if (char_index == 0) return 0;
        throw std::out_of_range("character index out of range");
    }
    if (char_index >= offsets_.size()) {
        throw std::out_of_range("character index out of range");
    }
    return offsets_[char_index];
}

std::size_t Utf8Text::char_index_of_byte(std::size_t byte) const noexcept {
    if (offsets_.empty()) {
        return byte == 0 ? 0 : static_cast<std::size_t>(-1);
    }
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), static_cast<std::uint32_t>(byte));
    if (it == offsets_.end() || *it != byte) {
        return static_cast<std::size_t>(-1);
    }
    return static_cast<std::size_t>(it - offsets_.begin());
}

std::vector<std::string_view> split_tokens(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t tok_begin = 0;
    bool in_token = false;
    for_each_scalar(text, [&](char32_t c, std::size_t pos, std::size_t) {
        const bool ws = is_whitespace(c);
        if (!ws && !in_token) {
            tok_begin = pos;
            in_token = true;
        } else if (ws && in_token) {
            tokens.push_back(text.substr(tok_begin, pos - tok_begin));
            in_token = false;
        }
    });
    if (in_token) {
        tokens.push_back(text.substr(tok_begin));
    }
    return tokens;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for_each_scalar(text, [&](char32_t c, std::size_t, std::size_t) {
        const bool ws = is_whitespace(c);
        if (!ws && !in_token) {
            ++n;
        }
        in_token = !ws;
    });
    return n;
}

std::string truncate_tokens(std::string_view text, std::size_t n) {
    std::string out;
    std::size_t taken = 0;
    for (auto tok : split_tokens(text)) {
        if (taken == n) break;
        if (taken > 0) out.push_back(' ');
        out.append(tok);
        ++taken;
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (auto tok : split_tokens(text)) {
        if (!out.empty()) out.push_back(' ');
        out.append(tok);
    }
    return out;
}

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> lexical_terms(std::string_view text) {
    std::vector<std::string> terms;
    for (auto tok : split_tokens(text)) {
        std::string term;
        term.reserve(tok.size());
        for_each_scalar(tok, [&](char32_t c, std::size_t, std::size_t) {
            if (is_ascii_punct(c) || is_unicode_punct(c)) return;
            if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
            append_utf8(term, c);
        });
        if (!term.empty()) terms.push_back(std::move(term));
    }
    return terms;
}

std::string sanitize_plain_text(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for_each_scalar(text, [&](char32_t c, std::size_t, std::size_t) {
        if (c < 0x20 || c == 0x7F || (c >= 0x80 && c < 0xA0)) c = ' ';
        append_utf8(cleaned, c);
    });
    return normalize_whitespace(cleaned);
}

} // namespace lexrag
