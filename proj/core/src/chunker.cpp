#include "lexrag/chunker.hpp"

#include <algorithm>
#include <cstdio>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"

namespace lexrag {

namespace {

struct Piece {
    std::size_t begin;
    std::size_t end;
};

// O(1) whitespace-token counts over arbitrary character ranges.
class TokenIndex {
public:
    explicit TokenIndex(const std::u32string& chars) : non_ws_(chars.size()), start_prefix_(chars.size() + 1, 0) {
        for (std::size_t i = 0; i < chars.size(); ++i) {
            non_ws_[i] = !is_whitespace(chars[i]);
            const bool is_start = non_ws_[i] && (i == 0 || !non_ws_[i - 1]);
            start_prefix_[i + 1] = start_prefix_[i] + (is_start ? 1 : 0);
            if (is_start) starts_.push_back(i);
        }
    }

    // Tokens of the slice [s, e); a token clipped at s still counts once.
    std::size_t count(std::size_t s, std::size_t e) const noexcept {
        if (s >= e) return 0;
        return start_prefix_[e] - start_prefix_[s + 1] + (non_ws_[s] ? 1 : 0);
    }

    bool non_ws(std::size_t i) const noexcept { return non_ws_[i]; }
    const std::vector<std::size_t>& starts() const noexcept { return starts_; }

private:
    std::vector<bool> non_ws_;
    std::vector<std::size_t> start_prefix_;
    std::vector<std::size_t> starts_;
};

class RecursiveSplitter {
public:
    RecursiveSplitter(const std::u32string& chars, const TokenIndex& tokens,
                      const std::vector<std::u32string>& separators, std::size_t piece_budget)
        : chars_(chars), tokens_(tokens), separators_(separators), budget_(piece_budget) {}

    std::vector<Piece> run() {
        pieces_.clear();
        if (!chars_.empty()) split(0, chars_.size(), 0);
        return std::move(pieces_);
    }

private:
    void split(std::size_t s, std::size_t e, std::size_t level) {
        if (tokens_.count(s, e) <= budget_) {
            pieces_.push_back({s, e});
            return;
        }
        const std::u32string_view all(chars_);
        for (std::size_t l = level; l < separators_.size(); ++l) {
            const auto& sep = separators_[l];
            if (sep.empty()) {
                for (std::size_t i = s; i < e; ++i) pieces_.push_back({i, i + 1});
                return;
            }
            std::vector<std::size_t> cuts;
            std::size_t pos = s;
            while (pos + sep.size() <= e) {
                const auto hit = all.substr(0, e).find(sep, pos);
                if (hit == std::u32string_view::npos) break;
                const auto cut = hit + sep.size();
                if (cut < e) cuts.push_back(cut);
                pos = cut;
            }
            if (cuts.empty()) continue;
            std::size_t prev = s;
            cuts.push_back(e);
            for (auto cut : cuts) {
                if (tokens_.count(prev, cut) <= budget_) {
                    pieces_.push_back({prev, cut});
                } else {
                    split(prev, cut, l + 1);
                }
                prev = cut;
            }
            return;
        }
        // Only reachable when no separator (not even "") applies.
        pieces_.push_back({s, e});
    }

    const std::u32string& chars_;
    const TokenIndex& tokens_;
    const std::vector<std::u32string>& separators_;
    std::size_t budget_;
    std::vector<Piece> pieces_;
};

} // namespace

void ChunkConfig::validate() const {
    if (target_tokens == 0) throw ConfigError("target_tokens must be positive");
    if (overlap_tokens >= target_tokens) throw ConfigError("overlap_tokens must be < target_tokens");
    if (separators.empty() || !separators.back().empty()) {
        throw ConfigError("separators must end with the empty string");
    }
}

std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "#%06zu", ordinal);
    std::string id(doc_id);
    id += buf;
    return id;
}

std::vector<Chunk> split_recursive(const Document& doc, const ChunkConfig& cfg) {
    cfg.validate();
    std::vector<Chunk> chunks;
    const auto chars = doc.text.decode();
    if (chars.empty()) return chunks;

    std::vector<std::u32string> seps;
    seps.reserve(cfg.separators.size());
    for (const auto& s : cfg.separators) seps.push_back(decode_utf8(s));

    const TokenIndex tokens(chars);
    const std::size_t len = chars.size();
    const auto pieces = RecursiveSplitter(chars, tokens, seps, cfg.target_tokens - cfg.overlap_tokens).run();

    auto emit = [&](std::size_t start, std::size_t end) {
        Chunk c;
        c.ordinal = chunks.size();
        c.chunk_id = make_chunk_id(doc.doc_id, c.ordinal);
        c.doc_id = doc.doc_id;
        c.start = start;
        c.end = end;
        c.text = std::string(doc.text.slice(start, end));
        const bool cut_start = start > 0 && tokens.non_ws(start) && tokens.non_ws(start - 1);
        const bool cut_end = end < len && tokens.non_ws(end) && tokens.non_ws(end - 1);
        c.hard_split = cut_start || cut_end;
        chunks.push_back(std::move(c));
    };

    const auto& starts = tokens.starts();
    std::size_t chunk_start = 0;
    std::size_t i = 0;
    while (i < pieces.size()) {
        // The first piece always fits: carry <= overlap and piece <= target - overlap.
        std::size_t j = i + 1;
        while (j < pieces.size() && tokens.count(chunk_start, pieces[j].end) <= cfg.target_tokens) ++j;
        if (j == pieces.size()) {
            emit(chunk_start, len);
            break;
        }
        std::size_t end = pieces[j - 1].end;
        while (end > chunk_start && !tokens.non_ws(end - 1)) --end;
        emit(chunk_start, end);

        // Overflow implies this chunk holds more than overlap_tokens tokens, so
        // the carried suffix never reaches back to chunk_start.
        const std::size_t n = tokens.count(chunk_start, end);
        const std::size_t carry = std::min(cfg.overlap_tokens, n - 1);
        if (carry == 0) {
            chunk_start = end;
        } else {
            const auto past = std::lower_bound(starts.begin(), starts.end(), end);
            chunk_start = *(past - static_cast<std::ptrdiff_t>(carry));
        }
        i = j;
    }
    return chunks;
}

std::vector<Chunk> split_collection(const DocumentCollection& docs, const ChunkConfig& cfg, std::size_t workers) {
    cfg.validate();
    std::vector<std::vector<Chunk>> per_doc(docs.size());
    parallel_for(docs.size(), workers,
                 [&](std::size_t i) { per_doc[i] = split_recursive(docs.documents()[i], cfg); });
    std::vector<Chunk> out;
    for (auto& v : per_doc) {
        out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    return out;
}

} // namespace lexrag
