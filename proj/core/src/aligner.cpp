#include "lexrag/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

namespace {

char32_t fold(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

// Normalized text plus, for each normalized character, the index of the
// source character it came from.
struct NormalizedText {
    std::u32string chars;
    std::vector<std::size_t> source;
};

NormalizedText normalize_with_map(std::u32string_view text) {
    NormalizedText out;
    bool pending_space = false;
    std::size_t space_at = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_whitespace(text[i])) {
            if (!pending_space) space_at = i;
            pending_space = true;
            continue;
        }
        if (pending_space && !out.chars.empty()) {
            out.chars.push_back(U' ');
            out.source.push_back(space_at);
        }
        pending_space = false;
        out.chars.push_back(fold(text[i]));
        out.source.push_back(i);
    }
    return out;
}

std::uint64_t gram_hash(const char32_t* p, std::size_t n) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<std::uint64_t>(p[i]);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::vector<std::uint64_t> gram_hashes(const std::u32string& s, std::size_t n) {
    std::vector<std::uint64_t> out;
    if (s.size() < n) return out;
    out.reserve(s.size() - n + 1);
    for (std::size_t i = 0; i + n <= s.size(); ++i) out.push_back(gram_hash(s.data() + i, n));
    return out;
}

std::unordered_set<std::uint64_t> gram_set(const std::u32string& s, std::size_t n) {
    if (s.empty()) return {};
    if (s.size() < n) return {gram_hash(s.data(), s.size())};
    const auto v = gram_hashes(s, n);
    return {v.begin(), v.end()};
}

// Jaccard score of a window over gram positions [lo, hi), maintained
// incrementally as either edge moves.
class GramWindow {
public:
    GramWindow(const std::vector<std::uint64_t>& grams, const std::unordered_set<std::uint64_t>& target)
        : grams_(grams), target_(target) {}

    void reset(std::size_t lo, std::size_t hi) {
        counts_.clear();
        distinct_ = 0;
        shared_ = 0;
        lo_ = lo;
        hi_ = lo;
        while (hi_ < hi) push_back();
    }
    void push_back() { add(grams_[hi_++]); }
    void pop_back() { remove(grams_[--hi_]); }
    void push_front() { add(grams_[--lo_]); }
    void pop_front() { remove(grams_[lo_++]); }

    // Moves to [lo, hi) one edge step at a time.
    void move_to(std::size_t lo, std::size_t hi) {
        if (lo >= hi_ || hi <= lo_) {
            reset(lo, hi);
            return;
        }
        while (hi_ < hi) push_back();
        while (lo_ > lo) push_front();
        while (hi_ > hi) pop_back();
        while (lo_ < lo) pop_front();
    }

    double score() const {
        const std::size_t uni = target_.size() + distinct_ - shared_;
        return uni == 0 ? 0.0 : static_cast<double>(shared_) / static_cast<double>(uni);
    }
    std::size_t lo() const noexcept { return lo_; }
    std::size_t hi() const noexcept { return hi_; }

private:
    void add(std::uint64_t g) {
        if (counts_[g]++ == 0) {
            ++distinct_;
            shared_ += target_.count(g);
        }
    }
    void remove(std::uint64_t g) {
        auto it = counts_.find(g);
        if (--it->second == 0) {
            counts_.erase(it);
            --distinct_;
            shared_ -= target_.count(g);
        }
    }

    const std::vector<std::uint64_t>& grams_;
    const std::unordered_set<std::uint64_t>& target_;
    std::unordered_map<std::uint64_t, std::size_t> counts_;
    std::size_t distinct_ = 0;
    std::size_t shared_ = 0;
    std::size_t lo_ = 0;
    std::size_t hi_ = 0;
};

AlignOutcome success(const Document& doc, std::size_t start, std::size_t end, double score, AlignMethod method) {
    AlignOutcome out;
    out.ok = true;
    out.score = score;
    out.method = method;
    out.span.doc_id = doc.doc_id;
    out.span.start = start;
    out.span.end = end;
    out.span.answer_text = std::string(doc.text.slice(start, end));
    return out;
}

AlignOutcome failure(double score, std::string message) {
    AlignOutcome out;
    out.score = score;
    out.message = std::move(message);
    return out;
}

} // namespace

void AlignConfig::validate() const {
    if (shingle_size == 0) throw ConfigError("shingle_size must be >= 1");
    if (!(min_score > 0.0 && min_score <= 1.0)) throw ConfigError("min_score must be in (0, 1]");
    if (!(max_window_slack >= 0.0 && max_window_slack < 1.0)) throw ConfigError("max_window_slack must be in [0, 1)");
}

std::string_view to_string(AlignMethod m) noexcept {
    switch (m) {
    case AlignMethod::exact: return "exact";
    case AlignMethod::normalized: return "normalized";
    case AlignMethod::fuzzy: return "fuzzy";
    }
    return "fuzzy";
}

std::u32string normalize_for_alignment(std::u32string_view text) { return normalize_with_map(text).chars; }

double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n) {
    if (n == 0) throw ConfigError("shingle size must be >= 1");
    const auto sa = gram_set(normalize_for_alignment(decode_utf8(a)), n);
    const auto sb = gram_set(normalize_for_alignment(decode_utf8(b)), n);
    std::size_t shared = 0;
    for (auto g : sa) shared += sb.count(g);
    const std::size_t uni = sa.size() + sb.size() - shared;
    return uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
}

AlignOutcome align_answer(const Document& doc, std::string_view answer, const AlignConfig& cfg) {
    cfg.validate();
    const auto answer_chars = decode_utf8(answer);
    if (answer_chars.empty()) throw ConfigError("cannot align an empty answer");
    if (answer_chars.size() > doc.text.size()) return failure(0.0, "answer longer than document");

    if (const auto byte = doc.text.str().find(answer); byte != std::string::npos) {
        const auto start = doc.text.char_index_of_byte(byte);
        if (start != static_cast<std::size_t>(-1)) {
            return success(doc, start, start + answer_chars.size(), 1.0, AlignMethod::exact);
        }
    }

    const auto norm_doc = normalize_with_map(doc.text.decode());
    const auto norm_ans = normalize_with_map(answer_chars).chars;
    if (norm_ans.empty()) return failure(0.0, "answer is only whitespace");
    if (norm_ans.size() > norm_doc.chars.size()) return failure(0.0, "answer longer than document");

    auto to_doc_span = [&](std::size_t s, std::size_t e) {
        return std::pair{norm_doc.source[s], norm_doc.source[e - 1] + 1};
    };

    if (const auto pos = norm_doc.chars.find(norm_ans); pos != std::u32string::npos) {
        const auto [start, end] = to_doc_span(pos, pos + norm_ans.size());
        return success(doc, start, end, 1.0, AlignMethod::normalized);
    }

    const std::size_t n = cfg.shingle_size;
    const std::size_t a = norm_ans.size();
    const std::size_t len = norm_doc.chars.size();
    if (a < n || len < n) return failure(0.0, "answer shorter than one shingle and not found verbatim");

    const auto grams = gram_hashes(norm_doc.chars, n);
    const auto target = gram_set(norm_ans, n);
    const std::size_t step = std::max<std::size_t>(1, a / 10);

    // Window lengths in characters, converted to gram counts (chars - n + 1).
    const auto min_w = std::max<std::size_t>(n, static_cast<std::size_t>(std::ceil(a * (1.0 - cfg.max_window_slack))));
    const auto max_w = std::min(len, static_cast<std::size_t>(std::floor(a * (1.0 + cfg.max_window_slack))));
    std::vector<std::size_t> widths;
    for (std::size_t w = min_w; w <= max_w; w += step) widths.push_back(w);
    if (a >= min_w && a <= max_w) widths.push_back(a);
    if (widths.empty()) widths.push_back(std::min(len, std::max(n, a)));
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());

    GramWindow win(grams, target);
    double best = -1.0;
    std::size_t best_lo = 0;
    std::size_t best_hi = 0;
    for (auto w : widths) {
        const std::size_t g = w - n + 1;
        if (g > grams.size()) continue;
        win.reset(0, g);
        for (std::size_t lo = 0;; lo += step) {
            win.move_to(lo, lo + g);
            const double s = win.score();
            if (s > best) {
                best = s;
                best_lo = lo;
                best_hi = lo + g;
            }
            if (lo + g + step > grams.size()) break;
        }
        // The stride may skip the final offset.
        win.move_to(grams.size() - g, grams.size());
        if (win.score() > best) {
            best = win.score();
            best_lo = win.lo();
            best_hi = win.hi();
        }
    }

    // Local refinement: move either edge by decreasing step sizes while the
    // score strictly improves. Window sampling only sees every step-th offset.
    win.reset(best_lo, best_hi);
    for (std::size_t d = step; d >= 1; d /= 2) {
        bool improved = true;
        while (improved) {
            improved = false;
            const std::size_t lo = win.lo();
            const std::size_t hi = win.hi();
            const std::pair<std::size_t, std::size_t> moves[] = {
                {lo >= d ? lo - d : lo, hi}, {lo + d < hi ? lo + d : lo, hi},
                {lo, hi + d <= grams.size() ? hi + d : hi}, {lo, hi >= lo + d + 1 ? hi - d : hi}};
            for (const auto& [nlo, nhi] : moves) {
                if (nlo == lo && nhi == hi) continue;
                win.move_to(nlo, nhi);
                if (win.score() > best) {
                    best = win.score();
                    improved = true;
                    break;
                }
                win.move_to(lo, hi);
            }
        }
        if (d == 1) break;
    }

    // Shrink to the minimal window: right edge first, then left, while the
    // score does not decrease.
    for (;;) {
        if (win.hi() - win.lo() <= 1) break;
        win.pop_back();
        if (win.score() >= best) {
            best = win.score();
            continue;
        }
        win.push_back();
        win.pop_front();
        if (win.score() >= best) {
            best = win.score();
            continue;
        }
        win.push_front();
        break;
    }

    if (best < cfg.min_score) return failure(best, "best window scored below min_score");
    std::size_t s = win.lo();
    std::size_t e = win.hi() + n - 1;
    while (s < e && norm_doc.chars[s] == U' ') ++s;
    while (e > s && norm_doc.chars[e - 1] == U' ') --e;
    const auto [start, end] = to_doc_span(s, e);
    return success(doc, start, end, best, AlignMethod::fuzzy);
}

ReconstructResult reconstruct_dataset(const std::vector<QueryRecord>& records, const DocumentCollection& docs,
                                      const AlignConfig& cfg, std::size_t workers) {
    cfg.validate();
    ReconstructResult out;
    out.records = records;
    out.report.config = cfg;
    out.report.entries.resize(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
        auto& rec = out.records[i];
        auto& entry = out.report.entries[i];
        entry.query_id = rec.query_id;
        rec.gold_spans.clear();
        const Document* doc = rec.source_doc_id ? docs.find(*rec.source_doc_id) : nullptr;
        if (rec.source_doc_id) entry.doc_id = *rec.source_doc_id;
        if (doc == nullptr) {
            entry.message = "source document not found";
            return;
        }
        if (!rec.context_text || normalize_whitespace(*rec.context_text).empty()) {
            entry.message = "record has no context text";
            return;
        }
        const auto res = align_answer(*doc, *rec.context_text, cfg);
        entry.score = res.score;
        entry.message = res.message;
        if (!res.ok) return;
        entry.ok = true;
        entry.method = res.method;
        entry.start = res.span.start;
        entry.end = res.span.end;
        rec.gold_spans.push_back(res.span);
    });
    for (const auto& e : out.report.entries) (e.ok ? out.report.aligned : out.report.failed) += 1;
    return out;
}

} // namespace lexrag
