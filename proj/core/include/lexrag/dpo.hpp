#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/corpus.hpp"

namespace lexrag {

inline constexpr std::string_view kRefusalString = "Given context is not sufficient to answer.";

enum class SetTag { set1_correct_context, set2_incorrect_context };

std::string_view to_string(SetTag tag) noexcept;
/// Accepts the full names and the short forms "set1" / "set2".
SetTag parse_set_tag(std::string_view name);

enum class PromptTemplate { with_refusal_instruction, without_refusal_instruction };

PromptTemplate parse_prompt_template(std::string_view name);

/// Context block first, then the question. The with-variant adds the
/// refusal instruction between them.
std::string render_prompt(PromptTemplate tmpl, std::string_view context, std::string_view question);

struct SplitSpec {
    std::size_t train = 1918;
    std::size_t validation = 50;
    std::size_t test = 150;
    std::uint64_t seed = 0;
};

struct DatasetSplits {
    std::vector<QueryRecord> train;
    std::vector<QueryRecord> validation;
    std::vector<QueryRecord> test;
};

/// Seeded shuffle, then contiguous train/validation/test slices. Throws
/// ConfigError when the counts exceed the number of records.
DatasetSplits split_dataset(const std::vector<QueryRecord>& records, const SplitSpec& spec);

struct PreferencePair {
    std::string pair_id;
    std::string prompt;
    std::string chosen;
    std::string rejected;
    SetTag set_tag = SetTag::set1_correct_context;
    std::string source_query_id;
    /// Document of the record the pair was built from.
    std::string source_doc;
    /// Document the prompt's context came from (differs for set 2).
    std::string context_doc;
    /// Query whose context was borrowed (set 2) or the record itself (set 1).
    std::string context_query_id;
};

/// Source document identity of a record: source_doc_id, else source_url,
/// else the first gold span's doc_id. Throws FormatError when none is set.
std::string source_document_of(const QueryRecord& record);

/// For every record, a set-1 pair (own context, chosen = gold answer,
/// rejected = refusal) followed by a set-2 pair (context of a uniformly drawn
/// record from a different source document, chosen = refusal, rejected =
/// gold answer). Set-2 contexts are drawn from `records` only. Throws
/// ConfigError if some record has no other-document partner.
std::vector<PreferencePair> build_preference_pairs(const std::vector<QueryRecord>& records, std::uint64_t seed,
                                                   PromptTemplate tmpl = PromptTemplate::with_refusal_instruction);

enum class RefusalMode { strict, soft };

RefusalMode parse_refusal_mode(std::string_view name);

struct RefusalConfig {
    std::string refusal_string{kRefusalString};
    std::vector<std::string> soft_patterns{"does not provide", "no information in the context"};
    RefusalMode mode = RefusalMode::strict;
};

/// Lowercase, collapse whitespace, strip trailing punctuation.
std::string normalize_for_refusal(std::string_view text);

bool detect_refusal(std::string_view output, const RefusalConfig& cfg);

struct ModelOutput {
    std::string query_id;
    SetTag set_tag = SetTag::set1_correct_context;
    std::string output;
};

struct RefusalRates {
    std::size_t set1_total = 0;
    std::size_t set1_refusals = 0;
    std::size_t set2_total = 0;
    std::size_t set2_refusals = 0;
    /// Percentages; nullopt when the set is empty.
    std::optional<double> set1_rate;
    std::optional<double> set2_rate;
};

RefusalRates refusal_rates(const std::vector<ModelOutput>& outputs, const RefusalConfig& cfg);

/// One decimal place, or "n/a".
std::string format_rate(const std::optional<double>& rate);

/// Multiset token-overlap F1 over lexical terms; 0 if either side is empty.
double token_f1(std::string_view prediction, std::string_view reference);

struct ScoredAnswer {
    std::string query_id;
    double score = 0.0;
};

struct DeltaSummary {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double delta = 0.0; // mean_b - mean_a
    double delta_lo = 0.0;
    double delta_hi = 0.0;
    std::size_t n = 0;
};

/// Paired bootstrap CI of the mean per-query delta (b - a). Both lists must
/// contain the same query ids (any order); throws FormatError otherwise.
DeltaSummary mean_score_with_delta_ci(const std::vector<ScoredAnswer>& a, const std::vector<ScoredAnswer>& b,
                                      std::size_t iterations = 10000, std::uint64_t seed = 0, double level = 0.95);

} // namespace lexrag
