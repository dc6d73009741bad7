#include "lexrag/dpo.hpp"

#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "lexrag/error.hpp"
#include "lexrag/random.hpp"
#include "lexrag/stats.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

namespace {

constexpr std::string_view kAnswerInstruction = "Answer the question using only the context above.";

bool is_terminal_punct(char c) {
    switch (c) {
    case '.': case '!': case '?': case ',': case ';': case ':': case '"': case '\'': case ')': case ']':
        return true;
    default:
        return false;
    }
}

} // namespace

std::string_view to_string(SetTag tag) noexcept {
    return tag == SetTag::set1_correct_context ? "set1_correct_context" : "set2_incorrect_context";
}

SetTag parse_set_tag(std::string_view name) {
    if (name == "set1_correct_context" || name == "set1") return SetTag::set1_correct_context;
    if (name == "set2_incorrect_context" || name == "set2") return SetTag::set2_incorrect_context;
    throw FormatError("unknown set tag: " + std::string(name));
}

PromptTemplate parse_prompt_template(std::string_view name) {
    if (name == "with_refusal_instruction" || name == "with") return PromptTemplate::with_refusal_instruction;
    if (name == "without_refusal_instruction" || name == "without") return PromptTemplate::without_refusal_instruction;
    throw ConfigError("unknown prompt template: " + std::string(name));
}

std::string render_prompt(PromptTemplate tmpl, std::string_view context, std::string_view question) {
    std::string out = "Context:\n";
    out += context;
    out += "\n\n";
    out += kAnswerInstruction;
    if (tmpl == PromptTemplate::with_refusal_instruction) {
        out += " If it cannot be answered, give the answer: '";
        out += kRefusalString;
        out += "'";
    }
    out += "\n\nQuestion: ";
    out += question;
    out += "\nAnswer:";
    return out;
}

DatasetSplits split_dataset(const std::vector<QueryRecord>& records, const SplitSpec& spec) {
    const std::size_t need = spec.train + spec.validation + spec.test;
    if (need > records.size()) {
        throw ConfigError("split needs " + std::to_string(need) + " records but only " +
                          std::to_string(records.size()) + " are available");
    }
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(spec.seed);
    seeded_shuffle(order, rng);

    DatasetSplits out;
    std::size_t pos = 0;
    auto take = [&](std::vector<QueryRecord>& dst, std::size_t count) {
        dst.reserve(count);
        for (std::size_t i = 0; i < count; ++i) dst.push_back(records[order[pos++]]);
    };
    take(out.train, spec.train);
    take(out.validation, spec.validation);
    take(out.test, spec.test);
    return out;
}

std::string source_document_of(const QueryRecord& record) {
    if (record.source_doc_id && !record.source_doc_id->empty()) return *record.source_doc_id;
    if (record.source_url && !record.source_url->empty()) return *record.source_url;
    if (!record.gold_spans.empty()) return record.gold_spans.front().doc_id;
    throw FormatError("record " + record.query_id + " has no source document");
}

std::vector<PreferencePair> build_preference_pairs(const std::vector<QueryRecord>& records, std::uint64_t seed,
                                                   PromptTemplate tmpl) {
    std::vector<std::string> doc_of;
    doc_of.reserve(records.size());
    std::set<std::string> distinct;
    for (const auto& r : records) {
        if (!r.context_text) throw FormatError("record " + r.query_id + " has no context text");
        if (r.gold_answer.empty()) throw FormatError("record " + r.query_id + " has no gold answer");
        if (normalize_for_refusal(r.gold_answer) == normalize_for_refusal(kRefusalString)) {
            throw FormatError("record " + r.query_id + " has the refusal string as its gold answer");
        }
        doc_of.push_back(source_document_of(r));
        distinct.insert(doc_of.back());
    }
    if (!records.empty() && distinct.size() < 2) {
        throw ConfigError("incorrect-context pairs need records from at least two source documents");
    }

    std::vector<PreferencePair> pairs;
    pairs.reserve(records.size() * 2);
    const std::string refusal(kRefusalString);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];

        PreferencePair p1;
        p1.pair_id = r.query_id + ":set1";
        p1.prompt = render_prompt(tmpl, *r.context_text, r.question);
        p1.chosen = r.gold_answer;
        p1.rejected = refusal;
        p1.set_tag = SetTag::set1_correct_context;
        p1.source_query_id = r.query_id;
        p1.source_doc = doc_of[i];
        p1.context_doc = doc_of[i];
        p1.context_query_id = r.query_id;
        pairs.push_back(std::move(p1));

        // Uniform over records from other documents, by rejection.
        std::mt19937_64 rng(derive_seed(seed, i));
        std::size_t j = 0;
        do {
            j = static_cast<std::size_t>(uniform_index(rng, records.size()));
        } while (doc_of[j] == doc_of[i]);

        PreferencePair p2;
        p2.pair_id = r.query_id + ":set2";
        p2.prompt = render_prompt(tmpl, *records[j].context_text, r.question);
        p2.chosen = refusal;
        p2.rejected = r.gold_answer;
        p2.set_tag = SetTag::set2_incorrect_context;
        p2.source_query_id = r.query_id;
        p2.source_doc = doc_of[i];
        p2.context_doc = doc_of[j];
        p2.context_query_id = records[j].query_id;
        pairs.push_back(std::move(p2));
    }
    return pairs;
}

RefusalMode parse_refusal_mode(std::string_view name) {
    if (name == "strict") return RefusalMode::strict;
    if (name == "soft") return RefusalMode::soft;
    throw ConfigError("unknown refusal mode: " + std::string(name));
}

std::string normalize_for_refusal(std::string_view text) {
    auto out = ascii_lower(normalize_whitespace(text));
    while (!out.empty() && is_terminal_punct(out.back())) out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

bool detect_refusal(std::string_view output, const RefusalConfig& cfg) {
    const auto norm = normalize_for_refusal(output);
    const auto target = normalize_for_refusal(cfg.refusal_string);
    if (!target.empty() && norm.find(target) != std::string::npos) return true;
    if (cfg.mode == RefusalMode::soft) {
        for (const auto& p : cfg.soft_patterns) {
            const auto np = normalize_for_refusal(p);
            if (!np.empty() && norm.find(np) != std::string::npos) return true;
        }
    }
    return false;
}

RefusalRates refusal_rates(const std::vector<ModelOutput>& outputs, const RefusalConfig& cfg) {
    RefusalRates r;
    for (const auto& o : outputs) {
        const bool refused = detect_refusal(o.output, cfg);
        if (o.set_tag == SetTag::set1_correct_context) {
            ++r.set1_total;
            r.set1_refusals += refused ? 1 : 0;
        } else {
            ++r.set2_total;
            r.set2_refusals += refused ? 1 : 0;
        }
    }
    auto rate = [](std::size_t hits, std::size_t total) -> std::optional<double> {
        if (total == 0) return std::nullopt;
        return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
    };
    r.set1_rate = rate(r.set1_refusals, r.set1_total);
    r.set2_rate = rate(r.set2_refusals, r.set2_total);
    return r;
}

std::string format_rate(const std::optional<double>& rate) {
    if (!rate) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *rate);
    return buf;
}

double token_f1(std::string_view prediction, std::string_view reference) {
    const auto p = lexical_terms(prediction);
    const auto r = lexical_terms(reference);
    if (p.empty() || r.empty()) return 0.0;
    std::map<std::string, std::size_t> counts;
    for (const auto& t : r) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(r.size());
    return 2.0 * precision * recall / (precision + recall);
}

DeltaSummary mean_score_with_delta_ci(const std::vector<ScoredAnswer>& a, const std::vector<ScoredAnswer>& b,
                                      std::size_t iterations, std::uint64_t seed, double level) {
    std::map<std::string_view, double> bmap;
    for (const auto& s : b) {
        if (!bmap.emplace(s.query_id, s.score).second) throw FormatError("duplicate query id " + s.query_id);
    }
    if (a.size() != b.size()) throw FormatError("score lists cover different queries");
    std::vector<double> va, vb, delta;
    std::set<std::string_view> seen;
    for (const auto& s : a) {
        if (!seen.insert(s.query_id).second) throw FormatError("duplicate query id " + s.query_id);
        const auto it = bmap.find(s.query_id);
        if (it == bmap.end()) throw FormatError("query " + s.query_id + " is missing from the second list");
        va.push_back(s.score);
        vb.push_back(it->second);
        delta.push_back(it->second - s.score);
    }
    DeltaSummary out;
    out.n = va.size();
    if (va.empty()) return out;
    out.mean_a = mean(va);
    out.mean_b = mean(vb);
    out.delta = mean(delta);
    const auto ci = bootstrap_ci(delta, iterations, level, seed);
    out.delta_lo = ci.lo;
    out.delta_hi = ci.hi;
    return out;
}

} // namespace lexrag
