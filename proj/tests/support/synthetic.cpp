#include "synthetic.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lexrag/random.hpp"

namespace lexrag::testing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<const char*, 48> kWords{
    "tenant",   "landlord", "lease",     "court",    "appeal",   "record",   "notice",  "clause",
    "party",    "section",  "schedule",  "agreement", "liability", "damages", "contract", "order",
    "tribunal", "evidence", "statute",   "claim",    "defence",  "consent",  "period",  "payment",
    "property", "owner",    "act",       "the",      "a",        "of",       "to",      "and",
    "in",       "for",      "under",     "must",     "may",      "not",      "by",      "with",
    "within",   "days",     "written",   "rights",   "duty",     "breach",   "review",  "fee"};

constexpr std::array<const char*, 8> kUnicodeWords{"café", "Zürich", "naïve", "§12", "résumé", "東京", "Ωmega",
                                                   "São"};

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

struct Jurisdiction {
    const char* name;
    const char* slug;
};

constexpr std::array<Jurisdiction, 12> kJurisdictions{{{"Queensland", "queensland"},
                                                       {"Victoria", "victoria"},
                                                       {"Tasmania", "tasmania"},
                                                       {"Ontario", "ontario"},
                                                       {"Manitoba", "manitoba"},
                                                       {"Alberta", "alberta"},
                                                       {"Wales", "wales"},
                                                       {"Scotland", "scotland"},
                                                       {"Ireland", "ireland"},
                                                       {"Delaware", "delaware"},
                                                       {"Nevada", "nevada"},
                                                       {"Oregon", "oregon"}}};

std::vector<std::string> statute_sections(std::size_t i) {
    const auto n = [](std::size_t v) { return std::to_string(v); };
    return {
        "Section 1. Retention of tenancy records. A landlord must keep every tenancy record, including the lease, "
        "the rent ledger and the bond receipt, for at least " + n(3 + i % 4) +
            " years after the tenancy ends. Records may be stored electronically if they remain legible and complete.",
        "Section 2. Notification of a data breach. Where tenancy records are lost or accessed without authority, "
        "the landlord must notify each affected tenant in writing within " + n(10 + i) +
            " days and describe the steps taken to contain the breach.",
        "Section 3. Disclosure to third parties. Tenancy records must not be disclosed to a prospective landlord, "
        "a debt collector or a listing service unless the tenant has given written consent or the disclosure is "
        "required by a court order.",
        "Section 4. Tenant access requests. A tenant may request a copy of any record held about them. The landlord "
        "must provide the copy free of charge within " + n(5 + i % 5) +
            " business days and may redact the details of other tenants.",
        "Section 5. Penalties for non-compliance. A landlord who fails to comply with this Act commits an offence "
        "punishable by a fine of up to " + n(50 + 10 * i) +
            " penalty units, and each day of continued breach is a separate offence.",
        "Section 6. Review and appeals. A person affected by a decision under this Act may apply to the tribunal "
        "for review within " + n(21 + i) +
            " days. The tribunal may confirm, vary or set aside the decision and may award costs.",
    };
}

std::vector<std::string> statute_questions(const std::string& j) {
    return {
        "How long must a landlord keep tenancy records under the " + j + " Tenancy Records Act?",
        "When must tenants be notified of a data breach under the " + j + " Tenancy Records Act?",
        "Can a landlord in " + j + " disclose tenancy records to a debt collector?",
        "How quickly must a landlord in " + j + " answer a tenant access request for a copy of a record?",
        "What is the maximum fine for non-compliance with the " + j + " Tenancy Records Act?",
        "How long does a person in " + j + " have to apply to the tribunal for review of a decision?",
    };
}

} // namespace

std::string random_text(std::mt19937_64& rng, std::size_t tokens, bool unicode) {
    std::string out;
    std::size_t sentence = 0;
    for (std::size_t t = 0; t < tokens; ++t) {
        if (t > 0) {
            const auto r = uniform_index(rng, 100);
            if (sentence > 4 && r < 12) {
                out += ". ";
                sentence = 0;
            } else if (sentence > 4 && r < 15) {
                out += ".\n\n";
                sentence = 0;
            } else if (r < 17) {
                out += "\n";
            } else if (r < 19) {
                out += "  ";
            } else {
                out += " ";
            }
        }
        if (unicode && uniform_index(rng, 10) == 0) {
            out += kUnicodeWords[uniform_index(rng, kUnicodeWords.size())];
        } else {
            out += kWords[uniform_index(rng, kWords.size())];
        }
        ++sentence;
    }
    return out;
}

std::string random_unbroken(std::mt19937_64& rng, std::size_t chars) {
    std::string out;
    out.reserve(chars);
    for (std::size_t i = 0; i < chars; ++i) out += static_cast<char>('a' + uniform_index(rng, 26));
    return out;
}

Document make_document(std::string doc_id, std::string text, DocumentMeta meta) {
    return Document{std::move(doc_id), Utf8Text(std::move(text)), std::move(meta)};
}

SyntheticCase near_duplicate_case() {
    std::vector<Document> docs;
    std::vector<QueryRecord> records;
    const std::string preamble =
        "Part 1. Preliminary. This Act regulates how tenancy records are collected, kept and shared by landlords "
        "and their agents. It applies to every residential tenancy agreement entered into after commencement.";
    for (std::size_t i = 0; i < kJurisdictions.size(); ++i) {
        const auto& j = kJurisdictions[i];
        const auto sections = statute_sections(i);
        std::string text = preamble;
        std::vector<std::pair<std::size_t, std::size_t>> offsets;
        for (const auto& s : sections) {
            text += "\n\n";
            const auto start = Utf8Text(text).size();
            text += s;
            offsets.emplace_back(start, start + Utf8Text(s).size());
        }
        text += "\n";

        DocumentMeta meta;
        meta.title = std::string(j.name) + " Tenancy Records Act";
        meta.jurisdiction = j.name;
        meta.doc_type = "statute";
        const std::string doc_id = std::string("statutes/") + j.slug + "_tenancy_records_act.txt";

        const auto questions = statute_questions(j.name);
        for (std::size_t q = 0; q < questions.size(); ++q) {
            QueryRecord r;
            r.query_id = std::string(j.slug) + "-s" + std::to_string(q + 1);
            r.question = questions[q];
            r.gold_spans.push_back({doc_id, offsets[q].first, offsets[q].second, sections[q]});
            r.gold_answer = sections[q];
            records.push_back(std::move(r));
        }
        docs.push_back(make_document(doc_id, std::move(text), std::move(meta)));
    }
    return {DocumentCollection(std::move(docs)), std::move(records)};
}

void write_corpus(const DocumentCollection& docs, const fs::path& dir, const fs::path& manifest) {
    json m = json::object();
    for (const auto& d : docs) {
        write_file(dir / d.doc_id, d.text.str());
        json e = {{"title", d.meta.title}};
        if (d.meta.jurisdiction) e["jurisdiction"] = *d.meta.jurisdiction;
        if (d.meta.doc_type) e["doc_type"] = *d.meta.doc_type;
        if (d.meta.source_url) e["source_url"] = *d.meta.source_url;
        m[d.doc_id] = std::move(e);
    }
    write_file(manifest, m.dump(2));
}

void write_snippet_qa(const std::vector<QueryRecord>& records, const fs::path& path) {
    json arr = json::array();
    for (const auto& r : records) {
        json snippets = json::array();
        for (const auto& g : r.gold_spans) {
            snippets.push_back({{"file_path", g.doc_id}, {"span", {g.start, g.end}}, {"answer", g.answer_text}});
        }
        arr.push_back({{"query", r.question}, {"snippets", std::move(snippets)}});
    }
    write_file(path, arr.dump());
}

StandIn write_snippet_stand_in(const fs::path& root, std::size_t queries, std::size_t spans, std::size_t docs,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Document> collection;
    for (std::size_t d = 0; d < docs; ++d) {
        char id[32];
        std::snprintf(id, sizeof id, "doc_%04zu.txt", d);
        collection.push_back(make_document(id, random_text(rng, 120 + uniform_index(rng, 80))));
    }
    std::vector<QueryRecord> records;
    for (std::size_t q = 0; q < queries; ++q) {
        QueryRecord r;
        r.question = "question " + std::to_string(q) + " about " + kWords[uniform_index(rng, kWords.size())];
        const std::size_t n = spans / queries + (q < spans % queries ? 1 : 0);
        const auto& doc = collection[q % docs];
        for (std::size_t s = 0; s < n; ++s) {
            const auto len = doc.text.size();
            const auto start = static_cast<std::size_t>(uniform_index(rng, len - 20));
            const auto end = start + 1 + static_cast<std::size_t>(uniform_index(rng, 19));
            r.gold_spans.push_back({doc.doc_id, start, end, std::string(doc.text.slice(start, end))});
        }
        records.push_back(std::move(r));
    }
    StandIn out{root / "corpus", root / "manifest.json", root / "dataset.json", QaFormat::snippet_qa};
    write_corpus(DocumentCollection(std::move(collection)), out.corpus, out.manifest);
    write_snippet_qa(records, out.dataset);
    return out;
}

StandIn write_aus_stand_in(const fs::path& root, std::size_t records, std::size_t docs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Document> collection;
    for (std::size_t d = 0; d < docs; ++d) {
        DocumentMeta meta;
        meta.title = "Case " + std::to_string(d);
        meta.jurisdiction = d % 2 ? "New South Wales" : "Commonwealth";
        meta.doc_type = "decision";
        meta.source_url = "https://example.org/cases/" + std::to_string(d);
        char id[32];
        std::snprintf(id, sizeof id, "case_%04zu.txt", d);
        collection.push_back(make_document(id, random_text(rng, 150), std::move(meta)));
    }
    std::string lines;
    for (std::size_t i = 0; i < records; ++i) {
        const auto& doc = collection[i % docs];
        const auto start = static_cast<std::size_t>(uniform_index(rng, doc.text.size() / 2));
        const json rec = {{"Question", "What did the court decide in matter " + std::to_string(i) + "?"},
                          {"document URL", *doc.meta.source_url},
                          {"Context", std::string(doc.text.slice(start, doc.text.size()))},
                          {"Document MetaData", {{"title", doc.meta.title}}},
                          {"Answer", std::string(doc.text.slice(start, std::min(doc.text.size(), start + 40)))}};
        lines += rec.dump() + "\n";
    }
    StandIn out{root / "corpus", root / "manifest.json", root / "dataset.jsonl", QaFormat::aus_legal_qa};
    write_corpus(DocumentCollection(std::move(collection)), out.corpus, out.manifest);
    write_file(out.dataset, lines);
    return out;
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("lexrag_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace lexrag::testing
