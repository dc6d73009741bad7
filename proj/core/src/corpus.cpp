#include "lexrag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lexrag/error.hpp"

namespace lexrag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed for " + path.string());
    }
    return std::move(buf).str();
}

bool is_hidden(const fs::path& rel) {
    for (const auto& part : rel) {
        const auto s = part.string();
        if (!s.empty() && s[0] == '.' && s != "." && s != "..") return true;
    }
    return false;
}

std::string json_scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

std::optional<std::string> optional_text(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    auto value = sanitize_plain_text(json_scalar_to_string(*it));
    if (value.empty()) return std::nullopt;
    return value;
}

DocumentMeta meta_from_json(const json& obj) {
    if (!obj.is_object()) {
        throw FormatError("manifest entry must be an object");
    }
    DocumentMeta meta;
    meta.title = optional_text(obj, "title").value_or("");
    meta.jurisdiction = optional_text(obj, "jurisdiction");
    meta.doc_type = optional_text(obj, "doc_type");
    if (!meta.doc_type) meta.doc_type = optional_text(obj, "type");
    meta.source_url = optional_text(obj, "source_url");
    for (const auto& [key, value] : obj.items()) {
        if (key == "title" || key == "jurisdiction" || key == "doc_type" || key == "type" ||
            key == "source_url") {
            continue;
        }
        if (key == "extra" && value.is_object()) {
            for (const auto& [k, v] : value.items()) {
                meta.extra[k] = sanitize_plain_text(json_scalar_to_string(v));
            }
            continue;
        }
        meta.extra[key] = sanitize_plain_text(json_scalar_to_string(value));
    }
    return meta;
}

std::string id_from_json(const json& rec, std::size_t index) {
    for (const char* key : {"query_id", "id"}) {
        auto it = rec.find(key);
        if (it != rec.end() && !it->is_null()) {
            return json_scalar_to_string(*it);
        }
    }
    return std::to_string(index);
}

// Non-negative integer from a JSON number; rejects fractions and negatives.
std::size_t span_bound(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) {
        const auto x = v.get<long long>();
        if (x < 0) throw FormatError("negative span offset");
        return static_cast<std::size_t>(x);
    }
    throw FormatError("span offsets must be integers");
}

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError(std::string("missing required key \"") + key + "\"");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) {
        throw FormatError(std::string("key \"") + key + "\" must be a string");
    }
    return v.get<std::string>();
}

QueryRecord parse_snippet_record(const json& rec, std::size_t index) {
    if (!rec.is_object()) throw FormatError("record must be an object");
    QueryRecord out;
    out.query_id = id_from_json(rec, index);
    out.question = require_string(rec, "query");
    if (out.question.empty()) throw FormatError("empty query");
    const auto& snippets = require(rec, "snippets");
    if (!snippets.is_array()) throw FormatError("\"snippets\" must be an array");
    std::string joined;
    for (const auto& snip : snippets) {
        if (!snip.is_object()) throw FormatError("snippet must be an object");
        GoldSpan span;
        span.doc_id = require_string(snip, "file_path");
        const auto& s = require(snip, "span");
        if (!s.is_array() || s.size() != 2) {
            throw FormatError("malformed span: expected [start, end]");
        }
        span.start = span_bound(s[0]);
        span.end = span_bound(s[1]);
        if (span.start >= span.end) {
            throw FormatError("malformed span: start must be < end");
        }
        span.answer_text = require_string(snip, "answer");
        if (!joined.empty()) joined.push_back('\n');
        joined += span.answer_text;
        out.gold_spans.push_back(std::move(span));
    }
    if (auto it = rec.find("gold_answer"); it != rec.end() && it->is_string()) {
        out.gold_answer = it->get<std::string>();
    } else {
        out.gold_answer = std::move(joined);
    }
    if (auto it = rec.find("context"); it != rec.end() && it->is_string()) {
        out.context_text = it->get<std::string>();
    }
    if (auto it = rec.find("source_url"); it != rec.end() && it->is_string()) {
        out.source_url = it->get<std::string>();
    }
    if (auto it = rec.find("source_doc_id"); it != rec.end() && it->is_string()) {
        out.source_doc_id = it->get<std::string>();
    }
    return out;
}

QueryRecord parse_aus_record(const json& rec, std::size_t index) {
    if (!rec.is_object()) throw FormatError("record must be an object");
    QueryRecord out;
    out.query_id = id_from_json(rec, index);
    out.question = require_string(rec, "Question");
    if (out.question.empty()) throw FormatError("empty \"Question\"");
    out.source_url = require_string(rec, "document URL");
    out.context_text = require_string(rec, "Context");
    out.gold_answer = require_string(rec, "Answer");
    if (auto it = rec.find("Document MetaData"); it != rec.end() && !it->is_null()) {
        if (it->is_object()) {
            for (const auto& [k, v] : it->items()) {
                out.source_meta[k] = sanitize_plain_text(json_scalar_to_string(v));
            }
        } else {
            out.source_meta["text"] = sanitize_plain_text(json_scalar_to_string(*it));
        }
    }
    return out;
}

// Splits the content into raw record values: a JSON array, a {"tests": [...]}
// wrapper, a single object, or JSON-lines. Per-line parse failures become
// record errors.
std::vector<std::pair<std::size_t, json>> split_records(std::string_view content,
                                                        std::vector<RecordError>& errors) {
    std::vector<std::pair<std::size_t, json>> out;
    if (content.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;
    json whole = json::parse(content, nullptr, false);
    if (!whole.is_discarded()) {
        if (whole.is_object()) {
            if (auto it = whole.find("tests"); it != whole.end() && it->is_array()) {
                json tests = std::move(*it);
                whole = std::move(tests);
            } else {
                json single = std::move(whole);
                whole = json::array({std::move(single)});
            }
        }
        if (!whole.is_array()) throw FormatError("dataset must be a JSON array or JSON-lines");
        for (std::size_t i = 0; i < whole.size(); ++i) out.emplace_back(i, std::move(whole[i]));
        return out;
    }
    const auto first = content.find_first_not_of(" \t\r\n");
    if (content[first] == '[') throw FormatError("dataset is not valid JSON");
    std::size_t index = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            errors.push_back({index, "invalid JSON line"});
        } else {
            out.emplace_back(index, std::move(rec));
        }
        ++index;
    }
    return out;
}

bool is_url_safe(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '-';
}

} // namespace

DocumentCollection::DocumentCollection(std::vector<Document> docs) : docs_(std::move(docs)) {
    std::sort(docs_.begin(), docs_.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (docs_[i].text.empty()) {
            throw FormatError("document \"" + docs_[i].doc_id + "\" has empty text");
        }
        if (i > 0 && docs_[i].doc_id == docs_[i - 1].doc_id) {
            throw FormatError("duplicate doc_id \"" + docs_[i].doc_id + "\"");
        }
        if (docs_[i].meta.source_url) {
            by_url_.emplace(*docs_[i].meta.source_url, i);
        }
    }
}

const Document* DocumentCollection::find(std::string_view doc_id) const noexcept {
    auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                               [](const Document& d, std::string_view id) { return d.doc_id < id; });
    if (it == docs_.end() || it->doc_id != doc_id) return nullptr;
    return &*it;
}

const Document& DocumentCollection::at(std::string_view doc_id) const {
    const auto* doc = find(doc_id);
    if (!doc) throw std::out_of_range("unknown doc_id \"" + std::string(doc_id) + "\"");
    return *doc;
}

const Document* DocumentCollection::find_by_source_url(std::string_view url) const noexcept {
    auto it = by_url_.find(url);
    return it == by_url_.end() ? nullptr : &docs_[it->second];
}

std::map<std::string, DocumentMeta> parse_manifest(std::string_view json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw FormatError("manifest must be a JSON object mapping doc_id to metadata");
    }
    std::map<std::string, DocumentMeta> out;
    for (const auto& [doc_id, entry] : doc.items()) {
        out.emplace(doc_id, meta_from_json(entry));
    }
    return out;
}

LoadResult load_documents(const fs::path& root, const std::optional<fs::path>& manifest) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IoError("corpus root is not a directory: " + root.string());
    }
    std::map<std::string, DocumentMeta> metas;
    std::optional<fs::path> manifest_abs;
    if (manifest) {
        metas = parse_manifest(read_file_bytes(*manifest));
        manifest_abs = fs::weakly_canonical(*manifest, ec);
    }

    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file(ec)) continue;
        files.push_back(it->path());
    }
    if (ec) {
        throw IoError("failed to walk " + root.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end());

    LoadResult result;
    std::vector<Document> docs;
    for (const auto& path : files) {
        const auto rel = fs::relative(path, root, ec);
        if (ec || is_hidden(rel)) continue;
        if (manifest_abs && fs::weakly_canonical(path, ec) == *manifest_abs) continue;
        const auto doc_id = rel.generic_string();
        std::string bytes;
        try {
            bytes = read_file_bytes(path);
        } catch (const Error& e) {
            result.errors.push_back({doc_id, e.what()});
            continue;
        }
        if (bytes.empty()) {
            result.errors.push_back({doc_id, "empty document"});
            continue;
        }
        if (!is_valid_utf8(bytes)) {
            result.errors.push_back({doc_id, "file is not valid UTF-8"});
            continue;
        }
        Document doc{doc_id, Utf8Text(std::move(bytes)), {}};
        if (auto it = metas.find(doc_id); it != metas.end()) {
            doc.meta = it->second;
        }
        docs.push_back(std::move(doc));
    }
    result.collection = DocumentCollection(std::move(docs));
    return result;
}

QaFormat parse_qa_format(std::string_view name) {
    if (name == "snippet_qa") return QaFormat::snippet_qa;
    if (name == "aus_legal_qa") return QaFormat::aus_legal_qa;
    throw ConfigError("unknown dataset format \"" + std::string(name) + "\"");
}

std::string_view to_string(QaFormat format) noexcept {
    return format == QaFormat::snippet_qa ? "snippet_qa" : "aus_legal_qa";
}

QaLoadResult parse_qa_dataset(std::string_view content, QaFormat format) {
    QaLoadResult result;
    auto raw = split_records(content, result.errors);
    for (auto& [index, rec] : raw) {
        try {
            result.records.push_back(format == QaFormat::snippet_qa ? parse_snippet_record(rec, index)
                                                                    : parse_aus_record(rec, index));
        } catch (const std::exception& e) {
            result.errors.push_back({index, e.what()});
        }
    }
    std::sort(result.errors.begin(), result.errors.end(),
              [](const RecordError& a, const RecordError& b) { return a.index < b.index; });
    return result;
}

QaLoadResult load_qa_dataset(const fs::path& path, QaFormat format) {
    return parse_qa_dataset(read_file_bytes(path), format);
}

std::string url_to_doc_id(std::string_view url) {
    if (auto p = url.find("://"); p != std::string_view::npos) url.remove_prefix(p + 3);
    std::string out;
    bool pending_sep = false;
    for (char c : url) {
        if (is_url_safe(c)) {
            if (pending_sep && !out.empty()) out.push_back('_');
            pending_sep = false;
            out.push_back(c);
        } else {
            pending_sep = true;
        }
    }
    return out + ".txt";
}

std::size_t resolve_source_documents(std::vector<QueryRecord>& records, const DocumentCollection& docs) {
    std::size_t unresolved = 0;
    for (auto& rec : records) {
        if (rec.source_doc_id && docs.find(*rec.source_doc_id)) continue;
        rec.source_doc_id.reset();
        if (rec.source_url) {
            if (const auto* d = docs.find_by_source_url(*rec.source_url)) {
                rec.source_doc_id = d->doc_id;
            } else if (const auto* d2 = docs.find(url_to_doc_id(*rec.source_url))) {
                rec.source_doc_id = d2->doc_id;
            } else if (const auto* d3 = docs.find(*rec.source_url)) {
                rec.source_doc_id = d3->doc_id;
            }
        }
        if (!rec.source_doc_id) ++unresolved;
    }
    return unresolved;
}

std::vector<RecordError> rebase_byte_spans(std::vector<QueryRecord>& records, const DocumentCollection& docs) {
    std::vector<RecordError> errors;
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (auto& span : records[i].gold_spans) {
            const auto* doc = docs.find(span.doc_id);
            if (!doc) {
                errors.push_back({i, "unresolved doc_id \"" + span.doc_id + "\""});
                continue;
            }
            const auto s = doc->text.char_index_of_byte(span.start);
            const auto e = doc->text.char_index_of_byte(span.end);
            if (s == static_cast<std::size_t>(-1) || e == static_cast<std::size_t>(-1)) {
                errors.push_back({i, "byte span [" + std::to_string(span.start) + ", " +
                                         std::to_string(span.end) + ") is not on character boundaries"});
                continue;
            }
            span.start = s;
            span.end = e;
        }
    }
    return errors;
}

std::string_view to_string(FindingKind kind) noexcept {
    switch (kind) {
    case FindingKind::unresolved_doc: return "unresolved_doc";
    case FindingKind::out_of_bounds: return "out_of_bounds";
    case FindingKind::text_mismatch: return "text_mismatch";
    }
    return "unknown";
}

ValidationReport validate_annotations(const std::vector<QueryRecord>& records, const DocumentCollection& docs) {
    ValidationReport report;
    report.records = records.size();
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto before = report.findings.size();
        for (std::size_t s = 0; s < rec.gold_spans.size(); ++s) {
            const auto& span = rec.gold_spans[s];
            ++report.spans;
            SpanFinding f;
            f.record_index = r;
            f.query_id = rec.query_id;
            f.span_index = s;
            f.doc_id = span.doc_id;
            const auto* doc = docs.find(span.doc_id);
            if (!doc) {
                f.kind = FindingKind::unresolved_doc;
                f.message = "doc_id not in collection";
                report.findings.push_back(std::move(f));
                continue;
            }
            if (span.start >= span.end || span.end > doc->text.size()) {
                f.kind = FindingKind::out_of_bounds;
                f.message = "span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                            ") outside document of length " + std::to_string(doc->text.size());
                report.findings.push_back(std::move(f));
                continue;
            }
            const auto slice = doc->text.slice(span.start, span.end);
            const auto norm_slice = normalize_whitespace(slice);
            const auto norm_answer = normalize_whitespace(span.answer_text);
            if (norm_slice == norm_answer) continue;
            f.kind = FindingKind::text_mismatch;
            f.raw_match = slice == span.answer_text;
            f.normalized_match = false;
            f.casefold_match = ascii_lower(norm_slice) == ascii_lower(norm_answer);
            f.message = f.casefold_match ? "slice differs from answer only in letter case"
                                         : "slice differs from answer text";
            report.findings.push_back(std::move(f));
        }
        if (report.findings.size() == before) ++report.clean_records;
    }
    return report;
}

} // namespace lexrag
