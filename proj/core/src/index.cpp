#include "lexrag/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lexrag/checksum.hpp"
#include "lexrag/error.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

namespace {

constexpr char kMagic[8] = {'L', 'X', 'R', 'G', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void sort_ranked(std::vector<ScoredRef>& v, const std::vector<std::string>& ids) {
    std::sort(v.begin(), v.end(), [&](const ScoredRef& a, const ScoredRef& b) {
        if (a.score != b.score) return a.score > b.score;
        return ids[a.ref] < ids[b.ref];
    });
}

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(bits);
    }
    void f64(double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        u64(bits);
    }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    std::string& bytes() noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() {
        const auto bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    double f64() {
        const auto bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw FormatError("index payload truncated");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

void write_index_file(const std::filesystem::path& path, nlohmann::json header, const std::string& payload) {
    header["format_version"] = kFormatVersion;
    header["checksum"] = "sha256:" + sha256_hex(payload);
    const auto head = header.dump();
    ByteWriter w;
    w.bytes().append(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(head.size()));
    w.bytes() += head;
    w.bytes() += payload;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("write failed for " + path.string());
}

struct IndexFile {
    nlohmann::json header;
    std::string payload;
};

IndexFile read_index_file(const std::filesystem::path& path, std::string_view kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < sizeof kMagic + 8 || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) {
        throw FormatError(path.string() + " is not a lexrag index file");
    }
    ByteReader r(std::string_view(data).substr(sizeof kMagic));
    const auto version = r.u32();
    if (version != kFormatVersion) {
        throw FormatError("unsupported index format version " + std::to_string(version));
    }
    const auto head_len = r.u32();
    const std::size_t head_at = sizeof kMagic + 8;
    if (data.size() - head_at < head_len) throw FormatError("index header truncated");
    IndexFile f;
    try {
        f.header = nlohmann::json::parse(data.substr(head_at, head_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad index header: ") + e.what());
    }
    f.payload = data.substr(head_at + head_len);
    if (f.header.value("kind", "") != kind) {
        throw FormatError(path.string() + " is not a " + std::string(kind) + " index");
    }
    if (f.header.value("checksum", "") != "sha256:" + sha256_hex(f.payload)) {
        throw FormatError("checksum mismatch in " + path.string());
    }
    return f;
}

} // namespace

const std::vector<Posting>* SparseIndex::postings(std::string_view term) const {
    const auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double SparseIndex::idf(std::string_view term) const {
    const auto* p = postings(term);
    if (p == nullptr) return 0.0;
    const double n = static_cast<double>(size());
    const double nt = static_cast<double>(p->size());
    return std::log((n - nt + 0.5) / (nt + 0.5) + 1.0);
}

void SparseIndex::finalize() {
    double total = 0.0;
    for (auto len : doc_lengths_) total += static_cast<double>(len);
    avg_len_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

SparseIndex build_sparse(const std::vector<IndexedText>& chunks, const Bm25Params& params) {
    if (chunks.empty()) throw ConfigError("cannot build a sparse index over no chunks");
    SparseIndex idx;
    idx.params_ = params;
    std::set<std::string_view> seen;
    for (ChunkRef ref = 0; ref < chunks.size(); ++ref) {
        if (!seen.insert(chunks[ref].chunk_id).second) throw ConfigError("duplicate chunk id " + chunks[ref].chunk_id);
        idx.chunk_ids_.push_back(chunks[ref].chunk_id);
        const auto terms = lexical_terms(chunks[ref].text);
        idx.doc_lengths_.push_back(terms.size());
        std::map<std::string_view, std::size_t> tf;
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, count] : tf) {
            auto it = idx.postings_.find(term);
            if (it == idx.postings_.end()) it = idx.postings_.emplace(std::string(term), std::vector<Posting>{}).first;
            it->second.push_back({ref, count});
        }
    }
    idx.finalize();
    return idx;
}

std::vector<ScoredRef> bm25_scores(const SparseIndex& index, std::string_view query) {
    const auto terms = lexical_terms(query);
    std::unordered_map<ChunkRef, double> acc;
    const auto& p = index.params();
    const double avg = index.avg_len();
    for (const auto& t : terms) {
        const auto* postings = index.postings(t);
        if (postings == nullptr) continue;
        const double idf = index.idf(t);
        for (const auto& post : *postings) {
            const double tf = static_cast<double>(post.tf);
            const double len = static_cast<double>(index.doc_lengths()[post.ref]);
            const double norm = avg > 0.0 ? len / avg : 0.0;
            acc[post.ref] += idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
        }
    }
    std::vector<ScoredRef> out;
    out.reserve(acc.size());
    for (const auto& [ref, score] : acc) {
        if (score > 0.0) out.push_back({ref, score});
    }
    sort_ranked(out, index.chunk_ids());
    return out;
}

DenseIndex::DenseIndex(std::vector<std::string> chunk_ids, const std::vector<Vector>& vectors, std::string backend)
    : chunk_ids_(std::move(chunk_ids)), backend_(std::move(backend)) {
    if (chunk_ids_.size() != vectors.size()) throw ConfigError("chunk id and vector counts differ");
    std::set<std::string_view> seen;
    for (const auto& id : chunk_ids_) {
        if (!seen.insert(id).second) throw ConfigError("duplicate chunk id " + id);
    }
    dim_ = vectors.empty() ? 0 : vectors.front().size();
    data_.reserve(vectors.size() * dim_);
    for (auto v : vectors) {
        if (v.size() != dim_) throw ConfigError("vectors have inconsistent dimensions");
        l2_normalize(v);
        data_.insert(data_.end(), v.begin(), v.end());
    }
}

DenseIndex build_dense(const std::vector<IndexedText>& chunks, const EmbeddingProvider& provider,
                       std::size_t workers) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(chunks.size());
    texts.reserve(chunks.size());
    for (const auto& c : chunks) {
        ids.push_back(c.chunk_id);
        texts.push_back(c.text);
    }
    auto vectors = embed(provider, texts, workers);
    return DenseIndex(std::move(ids), vectors, provider.backend_tag());
}

std::vector<ScoredRef> dense_search(const DenseIndex& index, const Vector& query, std::size_t n) {
    if (n == 0) throw ConfigError("dense_search needs n >= 1");
    if (index.size() == 0) return {};
    if (query.size() != index.dim()) {
        throw ConfigError("query dimension " + std::to_string(query.size()) + " != index dimension " +
                          std::to_string(index.dim()));
    }
    std::vector<ScoredRef> all(index.size());
    for (ChunkRef r = 0; r < index.size(); ++r) {
        const float* row = index.row(r);
        double s = 0.0;
        for (std::size_t j = 0; j < index.dim(); ++j) s += static_cast<double>(row[j]) * query[j];
        all[r] = {r, s};
    }
    const auto& ids = index.chunk_ids();
    auto better = [&](const ScoredRef& a, const ScoredRef& b) {
        if (a.score != b.score) return a.score > b.score;
        return ids[a.ref] < ids[b.ref];
    };
    const auto keep = std::min(n, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
    all.resize(keep);
    return all;
}

void save_sparse(const SparseIndex& index, const std::filesystem::path& path) {
    ByteWriter w;
    w.u64(index.size());
    for (auto len : index.doc_lengths()) w.u64(len);
    w.u64(index.all_postings().size());
    for (const auto& [term, list] : index.all_postings()) {
        w.str(term);
        w.u64(list.size());
        for (const auto& p : list) {
            w.u64(p.ref);
            w.u64(p.tf);
        }
    }
    nlohmann::json header = {
        {"kind", "sparse"},
        {"n", index.size()},
        {"dim", 0},
        {"backend", "bm25"},
        {"k1", index.params().k1},
        {"b", index.params().b},
        {"avg_len", index.avg_len()},
        {"ids", index.chunk_ids()},
    };
    write_index_file(path, std::move(header), w.bytes());
}

SparseIndex load_sparse(const std::filesystem::path& path) {
    auto f = read_index_file(path, "sparse");
    SparseIndex idx;
    try {
        idx.chunk_ids_ = f.header.at("ids").get<std::vector<std::string>>();
        idx.params_.k1 = f.header.at("k1").get<double>();
        idx.params_.b = f.header.at("b").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad sparse index header: ") + e.what());
    }
    ByteReader r(f.payload);
    const auto n = r.u64();
    if (n != idx.chunk_ids_.size()) throw FormatError("sparse index size mismatch");
    for (std::uint64_t i = 0; i < n; ++i) idx.doc_lengths_.push_back(r.u64());
    const auto terms = r.u64();
    for (std::uint64_t t = 0; t < terms; ++t) {
        auto term = r.str();
        const auto count = r.u64();
        std::vector<Posting> list;
        list.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            Posting p;
            p.ref = r.u64();
            p.tf = r.u64();
            if (p.ref >= n) throw FormatError("posting refers past the chunk list");
            list.push_back(p);
        }
        idx.postings_.emplace(std::move(term), std::move(list));
    }
    if (!r.done()) throw FormatError("trailing bytes in sparse index");
    idx.finalize();
    return idx;
}

void save_dense(const DenseIndex& index, const std::filesystem::path& path) {
    ByteWriter w;
    for (float x : index.data()) w.f32(x);
    nlohmann::json header = {
        {"kind", "dense"},
        {"n", index.size()},
        {"dim", index.dim()},
        {"backend", index.backend()},
        {"ids", index.chunk_ids()},
    };
    write_index_file(path, std::move(header), w.bytes());
}

DenseIndex load_dense(const std::filesystem::path& path) {
    auto f = read_index_file(path, "dense");
    DenseIndex idx;
    std::size_t n = 0;
    try {
        idx.chunk_ids_ = f.header.at("ids").get<std::vector<std::string>>();
        idx.dim_ = f.header.at("dim").get<std::size_t>();
        idx.backend_ = f.header.at("backend").get<std::string>();
        n = f.header.at("n").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dense index header: ") + e.what());
    }
    if (n != idx.chunk_ids_.size()) throw FormatError("dense index size mismatch");
    if (f.payload.size() != n * idx.dim_ * 4) throw FormatError("dense index payload has the wrong size");
    ByteReader r(f.payload);
    idx.data_.resize(n * idx.dim_);
    for (auto& x : idx.data_) x = r.f32();
    return idx;
}

} // namespace lexrag
