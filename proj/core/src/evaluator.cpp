#include "lexrag/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"
#include "lexrag/random.hpp"
#include "lexrag/stats.hpp"

namespace lexrag {

namespace {

std::size_t prefix_len(const RetrievalResult& r, std::size_t k) { return std::min(k, r.ranked.size()); }

MetricStats summarize(const std::vector<double>& values, const SweepOptions& opts, std::uint64_t stream) {
    MetricStats s;
    s.n = values.size();
    if (values.empty()) return s;
    s.mean = mean(values);
    const auto b = bootstrap_ci(values, opts.bootstrap_iterations, opts.level, derive_seed(opts.seed, stream),
                                opts.workers);
    s.ci_lo = b.lo;
    s.ci_hi = b.hi;
    s.range_lo = b.min;
    s.range_hi = b.max;
    return s;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return buf;
}

std::string cell(double m, double lo, double hi) { return pct(m) + " (" + pct(lo) + "-" + pct(hi) + ")"; }

std::string render_grid(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c > 0) out << "  ";
            out << r[c];
            if (c + 1 < r.size()) out << std::string(width[c] - r[c].size(), ' ');
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
}

} // namespace

ChunkTable::ChunkTable(const std::vector<Chunk>& chunks) {
    for (const auto& c : chunks) add(c.chunk_id, {c.doc_id, c.start, c.end});
}

void ChunkTable::add(std::string chunk_id, ChunkLocation loc) {
    docs_.insert(loc.doc_id);
    if (!table_.emplace(std::move(chunk_id), std::move(loc)).second) throw FormatError("duplicate chunk id in table");
}

const ChunkLocation& ChunkTable::at(std::string_view chunk_id) const {
    const auto it = table_.find(chunk_id);
    if (it == table_.end()) throw FormatError("unknown chunk id " + std::string(chunk_id));
    return it->second;
}

std::optional<double> drm(const RetrievalResult& result, const std::set<std::string>& gold_docs,
                          const ChunkTable& table, std::size_t k) {
    const auto n = prefix_len(result, k);
    if (n == 0) return std::nullopt;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) wrong += gold_docs.count(table.at(result.ranked[i].chunk_id).doc_id) ? 0 : 1;
    return static_cast<double>(wrong) / static_cast<double>(n);
}

std::optional<double> drm_query_level(const RetrievalResult& result, const std::set<std::string>& gold_docs,
                                      const ChunkTable& table, std::size_t k) {
    const auto d = drm(result, gold_docs, table, k);
    if (!d) return std::nullopt;
    return *d > 0.0 ? 1.0 : 0.0;
}

double span_recall(const RetrievalResult& result, const std::vector<GoldSpan>& gold, const ChunkTable& table,
                   std::size_t k) {
    if (gold.empty()) throw ConfigError("span recall needs at least one gold span");
    const auto n = prefix_len(result, k);
    std::size_t pairs = 0;
    for (const auto& g : gold) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& loc = table.at(result.ranked[i].chunk_id);
            if (loc.doc_id == g.doc_id && std::max(loc.start, g.start) < std::min(loc.end, g.end)) ++pairs;
        }
    }
    return static_cast<double>(pairs) / static_cast<double>(gold.size());
}

MetricReport sweep_results(const std::vector<QueryRecord>& records, const std::vector<RetrievalResult>& results,
                           const ChunkTable& table, const SweepOptions& opts) {
    if (opts.ks.empty()) throw ConfigError("no k values to evaluate");
    for (auto k : opts.ks) {
        if (k == 0) throw ConfigError("k values must be >= 1");
    }
    MetricReport report;
    report.dataset = opts.dataset;
    report.variant = opts.variant;
    report.ks = opts.ks;
    std::sort(report.ks.begin(), report.ks.end());
    report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
    report.bootstrap_iterations = opts.bootstrap_iterations;
    report.level = opts.level;
    report.seed = opts.seed;

    std::map<std::string_view, const RetrievalResult*> by_id;
    for (const auto& r : results) by_id[r.query_id] = &r;

    struct Scored {
        const QueryRecord* record;
        const RetrievalResult* result;
        std::set<std::string> gold_docs;
    };
    std::vector<Scored> scored;
    std::set<std::string_view> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.query_id).second) throw FormatError("duplicate query id " + rec.query_id);
        Scored s{&rec, nullptr, {}};
        for (const auto& g : rec.gold_spans) {
            if (table.has_doc(g.doc_id)) s.gold_docs.insert(g.doc_id);
        }
        const auto it = by_id.find(rec.query_id);
        if (rec.gold_spans.empty()) {
            report.excluded.push_back({rec.query_id, "no gold spans"});
        } else if (s.gold_docs.empty()) {
            report.excluded.push_back({rec.query_id, "no gold document is indexed"});
        } else if (it == by_id.end()) {
            report.excluded.push_back({rec.query_id, "no retrieval result"});
        } else if (it->second->ranked.empty()) {
            report.excluded.push_back({rec.query_id, "empty ranking"});
        } else {
            s.result = it->second;
            scored.push_back(std::move(s));
        }
    }

    std::vector<std::map<std::size_t, QueryValues>> values(scored.size());
    parallel_for(scored.size(), opts.workers, [&](std::size_t i) {
        const auto& s = scored[i];
        for (auto k : report.ks) {
            QueryValues v;
            v.drm = *drm(*s.result, s.gold_docs, table, k);
            v.drm_query_level = *drm_query_level(*s.result, s.gold_docs, table, k);
            v.span_recall = span_recall(*s.result, s.record->gold_spans, table, k);
            values[i][k] = v;
        }
    });
    for (std::size_t i = 0; i < scored.size(); ++i) report.per_query[scored[i].record->query_id] = values[i];

    std::uint64_t stream = 0;
    for (auto k : report.ks) {
        std::vector<double> d, q, s;
        for (const auto& v : values) {
            d.push_back(v.at(k).drm);
            q.push_back(v.at(k).drm_query_level);
            s.push_back(v.at(k).span_recall);
        }
        auto& km = report.per_k[k];
        km.drm = summarize(d, opts, stream++);
        km.drm_query_level = summarize(q, opts, stream++);
        km.span_recall = summarize(s, opts, stream++);
    }
    return report;
}

MetricReport sweep(const std::vector<QueryRecord>& records, const HybridRetriever& retriever, FusionConfig fusion,
                   const ChunkTable& table, const SweepOptions& opts) {
    if (opts.ks.empty()) throw ConfigError("no k values to evaluate");
    fusion.k = *std::max_element(opts.ks.begin(), opts.ks.end());
    std::vector<HybridRetriever::Query> queries;
    for (const auto& r : records) queries.push_back({r.query_id, r.question});
    const auto results = retriever.retrieve_batch(queries, fusion, opts.workers);
    return sweep_results(records, results, table, opts);
}

std::size_t comparison_count(const MetricReport& baseline, const MetricReport& enhanced) {
    std::size_t shared = 0;
    for (auto k : baseline.ks) shared += std::count(enhanced.ks.begin(), enhanced.ks.end(), k) ? 1 : 0;
    return shared * 2;
}

std::vector<PairedComparison> compare_reports(const MetricReport& baseline, const MetricReport& enhanced,
                                              const CompareOptions& opts) {
    const std::size_t m = comparison_count(baseline, enhanced);
    std::vector<std::string> shared;
    for (const auto& [id, _] : baseline.per_query) {
        if (enhanced.per_query.count(id)) shared.push_back(id);
    }
    std::vector<PairedComparison> out;
    if (m == 0 || shared.size() < 2) return out;

    std::uint64_t stream = 0;
    for (auto k : baseline.ks) {
        if (!std::count(enhanced.ks.begin(), enhanced.ks.end(), k)) continue;
        for (const char* metric : {"drm", "span_recall"}) {
            const bool is_drm = std::string_view(metric) == "drm";
            std::vector<double> a, b, delta;
            for (const auto& id : shared) {
                const auto& bv = baseline.per_query.at(id).at(k);
                const auto& ev = enhanced.per_query.at(id).at(k);
                a.push_back(is_drm ? ev.drm : ev.span_recall);
                b.push_back(is_drm ? bv.drm : bv.span_recall);
                delta.push_back(a.back() - b.back());
            }
            PairedComparison c;
            c.metric = metric;
            c.k = k;
            c.n = shared.size();
            c.baseline_mean = mean(b);
            c.enhanced_mean = mean(a);
            c.delta_mean = mean(delta);
            const auto ci = bootstrap_ci(delta, opts.bootstrap_iterations, opts.level,
                                         derive_seed(opts.seed, stream++), opts.workers);
            c.delta_lo = ci.lo;
            c.delta_hi = ci.hi;
            const auto t = paired_ttest(a, b);
            c.t = t.t;
            c.p_value = t.p;
            c.degenerate = t.degenerate;
            c.p_adjusted = bonferroni(t.p, m);
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::string render_metric_table(const MetricReport& report) {
    std::vector<std::string> header{"metric"};
    for (auto k : report.ks) header.push_back("k=" + std::to_string(k));
    auto rows_for = [&](bool range) {
        std::vector<std::vector<std::string>> rows;
        auto row = [&](const std::string& name, auto pick) {
            std::vector<std::string> r{name};
            for (auto k : report.ks) {
                const MetricStats& s = pick(report.per_k.at(k));
                r.push_back(range ? cell(s.mean, s.range_lo, s.range_hi) : cell(s.mean, s.ci_lo, s.ci_hi));
            }
            rows.push_back(std::move(r));
        };
        row("DRM (%)", [](const KMetrics& m) -> const MetricStats& { return m.drm; });
        row("DRM query-level (%)", [](const KMetrics& m) -> const MetricStats& { return m.drm_query_level; });
        row("Span Recall (%)", [](const KMetrics& m) -> const MetricStats& { return m.span_recall; });
        return rows;
    };
    std::ostringstream out;
    out << report.dataset << " / " << report.variant << " (" << report.per_query.size() << " queries, "
        << report.excluded.size() << " excluded)\n";
    out << "bootstrap " << pct(report.level) << "% CI:\n" << render_grid(header, rows_for(false));
    out << "bootstrap min-max range:\n" << render_grid(header, rows_for(true));
    return out.str();
}

std::string render_comparison_table(const std::vector<PairedComparison>& comparisons, std::size_t m) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : comparisons) {
        char p[32], pa[32], t[32];
        std::snprintf(p, sizeof p, "%.4g", c.p_value);
        std::snprintf(pa, sizeof pa, "%.4g", c.p_adjusted);
        std::snprintf(t, sizeof t, "%.3f", c.t);
        rows.push_back({c.metric, std::to_string(c.k), std::to_string(c.n), pct(c.baseline_mean), pct(c.enhanced_mean),
                        cell(c.delta_mean, c.delta_lo, c.delta_hi), t, p, pa + std::string(c.degenerate ? " *" : "")});
    }
    std::ostringstream out;
    out << "paired comparisons (enhanced - baseline, Bonferroni m=" << m << "):\n";
    out << render_grid({"metric", "k", "n", "baseline %", "enhanced %", "delta % (CI)", "t", "p", "p_adj"}, rows);
    return out.str();
}

} // namespace lexrag
