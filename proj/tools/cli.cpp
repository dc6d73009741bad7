#include "cli.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lexrag/error.hpp"
#include "lexrag/pipeline.hpp"

namespace lexrag {

namespace {

// Flag values that override the config file when given.
struct Overrides {
    std::string config;
    std::optional<std::string> corpus;
    std::optional<std::string> manifest;
    std::optional<std::string> dataset;
    std::optional<std::string> format;
    std::optional<std::string> dataset_name;
    bool byte_offsets = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::vector<std::size_t> ks;
    std::optional<double> alpha;
    std::optional<std::string> variant;
    std::optional<std::string> embedder;
    std::optional<std::string> summarizer;
    std::optional<std::size_t> top;
    std::optional<std::size_t> bootstrap_iterations;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--corpus", o.corpus, "corpus directory");
    cmd->add_option("--manifest", o.manifest, "corpus metadata manifest (JSON)");
    cmd->add_option("--dataset", o.dataset, "QA dataset file");
    cmd->add_option("--format", o.format, "dataset format")
        ->check(CLI::IsMember({"snippet_qa", "aus_legal_qa"}));
    cmd->add_option("--dataset-name", o.dataset_name, "dataset label used in reports");
    cmd->add_flag("--byte-offsets", o.byte_offsets, "gold spans are UTF-8 byte offsets");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--k", o.ks, "comma-separated k values")->delimiter(',');
    cmd->add_option("--alpha", o.alpha, "dense weight in hybrid fusion")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--variant", o.variant, "chunk variant")->check(CLI::IsMember({"baseline", "enhanced"}));
    cmd->add_option("--embedder", o.embedder, "embedding backend")
        ->check(CLI::IsMember({"deterministic", "remote"}));
    cmd->add_option("--summarizer", o.summarizer, "summary backend")->check(CLI::IsMember({"extractive", "remote"}));
    cmd->add_option("--top", o.top, "chunks per generated context")->check(CLI::PositiveNumber);
    cmd->add_option("--bootstrap-iterations", o.bootstrap_iterations, "bootstrap resamples")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "run directory");
}

PipelineConfig build_config(const Overrides& o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);
    if (o.corpus) c.corpus = *o.corpus;
    if (o.manifest) c.manifest = *o.manifest;
    if (o.dataset) c.dataset = *o.dataset;
    if (o.format) c.format = parse_qa_format(*o.format);
    if (o.dataset_name) c.dataset_name = *o.dataset_name;
    if (o.byte_offsets) c.byte_offsets = true;
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (!o.ks.empty()) c.ks = o.ks;
    if (o.alpha) c.fusion.alpha = *o.alpha;
    if (o.variant) c.variant = parse_variant(*o.variant);
    if (o.embedder) c.embedder.backend = *o.embedder;
    if (o.summarizer) c.summarizer.backend = *o.summarizer;
    if (o.top) c.top = *o.top;
    if (o.bootstrap_iterations) c.bootstrap_iterations = *o.bootstrap_iterations;
    if (o.out) c.out = *o.out;
    c.split.seed = c.seed;
    return c;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"lexrag: chunking, enrichment, hybrid retrieval and evaluation for legal QA"};
    app.name("lexrag");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Overrides o;
    std::function<nlohmann::json(const PipelineConfig&)> action;
    auto command = [&](const char* name, const char* help, auto fn) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, o);
        cmd->callback([&action, fn] { action = fn; });
        return cmd;
    };

    command("ingest", "load the corpus and dataset, validate annotations", run_ingest);
    command("chunk", "split documents into overlapping chunks", run_chunk);
    command("enrich", "attach metadata headers and window summaries", run_enrich);
    command("index", "build the BM25 and dense indexes", run_index);
    command("retrieve", "hybrid retrieval and top-n contexts for every query", run_retrieve);
    command("eval-retrieval", "DRM and span recall sweep over k", run_eval_retrieval);
    command("align-spans", "reconstruct gold spans from free-text answers", run_align_spans);

    auto* dpo = command("dpo-build", "split the dataset and build preference pairs", run_dpo_build);
    std::optional<std::string> prompt;
    bool conversation = false;
    dpo->add_option("--prompt", prompt, "prompt template")->check(CLI::IsMember({"with", "without"}));
    dpo->add_flag("--conversation", conversation, "export conversation-style records");

    std::string outputs;
    std::optional<std::string> mode;
    auto* refusal = command("eval-refusal", "refusal rates of model outputs", [&](const PipelineConfig& c) {
        PipelineConfig cfg = c;
        if (mode) cfg.refusal.mode = parse_refusal_mode(*mode);
        return run_eval_refusal(cfg, outputs);
    });
    refusal->add_option("--outputs", outputs, "model outputs JSON-lines")->required();
    refusal->add_option("--mode", mode, "primary matching mode")->check(CLI::IsMember({"strict", "soft"}));

    AnswerEvalInputs answers;
    std::string refs;
    auto* ans = command("eval-answers", "token F1 of two prediction sets", [&](const PipelineConfig& c) {
        if (!refs.empty()) answers.references = refs;
        return run_eval_answers(c, answers);
    });
    ans->add_option("--predictions-a", answers.predictions_a, "first predictions JSON-lines")->required();
    ans->add_option("--predictions-b", answers.predictions_b, "second predictions JSON-lines")->required();
    ans->add_option("--references", refs, "reference answers JSON-lines");

    std::string baseline;
    std::string enhanced;
    auto* cmp = command("compare", "paired comparison of two evaluated runs", [&](const PipelineConfig& c) {
        return run_compare(c, baseline, enhanced);
    });
    cmp->add_option("--baseline", baseline, "baseline run directory")->required();
    cmp->add_option("--enhanced", enhanced, "enhanced run directory")->required();

    command("report", "render collected reports as text", run_report);

    if (argc > 1 && argv[1][0] != '-') {
        try {
            app.get_subcommand(argv[1]);
        } catch (const CLI::OptionNotFound&) {
            err << "unknown command: " << argv[1] << "\n\n" << app.help();
            return 2;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        PipelineConfig cfg = build_config(o);
        if (prompt) cfg.prompt = parse_prompt_template(*prompt);
        if (conversation) cfg.conversation_export = true;
        out << action(cfg).dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        print_error(err, e.kind(), e.what());
    } catch (const nlohmann::json::exception& e) {
        print_error(err, "format", e.what());
    } catch (const std::exception& e) {
        print_error(err, "internal", e.what());
    }
    return 1;
}

} // namespace lexrag
