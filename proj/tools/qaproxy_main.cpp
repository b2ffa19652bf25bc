// Command-line front end for the QA-as-proxy fact verification pipeline.
// Subcommands mirror the pipeline stages: synth -> ingest -> answer ->
// embed -> train/eval/baseline/explain. Every artifact gets a
// `.manifest.json` sidecar recording the command, options, and input digests.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qaproxy/embed.hpp"
#include "qaproxy/eval.hpp"
#include "qaproxy/ingest.hpp"
#include "qaproxy/manifest.hpp"
#include "qaproxy/model.hpp"
#include "qaproxy/pipeline.hpp"
#include "qaproxy/qa_client.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

using namespace qaproxy;

std::string join_argv(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

// "0,1,2", "0-4", or a mix: "0-2,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    auto read_number = [&]() -> std::uint64_t {
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) throw Error("invalid seed list: " + text);
        return std::stoull(text.substr(start, pos - start));
    };
    while (pos < text.size()) {
        std::uint64_t first = read_number();
        if (pos < text.size() && text[pos] == '-') {
            ++pos;
            std::uint64_t last = read_number();
            if (last < first) throw Error("invalid seed range: " + text);
            for (std::uint64_t s = first; s <= last; ++s) seeds.push_back(s);
        } else {
            seeds.push_back(first);
        }
        if (pos < text.size()) {
            if (text[pos] != ',') throw Error("invalid seed list: " + text);
            ++pos;
        }
    }
    if (seeds.empty()) throw Error("invalid seed list: " + text);
    return seeds;
}

std::vector<Variant> parse_variants(const std::string& text) {
    if (text == "all")
        return std::vector<Variant>(kVariantOrder.begin(), kVariantOrder.end());
    std::vector<Variant> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string name =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        auto v = parse_variant(name);
        if (!v) throw Error("unknown model variant: " + name);
        out.push_back(*v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw Error("no model variants requested");
    return out;
}

void emit(const std::string& text, const std::string& out_path) {
    std::fputs(text.c_str(), stdout);
    if (!out_path.empty()) atomic_write_file(out_path, text);
}

struct SynthArgs {
    int claims = 2000;
    int n_fixed = 10;
    double noise = 0.1;
    std::uint64_t seed = 0;
    std::string out_claims;
    std::string out_qa;
};

int run_synth(const SynthArgs& args, const std::string& command) {
    eval::SyntheticData data = eval::make_synthetic(args.claims, args.n_fixed, args.noise,
                                                    args.seed);
    std::string claims_out;
    for (const ClaimRecord& rec : data.claims) {
        json j{{"id", rec.id},
               {"claim", rec.claim},
               {"evidence", rec.evidence},
               {"label", std::string(to_string(rec.label))},
               {"split", std::string(to_string(rec.split))}};
        claims_out += j.dump();
        claims_out += '\n';
    }
    atomic_write_file(args.out_claims, claims_out);

    std::string qa_out;
    for (const ClaimRecord& rec : data.claims) {
        const QASet& qs = data.qa_sets.at(rec.id);
        json pairs = json::array();
        for (const QAPair& pair : qs.pairs) {
            json pj{{"question", pair.question}, {"claim_answer", pair.claim_answer}};
            if (pair.evidence_answer) pj["evidence_answer"] = *pair.evidence_answer;
            if (pair.evidence_score) pj["evidence_score"] = *pair.evidence_score;
            pairs.push_back(std::move(pj));
        }
        qa_out += json{{"claim_id", rec.id}, {"pairs", std::move(pairs)}}.dump();
        qa_out += '\n';
    }
    atomic_write_file(args.out_qa, qa_out);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.config = {{"claims", args.claims},
                       {"n_fixed", args.n_fixed},
                       {"noise", args.noise},
                       {"seed", args.seed}};
    manifest.seeds = {args.seed};
    write_manifest(args.out_claims, manifest);
    write_manifest(args.out_qa, manifest);
    std::printf("wrote %zu claims to %s and their QA sets to %s\n", data.claims.size(),
                args.out_claims.c_str(), args.out_qa.c_str());
    return 0;
}

struct IngestArgs {
    std::string claims_path;
    std::string qa_path;
    int n_fixed = 10;
    std::string containment = "substring";
    std::string out;
};

int run_ingest(const IngestArgs& args, const std::string& command) {
    ingest::ContainmentMode mode;
    if (args.containment == "substring")
        mode = ingest::ContainmentMode::kSubstring;
    else if (args.containment == "token")
        mode = ingest::ContainmentMode::kTokenBoundary;
    else
        throw Error("unknown containment mode: " + args.containment);

    std::vector<ClaimRecord> claims = ingest::load_claims(args.claims_path);
    std::map<std::string, QASet> qa_sets = ingest::load_qa_sets(args.qa_path, claims);
    pipeline::ValidationReport report;
    pipeline::Dataset dataset = pipeline::assemble_dataset(claims, qa_sets, args.n_fixed, mode,
                                                           &report);
    pipeline::write_dataset(args.out, dataset);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.config = {{"n_fixed", args.n_fixed}, {"containment", args.containment}};
    manifest.add_input(args.claims_path);
    manifest.add_input(args.qa_path);
    write_manifest(args.out, manifest);
    std::printf("%s\n", report.to_json().dump().c_str());
    return 0;
}

struct AnswerArgs {
    std::string dataset_path;
    std::string endpoint;
    int jobs = 4;
    int timeout_ms = 5000;
    int retries = 2;
    std::string out;
};

int run_answer(const AnswerArgs& args, const std::string& command) {
    if (args.endpoint.empty())
        throw Error("no QA endpoint: pass --endpoint or set QAPROXY_QA_ENDPOINT");
    pipeline::Dataset dataset = pipeline::read_dataset(args.dataset_path);
    ingest::QAServiceEndpoint endpoint;
    endpoint.base_url = args.endpoint;
    endpoint.timeout = std::chrono::milliseconds(args.timeout_ms);
    endpoint.max_retries = args.retries;
    std::size_t calls = pipeline::fill_evidence_answers(dataset, endpoint, args.jobs);
    pipeline::write_dataset(args.out, dataset);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.config = {{"endpoint", args.endpoint},
                       {"jobs", args.jobs},
                       {"timeout_ms", args.timeout_ms},
                       {"retries", args.retries}};
    manifest.add_input(args.dataset_path);
    write_manifest(args.out, manifest);
    std::printf("filled evidence answers with %zu service calls\n", calls);
    return 0;
}

struct EmbedArgs {
    std::string dataset_path;
    std::string provider = "hash";
    int dim = 256;
    std::uint64_t hash_seed = 0;
    std::string store_path;
    std::string out;
};

int run_embed(const EmbedArgs& args, const std::string& command) {
    pipeline::Dataset dataset = pipeline::read_dataset(args.dataset_path);
    pipeline::BundleSet bundles;
    if (args.provider == "hash") {
        embed::HashEmbedder embedder(args.dim, args.hash_seed);
        bundles = pipeline::build_bundles(dataset, embedder,
                                          "hash(dim=" + std::to_string(args.dim) +
                                              ",seed=" + std::to_string(args.hash_seed) + ")");
    } else if (args.provider == "store") {
        if (args.store_path.empty()) throw Error("--provider store needs --store FILE");
        embed::StoreProvider provider(embed::EmbeddingStore::read(args.store_path));
        bundles = pipeline::build_bundles(dataset, provider, "store(" + args.store_path + ")");
    } else {
        throw Error("unknown embedding provider: " + args.provider);
    }
    pipeline::write_bundles(args.out, bundles);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.config = {{"provider", args.provider}};
    if (args.provider == "hash") {
        manifest.config["dim"] = args.dim;
        manifest.config["hash_seed"] = args.hash_seed;
    } else {
        manifest.config["store"] = args.store_path;
        manifest.add_input(args.store_path);
    }
    manifest.add_input(args.dataset_path);
    write_manifest(args.out, manifest);
    std::printf("embedded %zu claims into %s\n", bundles.records.size(), args.out.c_str());
    return 0;
}

struct BaselineArgs {
    std::string bundles_path;
    std::string metric = "token_f1";
    std::string scores_path;
    int dim = 256;
    std::uint64_t hash_seed = 0;
    std::string out;
};

int run_baseline_cmd(const BaselineArgs& args, const std::string& command) {
    auto metric = eval::parse_baseline_metric(args.metric);
    if (!metric) throw Error("unknown baseline metric: " + args.metric);
    if (*metric == eval::BaselineMetric::kExternal && args.scores_path.empty())
        throw Error("--metric external needs --scores FILE");

    pipeline::BundleSet bundles = pipeline::read_bundles(args.bundles_path);
    pipeline::Dataset dataset = pipeline::to_dataset(bundles);

    std::map<std::string, std::vector<double>> external;
    eval::BaselineOptions options;
    options.hash_dim = args.dim;
    options.hash_seed = args.hash_seed;
    if (*metric == eval::BaselineMetric::kExternal) {
        external = metrics::ingest_external_scores(args.scores_path);
        options.external_scores = &external;
    }
    eval::BaselineResult result = eval::run_baseline(dataset, *metric, options);

    std::string text = eval::baseline_to_json(result).dump(2) + "\n";
    emit(text, args.out);
    if (!args.out.empty()) {
        RunManifest manifest;
        manifest.tool_version = kToolVersion;
        manifest.command = command;
        manifest.config = {{"metric", args.metric}};
        if (!args.scores_path.empty()) {
            manifest.config["scores"] = args.scores_path;
            manifest.add_input(args.scores_path);
        }
        if (*metric == eval::BaselineMetric::kCosine) {
            manifest.config["dim"] = args.dim;
            manifest.config["hash_seed"] = args.hash_seed;
        }
        manifest.add_input(args.bundles_path);
        write_manifest(args.out, manifest);
    }
    return 0;
}

struct TrainArgs {
    std::string bundles_path;
    std::string variant = "ATTENTION_C_Q_AA";
    std::uint64_t seed = 0;
    int epochs = 5;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int d_att = 0;
    std::string out;
};

ExperimentConfig config_from(const TrainArgs& args, const pipeline::BundleSet& bundles) {
    auto variant = parse_variant(args.variant);
    if (!variant) throw Error("unknown model variant: " + args.variant);
    ExperimentConfig config;
    config.variant = *variant;
    config.epochs = args.epochs;
    config.batch_size = args.batch_size;
    config.learning_rate = args.learning_rate;
    config.d_att = args.d_att;
    config.n_fixed = bundles.n_fixed;
    config.seeds = {args.seed};
    return config;
}

int run_train(const TrainArgs& args, const std::string& command) {
    pipeline::BundleSet bundles = pipeline::read_bundles(args.bundles_path);
    ExperimentConfig config = config_from(args, bundles);

    std::vector<model::Example> examples;
    for (const pipeline::BundleRecord& record : bundles.records)
        if (record.split == Split::kTrain && !record.abstained)
            examples.push_back({&record.bundle, record.label});

    model::TrainResult trained = model::train(examples, config, args.seed);
    model::save_checkpoint(args.out, trained.params);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.config = {{"variant", args.variant},     {"epochs", args.epochs},
                       {"batch_size", args.batch_size}, {"learning_rate", args.learning_rate},
                       {"d_att", args.d_att},          {"seed", args.seed}};
    manifest.seeds = {args.seed};
    manifest.add_input(args.bundles_path);
    write_manifest(args.out, manifest);

    json summary{{"variant", args.variant},
                 {"train_claims", examples.size()},
                 {"loss_history", trained.loss_history},
                 {"checkpoint", args.out}};
    std::printf("%s\n", summary.dump().c_str());
    return 0;
}

struct EvalArgs {
    std::string bundles_path;
    std::string variants = "all";
    std::string seeds = "0-4";
    int epochs = 5;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int d_att = 0;
    std::string format = "markdown";
    std::string out;
};

int run_eval(const EvalArgs& args, const std::string& command) {
    auto format = eval::parse_table_format(args.format);
    if (!format) throw Error("unknown table format: " + args.format);
    std::vector<Variant> variants = parse_variants(args.variants);
    std::vector<std::uint64_t> seeds = parse_seeds(args.seeds);

    pipeline::BundleSet bundles = pipeline::read_bundles(args.bundles_path);
    ExperimentConfig config;
    config.epochs = args.epochs;
    config.batch_size = args.batch_size;
    config.learning_rate = args.learning_rate;
    config.d_att = args.d_att;
    config.n_fixed = bundles.n_fixed;
    config.seeds = seeds;

    std::vector<eval::ExperimentResult> results;
    for (Variant variant : variants) {
        config.variant = variant;
        results.push_back(eval::run_experiment(bundles, config));
    }

    emit(eval::emit_results_table(results, *format), args.out);
    if (!args.out.empty()) {
        RunManifest manifest;
        manifest.tool_version = kToolVersion;
        manifest.command = command;
        manifest.config = {{"variants", args.variants},
                           {"epochs", args.epochs},
                           {"batch_size", args.batch_size},
                           {"learning_rate", args.learning_rate},
                           {"d_att", args.d_att},
                           {"format", args.format}};
        manifest.seeds = seeds;
        manifest.add_input(args.bundles_path);
        write_manifest(args.out, manifest);
    }
    return 0;
}

struct ExplainArgs {
    std::string bundles_path;
    std::string checkpoint_path;
    std::string claim_id;
    std::string format = "markdown";
    std::string out;
};

int run_explain(const ExplainArgs& args, const std::string& command) {
    if (args.format != "markdown" && args.format != "json")
        throw Error("unknown explanation format: " + args.format);

    pipeline::BundleSet bundles = pipeline::read_bundles(args.bundles_path);
    const pipeline::BundleRecord* record = nullptr;
    for (const auto& r : bundles.records)
        if (r.claim_id == args.claim_id) record = &r;
    if (!record) throw Error("claim " + args.claim_id + " not found in " + args.bundles_path);
    if (record->abstained)
        throw Error("claim " + args.claim_id + " abstained: no QA pairs survived filtering");

    model::ModelParams params = model::load_checkpoint(args.checkpoint_path);
    model::VerdictReport report = model::predict(params, record->bundle);
    report.claim_id = record->claim_id;
    report.pairs = record->pairs;
    eval::Explanation explanation = eval::explain_claim(report);

    std::string text = args.format == "markdown"
                           ? eval::explanation_to_markdown(explanation)
                           : eval::explanation_to_json(explanation).dump(2) + "\n";
    emit(text, args.out);
    if (!args.out.empty()) {
        RunManifest manifest;
        manifest.tool_version = kToolVersion;
        manifest.command = command;
        manifest.config = {{"claim_id", args.claim_id}, {"format", args.format}};
        manifest.add_input(args.bundles_path);
        manifest.add_input(args.checkpoint_path);
        write_manifest(args.out, manifest);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"question answering as a proxy for fact verification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("qaproxy ") + kToolVersion);
    const std::string command = join_argv(argc, argv);

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth_cmd->add_option("--claims", synth.claims, "number of claims");
    synth_cmd->add_option("--n-fixed", synth.n_fixed, "questions per claim after selection");
    synth_cmd->add_option("--noise", synth.noise, "fraction of corrupted QA pairs per claim");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--out-claims", synth.out_claims, "claims JSONL output")->required();
    synth_cmd->add_option("--out-qa", synth.out_qa, "QA sets JSONL output")->required();

    IngestArgs ing;
    CLI::App* ingest_cmd =
        app.add_subcommand("ingest", "filter and select QA pairs into a dataset");
    ingest_cmd->add_option("--claims", ing.claims_path, "claims JSONL")->required();
    ingest_cmd->add_option("--qa", ing.qa_path, "QA sets JSONL")->required();
    ingest_cmd->add_option("--n-fixed", ing.n_fixed, "questions per claim after selection");
    ingest_cmd->add_option("--containment", ing.containment,
                           "answer containment check: substring|token");
    ingest_cmd->add_option("--out", ing.out, "dataset JSONL output")->required();

    AnswerArgs ans;
    CLI::App* answer_cmd =
        app.add_subcommand("answer", "fill missing evidence answers from the QA service");
    answer_cmd->add_option("--dataset", ans.dataset_path, "dataset JSONL")->required();
    answer_cmd->add_option("--endpoint", ans.endpoint, "QA service base URL")
        ->envname("QAPROXY_QA_ENDPOINT");
    answer_cmd->add_option("--jobs", ans.jobs, "claims answered concurrently");
    answer_cmd->add_option("--timeout-ms", ans.timeout_ms, "per-request timeout");
    answer_cmd->add_option("--retries", ans.retries, "retries after a failed request");
    answer_cmd->add_option("--out", ans.out, "dataset JSONL output")->required();

    EmbedArgs emb;
    CLI::App* embed_cmd = app.add_subcommand("embed", "embed a dataset into feature bundles");
    embed_cmd->add_option("--dataset", emb.dataset_path, "dataset JSONL")->required();
    embed_cmd->add_option("--provider", emb.provider, "embedding provider: hash|store");
    embed_cmd->add_option("--dim", emb.dim, "hash embedding dimension");
    embed_cmd->add_option("--hash-seed", emb.hash_seed, "hash embedding seed");
    embed_cmd->add_option("--store", emb.store_path, "embedding store file for --provider store");
    embed_cmd->add_option("--out", emb.out, "bundle JSONL output")->required();

    BaselineArgs base;
    CLI::App* baseline_cmd =
        app.add_subcommand("baseline", "calibrated similarity baseline over answer pairs");
    baseline_cmd->add_option("--bundles", base.bundles_path, "bundle JSONL")->required();
    baseline_cmd->add_option("--metric", base.metric, "token_f1|cosine|external");
    baseline_cmd->add_option("--scores", base.scores_path, "external per-pair scores JSONL");
    baseline_cmd->add_option("--dim", base.dim, "hash dimension for cosine");
    baseline_cmd->add_option("--hash-seed", base.hash_seed, "hash seed for cosine");
    baseline_cmd->add_option("--out", base.out, "result JSON output");

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "train one model variant on one seed");
    train_cmd->add_option("--bundles", tr.bundles_path, "bundle JSONL")->required();
    train_cmd->add_option("--variant", tr.variant, "model variant");
    train_cmd->add_option("--seed", tr.seed, "training seed");
    train_cmd->add_option("--epochs", tr.epochs, "training epochs");
    train_cmd->add_option("--batch-size", tr.batch_size, "mini-batch size");
    train_cmd->add_option("--lr", tr.learning_rate, "Adam learning rate");
    train_cmd->add_option("--d-att", tr.d_att, "attention width (0 = derive)");
    train_cmd->add_option("--out", tr.out, "checkpoint output")->required();

    EvalArgs ev;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "train and evaluate variants across seeds");
    eval_cmd->add_option("--bundles", ev.bundles_path, "bundle JSONL")->required();
    eval_cmd->add_option("--variants", ev.variants, "comma list or 'all'");
    eval_cmd->add_option("--seeds", ev.seeds, "seed list, e.g. 0-4 or 0,1,2");
    eval_cmd->add_option("--epochs", ev.epochs, "training epochs");
    eval_cmd->add_option("--batch-size", ev.batch_size, "mini-batch size");
    eval_cmd->add_option("--lr", ev.learning_rate, "Adam learning rate");
    eval_cmd->add_option("--d-att", ev.d_att, "attention width (0 = derive)");
    eval_cmd->add_option("--format", ev.format, "table format: tsv|markdown|json");
    eval_cmd->add_option("--out", ev.out, "also write the table to this file");

    ExplainArgs ex;
    CLI::App* explain_cmd =
        app.add_subcommand("explain", "per-question attention weights for one claim");
    explain_cmd->add_option("--bundles", ex.bundles_path, "bundle JSONL")->required();
    explain_cmd->add_option("--checkpoint", ex.checkpoint_path, "trained checkpoint")->required();
    explain_cmd->add_option("--claim-id", ex.claim_id, "claim to explain")->required();
    explain_cmd->add_option("--format", ex.format, "markdown|json");
    explain_cmd->add_option("--out", ex.out, "also write the explanation to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth, command);
        if (ingest_cmd->parsed()) return run_ingest(ing, command);
        if (answer_cmd->parsed()) return run_answer(ans, command);
        if (embed_cmd->parsed()) return run_embed(emb, command);
        if (baseline_cmd->parsed()) return run_baseline_cmd(base, command);
        if (train_cmd->parsed()) return run_train(tr, command);
        if (eval_cmd->parsed()) return run_eval(ev, command);
        if (explain_cmd->parsed()) return run_explain(ex, command);
    } catch (const IoError& e) {
        std::fprintf(stderr, "qaproxy: %s\n", e.what());
        return 2;
    } catch (const ServiceUnreachable& e) {
        std::fprintf(stderr, "qaproxy: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "qaproxy: %s\n", e.what());
        return 1;
    }
    return 0;
}
