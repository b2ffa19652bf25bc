#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qaproxy/embed.hpp"
#include "qaproxy/metrics.hpp"
#include "qaproxy/model.hpp"
#include "qaproxy/pipeline.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::eval {

// Mean per-class recall over the classes present in the gold labels. With
// both classes present this is the balanced accuracy; a majority-class
// predictor lands at 50 regardless of skew.
inline double macro_accuracy(const std::vector<Label>& preds, const std::vector<Label>& golds) {
    if (preds.size() != golds.size())
        throw LengthMismatch("macro_accuracy: " + std::to_string(preds.size()) +
                             " predictions vs " + std::to_string(golds.size()) + " golds");
    if (golds.empty()) throw EmptyInput("macro_accuracy: no examples");
    return metrics::detail::macro_over(preds, golds);
}

// ---------------------------------------------------------------------------
// Seeded experiments

struct SeedOutcome {
    std::uint64_t seed = 0;
    double dev = 0.0;   // macro accuracy in percentage points
    double test = 0.0;
};

struct ExperimentResult {
    Variant variant = Variant::kAttentionCQAA;
    double dev_mean = 0.0;  // percentage points; std is the sample deviation
    double dev_std = 0.0;
    double test_mean = 0.0;
    double test_std = 0.0;
    bool single_seed = false;
    std::vector<SeedOutcome> per_seed;  // ascending by seed
};

namespace detail {

inline std::pair<double, double> mean_sample_std(const std::vector<double>& xs) {
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

// Macro accuracy of a trained model on one split. Abstained claims count as
// wrong: they are scored with the opposite of their gold label.
inline double evaluate_split(const pipeline::BundleSet& bundles, const model::ModelParams& params,
                             Split split) {
    std::vector<Label> preds;
    std::vector<Label> golds;
    for (const pipeline::BundleRecord& record : bundles.records) {
        if (record.split != split) continue;
        golds.push_back(record.label);
        preds.push_back(record.abstained ? label_opposite(record.label)
                                         : model::predict(params, record.bundle).predicted);
    }
    if (golds.empty())
        throw EmptyInput("evaluate_split: no " + std::string(to_string(split)) + " claims");
    return macro_accuracy(preds, golds);
}

// Trains config.variant once per seed on the non-abstained train claims and
// reports dev/test macro accuracy aggregated across seeds.
inline ExperimentResult run_experiment(const pipeline::BundleSet& bundles,
                                       const ExperimentConfig& config) {
    if (auto violations = config.validate(); !violations.empty())
        throw Error("run_experiment: invalid config: " + violations.front());

    std::vector<model::Example> train_examples;
    for (const pipeline::BundleRecord& record : bundles.records)
        if (record.split == Split::kTrain && !record.abstained)
            train_examples.push_back({&record.bundle, record.label});

    std::vector<std::uint64_t> seeds = config.seeds;
    std::sort(seeds.begin(), seeds.end());

    ExperimentResult result;
    result.variant = config.variant;
    result.single_seed = seeds.size() == 1;
    for (std::uint64_t seed : seeds) {
        model::TrainResult trained = model::train(train_examples, config, seed);
        SeedOutcome outcome;
        outcome.seed = seed;
        outcome.dev = 100.0 * evaluate_split(bundles, trained.params, Split::kDev);
        outcome.test = 100.0 * evaluate_split(bundles, trained.params, Split::kTest);
        result.per_seed.push_back(outcome);
    }

    std::vector<double> dev, test;
    for (const SeedOutcome& o : result.per_seed) {
        dev.push_back(o.dev);
        test.push_back(o.test);
    }
    std::tie(result.dev_mean, result.dev_std) = detail::mean_sample_std(dev);
    std::tie(result.test_mean, result.test_std) = detail::mean_sample_std(test);
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
//
// Claim-side answers come from one entity family ("itemNN"), perturbations
// from a disjoint one ("unitNN"). Supported claims repeat their own answers
// in the evidence; refuted claims get perturbed evidence answers. Claim and
// question text never depend on the label, so claim- and question-only
// models cannot beat chance, while the answer pairs separate cleanly.

struct SyntheticData {
    std::vector<ClaimRecord> claims;
    std::map<std::string, QASet> qa_sets;
};

inline SyntheticData make_synthetic(int n_claims, int n_fixed, double noise, std::uint64_t seed) {
    if (n_claims < 10) throw Error("make_synthetic: need at least 10 claims");
    if (n_fixed <= 0) throw Error("make_synthetic: n_fixed must be positive");
    if (!(noise >= 0.0 && noise < 1.0)) throw Error("make_synthetic: noise must be in [0, 1)");

    constexpr std::uint64_t kPool = 32;
    auto entity = [](const char* stem, std::uint64_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%s%02d", stem, static_cast<int>(i));
        return std::string(buf);
    };

    SplitMix64 rng(seed);
    SyntheticData data;
    const int n_train = n_claims * 70 / 100;
    const int n_dev = n_claims * 15 / 100;
    const int lo = std::max(1, n_fixed / 2);

    for (int i = 0; i < n_claims; ++i) {
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "syn-%04d", i);

        ClaimRecord claim;
        claim.id = idbuf;
        claim.label = (i % 2 == 0) ? Label::kSupports : Label::kRefutes;
        claim.split =
            i < n_train ? Split::kTrain : (i < n_train + n_dev ? Split::kDev : Split::kTest);

        // Question counts straddle n_fixed so selection both pads and truncates.
        const int n_q =
            lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_fixed - lo + 5)));

        std::vector<std::string> ents;
        ents.reserve(static_cast<std::size_t>(n_q));
        for (int q = 0; q < n_q; ++q) ents.push_back(entity("item", rng.next_below(kPool)));

        // The claim id stays out of the generated text: ids are assigned in
        // label order, so leaking them would hand the text-only models a
        // shortcut.
        claim.claim = "the record reports";
        for (int q = 0; q < n_q; ++q) claim.claim += (q == 0 ? " " : " with ") + ents[q];
        claim.claim += ".";

        std::vector<char> corrupt(static_cast<std::size_t>(n_q), 0);
        {
            const int n_corrupt = static_cast<int>(noise * n_q);
            std::vector<int> idx(static_cast<std::size_t>(n_q));
            std::iota(idx.begin(), idx.end(), 0);
            for (int c = 0; c < n_corrupt; ++c) {
                std::size_t j = static_cast<std::size_t>(c) +
                                rng.next_below(static_cast<std::uint64_t>(n_q - c));
                std::swap(idx[static_cast<std::size_t>(c)], idx[j]);
                corrupt[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])] = 1;
            }
        }

        QASet qs;
        qs.claim_id = claim.id;
        for (int q = 0; q < n_q; ++q) {
            QAPair pair;
            pair.question = "what is reported for field " + std::to_string(q) + "?";
            pair.claim_answer = ents[static_cast<std::size_t>(q)];
            const bool match = (claim.label == Label::kSupports) !=
                               static_cast<bool>(corrupt[static_cast<std::size_t>(q)]);
            pair.evidence_answer =
                match ? ents[static_cast<std::size_t>(q)] : entity("unit", rng.next_below(kPool));
            pair.evidence_score = 0.5 + 0.5 * rng.next_double();
            claim.evidence.push_back("field " + std::to_string(q) + " of " + claim.id + " is " +
                                     *pair.evidence_answer + ".");
            qs.pairs.push_back(std::move(pair));
        }

        // One plant whose claim-side answer never appears in the claim text;
        // the containment filter must drop it.
        QAPair spurious;
        spurious.question = "what does the record omit?";
        spurious.claim_answer = entity("unit", rng.next_below(kPool));
        qs.pairs.insert(
            qs.pairs.begin() +
                static_cast<std::ptrdiff_t>(rng.next_below(qs.pairs.size() + 1)),
            std::move(spurious));

        data.qa_sets.emplace(claim.id, std::move(qs));
        data.claims.push_back(std::move(claim));
    }
    return data;
}

// ---------------------------------------------------------------------------
// Result tables

enum class TableFormat { kTsv, kMarkdown, kJson };

inline std::optional<TableFormat> parse_table_format(std::string_view s) {
    if (s == "tsv") return TableFormat::kTsv;
    if (s == "markdown") return TableFormat::kMarkdown;
    if (s == "json") return TableFormat::kJson;
    return std::nullopt;
}

namespace detail {

inline std::size_t variant_rank(Variant v) {
    for (std::size_t i = 0; i < kVariantOrder.size(); ++i)
        if (kVariantOrder[i] == v) return i;
    return kVariantOrder.size();
}

inline std::string format_cell(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", mean, std);
    return buf;
}

}  // namespace detail

inline json results_to_json(const std::vector<ExperimentResult>& rows) {
    json arr = json::array();
    for (const ExperimentResult& r : rows) {
        json seeds = json::array();
        for (const SeedOutcome& s : r.per_seed)
            seeds.push_back(json{{"seed", s.seed}, {"dev", s.dev}, {"test", s.test}});
        arr.push_back(json{{"variant", std::string(to_string(r.variant))},
                           {"dev_mean", r.dev_mean},
                           {"dev_std", r.dev_std},
                           {"test_mean", r.test_mean},
                           {"test_std", r.test_std},
                           {"single_seed", r.single_seed},
                           {"seeds", std::move(seeds)}});
    }
    return arr;
}

inline std::vector<ExperimentResult> parse_results_json(const json& j) {
    if (!j.is_array()) throw Error("results json: expected an array");
    std::vector<ExperimentResult> rows;
    for (const json& rj : j) {
        ExperimentResult r;
        auto variant = parse_variant(rj.at("variant").get<std::string>());
        if (!variant) throw Error("results json: unknown variant " + rj.at("variant").dump());
        r.variant = *variant;
        r.dev_mean = rj.at("dev_mean").get<double>();
        r.dev_std = rj.at("dev_std").get<double>();
        r.test_mean = rj.at("test_mean").get<double>();
        r.test_std = rj.at("test_std").get<double>();
        r.single_seed = rj.at("single_seed").get<bool>();
        for (const json& sj : rj.at("seeds")) {
            SeedOutcome o;
            o.seed = sj.at("seed").get<std::uint64_t>();
            o.dev = sj.at("dev").get<double>();
            o.test = sj.at("test").get<double>();
            r.per_seed.push_back(o);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// Rows always come out in the canonical ablation order, whatever subset and
// order the caller collected.
inline std::string emit_results_table(std::vector<ExperimentResult> rows, TableFormat format) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return detail::variant_rank(a.variant) < detail::variant_rank(b.variant);
    });
    switch (format) {
        case TableFormat::kTsv: {
            std::string out = "model\tdev\ttest\n";
            for (const ExperimentResult& r : rows) {
                out += std::string(to_string(r.variant)) + "\t" +
                       detail::format_cell(r.dev_mean, r.dev_std) + "\t" +
                       detail::format_cell(r.test_mean, r.test_std) + "\n";
            }
            return out;
        }
        case TableFormat::kMarkdown: {
            std::string out = "| Model | Dev | Test |\n| --- | --- | --- |\n";
            for (const ExperimentResult& r : rows) {
                out += "| " + std::string(to_string(r.variant)) + " | " +
                       detail::format_cell(r.dev_mean, r.dev_std) + " | " +
                       detail::format_cell(r.test_mean, r.test_std) + " |\n";
            }
            return out;
        }
        case TableFormat::kJson:
            return results_to_json(rows).dump(2) + "\n";
    }
    throw Error("emit_results_table: unknown format");
}

// ---------------------------------------------------------------------------
// Per-claim explanations

struct ExplanationItem {
    std::size_t index = 0;  // original question position
    double weight = 0.0;
    QAPair pair;
};

struct Explanation {
    std::string claim_id;
    Label predicted = Label::kSupports;
    std::vector<ExplanationItem> items;  // weight-descending; ties keep question order
};

inline Explanation explain_claim(const model::VerdictReport& report) {
    if (report.weights.empty())
        throw VariantWithoutWeights("explain_claim: this model variant has no question weights");
    if (report.weights.size() != report.pairs.size())
        throw LengthMismatch("explain_claim: " + std::to_string(report.weights.size()) +
                             " weights vs " + std::to_string(report.pairs.size()) + " pairs");
    Explanation out;
    out.claim_id = report.claim_id;
    out.predicted = report.predicted;
    for (std::size_t i = 0; i < report.weights.size(); ++i)
        out.items.push_back({i, report.weights[i], report.pairs[i]});
    std::stable_sort(out.items.begin(), out.items.end(),
                     [](const auto& a, const auto& b) { return a.weight > b.weight; });
    return out;
}

namespace detail {

inline std::string md_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '|') out += "\\|";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}

inline std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", w);
    return buf;
}

}  // namespace detail

// The two most attended questions are emphasized: top-1 bold, runner-up italic.
inline std::string explanation_to_markdown(const Explanation& e) {
    std::string out = "## " + e.claim_id + ": " + std::string(to_string(e.predicted)) + "\n\n";
    out += "| rank | weight | question | claim answer | evidence answer |\n";
    out += "| --- | --- | --- | --- | --- |\n";
    for (std::size_t r = 0; r < e.items.size(); ++r) {
        const ExplanationItem& item = e.items[r];
        const char* wrap = r == 0 ? "**" : (r == 1 ? "*" : "");
        auto cell = [&](std::string_view text) {
            return wrap + detail::md_escape(text) + wrap;
        };
        out += "| " + std::to_string(r + 1) + " | " + detail::format_weight(item.weight) + " | " +
               cell(item.pair.question) + " | " + cell(item.pair.claim_answer) + " | " +
               cell(item.pair.evidence_answer ? std::string_view(*item.pair.evidence_answer)
                                              : std::string_view("(no answer)")) +
               " |\n";
    }
    return out;
}

inline json explanation_to_json(const Explanation& e) {
    json items = json::array();
    for (std::size_t r = 0; r < e.items.size(); ++r) {
        const ExplanationItem& item = e.items[r];
        items.push_back(json{{"rank", r + 1},
                             {"question_index", item.index},
                             {"weight", item.weight},
                             {"question", item.pair.question},
                             {"claim_answer", item.pair.claim_answer},
                             {"evidence_answer", item.pair.evidence_answer
                                                     ? json(*item.pair.evidence_answer)
                                                     : json(nullptr)}});
    }
    return json{{"claim_id", e.claim_id},
                {"predicted", std::string(to_string(e.predicted))},
                {"questions", std::move(items)}};
}

// ---------------------------------------------------------------------------
// Similarity baselines: per-pair score, per-claim mean, threshold calibrated
// on dev.

enum class BaselineMetric { kTokenF1, kCosine, kExternal };

inline std::string_view to_string(BaselineMetric m) {
    switch (m) {
        case BaselineMetric::kTokenF1: return "token_f1";
        case BaselineMetric::kCosine: return "cosine";
        case BaselineMetric::kExternal: return "external";
    }
    return "?";
}

inline std::optional<BaselineMetric> parse_baseline_metric(std::string_view s) {
    if (s == "token_f1") return BaselineMetric::kTokenF1;
    if (s == "cosine") return BaselineMetric::kCosine;
    if (s == "external") return BaselineMetric::kExternal;
    return std::nullopt;
}

struct BaselineOptions {
    // Required for kExternal: per-claim pair scores keyed by claim id.
    const std::map<std::string, std::vector<double>>* external_scores = nullptr;
    // Hashing setup for kCosine answer embeddings.
    int hash_dim = 256;
    std::uint64_t hash_seed = 0;
};

struct BaselineResult {
    BaselineMetric metric = BaselineMetric::kTokenF1;
    double threshold = 0.0;
    double dev_accuracy = 0.0;   // percentage points
    double test_accuracy = 0.0;  // percentage points
    std::size_t dev_claims = 0;
    std::size_t test_claims = 0;
    std::size_t unscored = 0;  // claims scored by the abstention fallback
};

inline json baseline_to_json(const BaselineResult& r) {
    json j{{"metric", std::string(to_string(r.metric))},
           {"dev_accuracy", r.dev_accuracy},
           {"test_accuracy", r.test_accuracy},
           {"dev_claims", r.dev_claims},
           {"test_claims", r.test_claims},
           {"unscored", r.unscored}};
    if (std::isfinite(r.threshold))
        j["threshold"] = r.threshold;
    else
        j["threshold"] = r.threshold > 0 ? "inf" : "-inf";
    return j;
}

// Scores every claim, calibrates the verdict threshold on the scorable dev
// claims, then reports dev/test macro accuracy with unscorable claims counted
// as wrong.
inline BaselineResult run_baseline(const pipeline::Dataset& dataset, BaselineMetric metric,
                                   const BaselineOptions& options = {}) {
    if (metric == BaselineMetric::kExternal && !options.external_scores)
        throw MissingInput("run_baseline: external metric needs a score table");
    embed::HashEmbedder embedder(options.hash_dim, options.hash_seed);

    auto score_record =
        [&](const pipeline::DatasetRecord& r) -> std::optional<metrics::ScoredClaim> {
        if (r.abstained) return std::nullopt;
        if (metric == BaselineMetric::kExternal) {
            auto it = options.external_scores->find(r.claim.id);
            if (it == options.external_scores->end()) return std::nullopt;
            if (it->second.size() != r.qaset.pairs.size())
                throw LengthMismatch("external scores for " + r.claim.id + ": " +
                                     std::to_string(it->second.size()) + " scores for " +
                                     std::to_string(r.qaset.pairs.size()) + " pairs");
            return metrics::score_claim(r.claim.id, it->second, r.claim.label);
        }
        std::vector<double> scores;
        scores.reserve(r.qaset.pairs.size());
        for (const QAPair& pair : r.qaset.pairs) {
            if (!pair.evidence_answer) {
                scores.push_back(0.0);
                continue;
            }
            scores.push_back(metric == BaselineMetric::kTokenF1
                                 ? metrics::token_f1(pair.claim_answer, *pair.evidence_answer)
                                 : metrics::cosine_sim(embedder.hash_embed(pair.claim_answer),
                                                       embedder.hash_embed(*pair.evidence_answer)));
        }
        return metrics::score_claim(r.claim.id, std::move(scores), r.claim.label);
    };

    struct Row {
        Split split;
        Label gold;
        std::optional<double> score;
    };
    std::vector<Row> rows;
    std::vector<metrics::ScoredClaim> dev_scored;
    BaselineResult out;
    out.metric = metric;
    for (const pipeline::DatasetRecord& record : dataset.records) {
        std::optional<metrics::ScoredClaim> scored = score_record(record);
        if (!scored) ++out.unscored;
        rows.push_back({record.claim.split, record.claim.label,
                        scored ? std::optional<double>(scored->claim_score) : std::nullopt});
        if (record.claim.split == Split::kDev && scored) dev_scored.push_back(std::move(*scored));
    }
    if (dev_scored.empty()) throw EmptyDevSet("run_baseline: no scorable dev claims");

    metrics::Calibration cal = metrics::calibrate_threshold(dev_scored);
    out.threshold = cal.threshold;

    auto split_accuracy = [&](Split split, std::size_t& count) {
        std::vector<Label> preds;
        std::vector<Label> golds;
        for (const Row& row : rows) {
            if (row.split != split) continue;
            golds.push_back(row.gold);
            preds.push_back(row.score ? metrics::apply_threshold(*row.score, cal.threshold)
                                      : label_opposite(row.gold));
        }
        if (golds.empty())
            throw EmptyInput("run_baseline: no " + std::string(to_string(split)) + " claims");
        count = golds.size();
        return 100.0 * macro_accuracy(preds, golds);
    };
    out.dev_accuracy = split_accuracy(Split::kDev, out.dev_claims);
    out.test_accuracy = split_accuracy(Split::kTest, out.test_claims);
    return out;
}

}  // namespace qaproxy::eval
