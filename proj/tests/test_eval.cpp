#include "qaproxy/eval.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qaproxy/embed.hpp"
#include "qaproxy/errors.hpp"
#include "qaproxy/ingest.hpp"
#include "qaproxy/pipeline.hpp"

namespace qaproxy::eval {
namespace {

constexpr Label S = Label::kSupports;
constexpr Label R = Label::kRefutes;

TEST(MacroAccuracy, AveragesPerClassRecall) {
    EXPECT_DOUBLE_EQ(macro_accuracy({S, R, S}, {S, R, S}), 1.0);
    EXPECT_DOUBLE_EQ(macro_accuracy({R, S}, {S, R}), 0.0);
    // A constant SUPPORTS predictor stays at 0.5 however skewed the golds.
    EXPECT_DOUBLE_EQ(macro_accuracy({S, S, S, S}, {S, S, S, R}), 0.5);
    EXPECT_DOUBLE_EQ(macro_accuracy({S, S, S, S, S, S, S, R}, {S, S, S, S, S, S, R, R}),
                     0.75);
}

TEST(MacroAccuracy, OnlyClassesPresentInGoldCount) {
    EXPECT_DOUBLE_EQ(macro_accuracy({S, R}, {S, S}), 0.5);
    EXPECT_DOUBLE_EQ(macro_accuracy({R, R}, {R, R}), 1.0);
}

TEST(MacroAccuracy, RejectsBadShapes) {
    EXPECT_THROW(macro_accuracy({S}, {S, R}), LengthMismatch);
    EXPECT_THROW(macro_accuracy({}, {}), EmptyInput);
}

TEST(MakeSynthetic, IsDeterministicForAGivenSeed) {
    SyntheticData a = make_synthetic(20, 4, 0.1, 9);
    SyntheticData b = make_synthetic(20, 4, 0.1, 9);
    ASSERT_EQ(a.claims.size(), 20u);
    ASSERT_EQ(a.claims.size(), b.claims.size());
    for (std::size_t i = 0; i < a.claims.size(); ++i) {
        EXPECT_EQ(a.claims[i].id, b.claims[i].id);
        EXPECT_EQ(a.claims[i].claim, b.claims[i].claim);
        EXPECT_EQ(a.claims[i].evidence, b.claims[i].evidence);
        EXPECT_EQ(a.claims[i].label, b.claims[i].label);
        EXPECT_EQ(a.claims[i].split, b.claims[i].split);
        EXPECT_EQ(a.qa_sets.at(a.claims[i].id).pairs, b.qa_sets.at(b.claims[i].id).pairs);
    }
    SyntheticData c = make_synthetic(20, 4, 0.1, 10);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.claims.size() && !any_difference; ++i)
        any_difference = a.claims[i].claim != c.claims[i].claim;
    EXPECT_TRUE(any_difference);
}

TEST(MakeSynthetic, AlternatesLabelsAndSlicesSplits) {
    SyntheticData data = make_synthetic(40, 4, 0.0, 3);
    int train = 0, dev = 0, test = 0;
    for (std::size_t i = 0; i < data.claims.size(); ++i) {
        EXPECT_EQ(data.claims[i].label, i % 2 == 0 ? S : R);
        EXPECT_TRUE(validate_record(data.claims[i]).empty()) << data.claims[i].id;
        switch (data.claims[i].split) {
            case Split::kTrain: ++train; break;
            case Split::kDev: ++dev; break;
            case Split::kTest: ++test; break;
        }
    }
    EXPECT_EQ(train, 28);
    EXPECT_EQ(dev, 6);
    EXPECT_EQ(test, 6);
}

TEST(MakeSynthetic, CleanCorpusEchoesSupportedAnswersOnly) {
    SyntheticData data = make_synthetic(30, 4, 0.0, 5);
    bool saw_short = false, saw_long = false;
    for (const ClaimRecord& claim : data.claims) {
        const QASet& qs = data.qa_sets.at(claim.id);
        std::size_t spurious = 0;
        for (const QAPair& pair : qs.pairs) {
            if (!pair.evidence_answer.has_value()) {
                ++spurious;
                EXPECT_FALSE(pair.evidence_score.has_value());
                EXPECT_EQ(pair.claim_answer.rfind("unit", 0), 0u);
                continue;
            }
            EXPECT_EQ(pair.claim_answer.rfind("item", 0), 0u);
            EXPECT_GE(*pair.evidence_score, 0.5);
            EXPECT_LT(*pair.evidence_score, 1.0);
            if (claim.label == S) {
                EXPECT_EQ(*pair.evidence_answer, pair.claim_answer);
            } else {
                EXPECT_EQ(pair.evidence_answer->rfind("unit", 0), 0u);
            }
        }
        EXPECT_EQ(spurious, 1u) << claim.id;

        auto kept = ingest::filter_qa_pairs(claim.claim, qs.pairs);
        EXPECT_EQ(kept.size(), qs.pairs.size() - 1);
        for (const QAPair& pair : kept) EXPECT_TRUE(pair.evidence_answer.has_value());

        if (kept.size() < 4) saw_short = true;
        if (kept.size() > 4) saw_long = true;
    }
    EXPECT_TRUE(saw_short);
    EXPECT_TRUE(saw_long);
}

TEST(MakeSynthetic, RejectsBadArguments) {
    EXPECT_THROW(make_synthetic(9, 4, 0.0, 0), Error);
    EXPECT_THROW(make_synthetic(20, 0, 0.0, 0), Error);
    EXPECT_THROW(make_synthetic(20, 4, 1.0, 0), Error);
    EXPECT_THROW(make_synthetic(20, 4, -0.1, 0), Error);
}

pipeline::BundleSet small_bundles() {
    SyntheticData data = make_synthetic(40, 4, 0.0, 1);
    pipeline::Dataset dataset = pipeline::assemble_dataset(data.claims, data.qa_sets, 4,
                                                           ingest::ContainmentMode::kSubstring);
    embed::HashEmbedder embedder(32, 0);
    return pipeline::build_bundles(dataset, embedder, "hash(dim=32,seed=0)");
}

TEST(RunExperiment, SortsSeedsAndReproducesExactly) {
    pipeline::BundleSet bundles = small_bundles();
    ExperimentConfig config;
    config.variant = Variant::kAA;
    config.epochs = 3;
    config.seeds = {2, 0, 1};

    ExperimentResult first = run_experiment(bundles, config);
    EXPECT_EQ(first.variant, Variant::kAA);
    EXPECT_FALSE(first.single_seed);
    ASSERT_EQ(first.per_seed.size(), 3u);
    EXPECT_EQ(first.per_seed[0].seed, 0u);
    EXPECT_EQ(first.per_seed[1].seed, 1u);
    EXPECT_EQ(first.per_seed[2].seed, 2u);
    for (const SeedOutcome& o : first.per_seed) {
        EXPECT_GE(o.dev, 0.0);
        EXPECT_LE(o.dev, 100.0);
        EXPECT_GE(o.test, 0.0);
        EXPECT_LE(o.test, 100.0);
    }

    ExperimentResult second = run_experiment(bundles, config);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(first.per_seed[i].dev, second.per_seed[i].dev);
        EXPECT_DOUBLE_EQ(first.per_seed[i].test, second.per_seed[i].test);
    }
    EXPECT_DOUBLE_EQ(first.dev_mean, second.dev_mean);
    EXPECT_DOUBLE_EQ(first.test_std, second.test_std);
}

TEST(RunExperiment, FlagsSingleSeedRuns) {
    pipeline::BundleSet bundles = small_bundles();
    ExperimentConfig config;
    config.variant = Variant::kC;
    config.epochs = 2;
    config.seeds = {7};
    ExperimentResult result = run_experiment(bundles, config);
    EXPECT_TRUE(result.single_seed);
    ASSERT_EQ(result.per_seed.size(), 1u);
    EXPECT_DOUBLE_EQ(result.dev_std, 0.0);
    EXPECT_DOUBLE_EQ(result.test_std, 0.0);
}

TEST(RunExperiment, RejectsInvalidConfig) {
    pipeline::BundleSet bundles = small_bundles();
    ExperimentConfig config;
    config.epochs = 0;
    EXPECT_THROW(run_experiment(bundles, config), Error);
}

TEST(RunExperiment, NeedsTrainClaims) {
    pipeline::BundleSet bundles = small_bundles();
    for (pipeline::BundleRecord& record : bundles.records)
        if (record.split == Split::kTrain) record.split = Split::kTest;
    ExperimentConfig config;
    config.epochs = 1;
    config.seeds = {0};
    EXPECT_THROW(run_experiment(bundles, config), EmptyTrainSplit);
}

ExperimentResult fake_result(Variant v, double dev_mean, double dev_std, double test_mean,
                             double test_std) {
    ExperimentResult r;
    r.variant = v;
    r.dev_mean = dev_mean;
    r.dev_std = dev_std;
    r.test_mean = test_mean;
    r.test_std = test_std;
    r.per_seed = {{0, dev_mean, test_mean}};
    r.single_seed = true;
    return r;
}

TEST(ResultsTable, TsvUsesCanonicalRowOrder) {
    std::vector<ExperimentResult> rows = {
        fake_result(Variant::kAttentionCQAA, 80.0, 1.25, 79.5, 0.4),
        fake_result(Variant::kC, 50.0, 0.0, 50.0, 0.0),
        fake_result(Variant::kQAA, 75.5, 2.0, 74.25, 1.5),
    };
    EXPECT_EQ(emit_results_table(rows, TableFormat::kTsv),
              "model\tdev\ttest\n"
              "C\t50.00±0.00\t50.00±0.00\n"
              "Q_AA\t75.50±2.00\t74.25±1.50\n"
              "ATTENTION_C_Q_AA\t80.00±1.25\t79.50±0.40\n");
}

TEST(ResultsTable, MarkdownMatchesExpectedLayout) {
    std::vector<ExperimentResult> rows = {
        fake_result(Variant::kAA, 90.0, 0.5, 88.0, 0.75),
        fake_result(Variant::kQ, 50.0, 1.0, 49.5, 1.25),
    };
    EXPECT_EQ(emit_results_table(rows, TableFormat::kMarkdown),
              "| Model | Dev | Test |\n"
              "| --- | --- | --- |\n"
              "| Q | 50.00±1.00 | 49.50±1.25 |\n"
              "| AA | 90.00±0.50 | 88.00±0.75 |\n");
}

TEST(ResultsTable, JsonRoundTripsThroughTheParser) {
    std::vector<ExperimentResult> rows = {fake_result(Variant::kCQAA, 81.5, 0.25, 80.0, 0.5)};
    rows[0].per_seed = {{0, 81.5, 80.0}, {1, 81.5, 80.0}};
    rows[0].single_seed = false;

    std::string table = emit_results_table(rows, TableFormat::kJson);
    json parsed = json::parse(table);
    std::vector<ExperimentResult> back = parse_results_json(parsed);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].variant, Variant::kCQAA);
    EXPECT_DOUBLE_EQ(back[0].dev_mean, 81.5);
    EXPECT_DOUBLE_EQ(back[0].dev_std, 0.25);
    EXPECT_DOUBLE_EQ(back[0].test_mean, 80.0);
    EXPECT_DOUBLE_EQ(back[0].test_std, 0.5);
    EXPECT_FALSE(back[0].single_seed);
    ASSERT_EQ(back[0].per_seed.size(), 2u);
    EXPECT_EQ(back[0].per_seed[1].seed, 1u);
    EXPECT_DOUBLE_EQ(back[0].per_seed[1].test, 80.0);
}

TEST(ResultsTable, ParserRejectsMalformedDocuments) {
    EXPECT_THROW(parse_results_json(json::object()), Error);
    json bad = json::array();
    bad.push_back(json{{"variant", "BOGUS"},
                       {"dev_mean", 1.0},
                       {"dev_std", 0.0},
                       {"test_mean", 1.0},
                       {"test_std", 0.0},
                       {"single_seed", true},
                       {"seeds", json::array()}});
    EXPECT_THROW(parse_results_json(bad), Error);
}

QAPair expl_pair(std::string question, std::string claim_answer,
                 std::optional<std::string> evidence_answer) {
    QAPair p;
    p.question = std::move(question);
    p.claim_answer = std::move(claim_answer);
    if (evidence_answer) {
        p.evidence_answer = std::move(*evidence_answer);
        p.evidence_score = 0.5;
    }
    return p;
}

TEST(ExplainClaim, SortsByWeightKeepingTiesInQuestionOrder) {
    model::VerdictReport report;
    report.claim_id = "c1";
    report.predicted = R;
    report.weights = {0.2, 0.5, 0.3};
    report.pairs = {expl_pair("q0", "a0", "e0"), expl_pair("q1", "a1", "e1"),
                    expl_pair("q2", "a2", std::nullopt)};

    Explanation e = explain_claim(report);
    EXPECT_EQ(e.claim_id, "c1");
    EXPECT_EQ(e.predicted, R);
    ASSERT_EQ(e.items.size(), 3u);
    EXPECT_EQ(e.items[0].index, 1u);
    EXPECT_EQ(e.items[1].index, 2u);
    EXPECT_EQ(e.items[2].index, 0u);

    report.weights = {0.4, 0.4, 0.2};
    Explanation tied = explain_claim(report);
    EXPECT_EQ(tied.items[0].index, 0u);
    EXPECT_EQ(tied.items[1].index, 1u);
    EXPECT_EQ(tied.items[2].index, 2u);
}

TEST(ExplainClaim, RejectsWeightlessOrMismatchedReports) {
    model::VerdictReport report;
    report.claim_id = "c1";
    report.pairs = {expl_pair("q0", "a0", "e0")};
    EXPECT_THROW(explain_claim(report), VariantWithoutWeights);
    report.weights = {0.5, 0.5};
    EXPECT_THROW(explain_claim(report), LengthMismatch);
}

TEST(ExplainClaim, MarkdownEmphasizesTopQuestionsAndEscapesPipes) {
    model::VerdictReport report;
    report.claim_id = "c9";
    report.predicted = S;
    report.weights = {0.25, 0.5, 0.25};
    report.pairs = {expl_pair("plain?", "third", "got"), expl_pair("has|pipe?", "top", "best"),
                    expl_pair("quiet?", "tie-second", std::nullopt)};

    std::string md = explanation_to_markdown(explain_claim(report));
    EXPECT_EQ(md,
              "## c9: SUPPORTS\n\n"
              "| rank | weight | question | claim answer | evidence answer |\n"
              "| --- | --- | --- | --- | --- |\n"
              "| 1 | 0.500 | **has\\|pipe?** | **top** | **best** |\n"
              "| 2 | 0.250 | *plain?* | *third* | *got* |\n"
              "| 3 | 0.250 | quiet? | tie-second | (no answer) |\n");
}

TEST(ExplainClaim, JsonKeepsOriginalIndicesAndNullAnswers) {
    model::VerdictReport report;
    report.claim_id = "c2";
    report.predicted = S;
    report.weights = {0.1, 0.9};
    report.pairs = {expl_pair("q0", "a0", std::nullopt), expl_pair("q1", "a1", "e1")};

    json j = explanation_to_json(explain_claim(report));
    EXPECT_EQ(j["claim_id"], "c2");
    EXPECT_EQ(j["predicted"], "SUPPORTS");
    ASSERT_EQ(j["questions"].size(), 2u);
    EXPECT_EQ(j["questions"][0]["rank"], 1);
    EXPECT_EQ(j["questions"][0]["question_index"], 1);
    EXPECT_DOUBLE_EQ(j["questions"][0]["weight"].get<double>(), 0.9);
    EXPECT_EQ(j["questions"][1]["question_index"], 0);
    EXPECT_TRUE(j["questions"][1]["evidence_answer"].is_null());
}

TEST(BaselineMetricCodec, RoundTripsAndRejects) {
    for (BaselineMetric m :
         {BaselineMetric::kTokenF1, BaselineMetric::kCosine, BaselineMetric::kExternal})
        EXPECT_EQ(parse_baseline_metric(to_string(m)), m);
    EXPECT_FALSE(parse_baseline_metric("f1").has_value());
}

pipeline::DatasetRecord baseline_record(std::string id, Split split, Label label,
                                        std::vector<QAPair> pairs, bool abstained = false) {
    pipeline::DatasetRecord r;
    r.claim.id = id;
    r.claim.claim = "claim " + id;
    r.claim.evidence = {"evidence"};
    r.claim.label = label;
    r.claim.split = split;
    r.abstained = abstained;
    r.qaset.claim_id = std::move(id);
    r.qaset.pairs = std::move(pairs);
    return r;
}

pipeline::Dataset baseline_dataset() {
    pipeline::Dataset d;
    d.n_fixed = 1;
    d.records = {
        baseline_record("tr-s", Split::kTrain, S, {expl_pair("q", "alpha", "alpha")}),
        baseline_record("d-s", Split::kDev, S, {expl_pair("q", "alpha", "alpha")}),
        baseline_record("d-r", Split::kDev, R, {expl_pair("q", "alpha", "omega")}),
        baseline_record("t-s", Split::kTest, S, {expl_pair("q", "beta", "beta")}),
        baseline_record("t-r", Split::kTest, R, {expl_pair("q", "beta", "omega")}),
        baseline_record("t-a", Split::kTest, S, {}, true),
    };
    return d;
}

TEST(RunBaseline, TokenF1SeparatesAndAbstentionsCountAsWrong) {
    BaselineResult r = run_baseline(baseline_dataset(), BaselineMetric::kTokenF1);
    EXPECT_EQ(r.metric, BaselineMetric::kTokenF1);
    EXPECT_DOUBLE_EQ(r.threshold, 0.5);
    EXPECT_DOUBLE_EQ(r.dev_accuracy, 100.0);
    // Test golds S, R, S(abstained): the abstention flips to REFUTES, so the
    // SUPPORTS recall halves while REFUTES stays perfect.
    EXPECT_DOUBLE_EQ(r.test_accuracy, 75.0);
    EXPECT_EQ(r.dev_claims, 2u);
    EXPECT_EQ(r.test_claims, 3u);
    EXPECT_EQ(r.unscored, 1u);
}

TEST(RunBaseline, MissingEvidenceAnswerScoresZero) {
    pipeline::Dataset d;
    d.n_fixed = 1;
    d.records = {
        baseline_record("d-s", Split::kDev, S, {expl_pair("q", "alpha", "alpha")}),
        baseline_record("d-r", Split::kDev, R, {expl_pair("q", "alpha", std::nullopt)}),
        baseline_record("t-s", Split::kTest, S, {expl_pair("q", "alpha", "alpha")}),
        baseline_record("t-r", Split::kTest, R, {expl_pair("q", "alpha", std::nullopt)}),
    };
    BaselineResult r = run_baseline(d, BaselineMetric::kTokenF1);
    EXPECT_DOUBLE_EQ(r.threshold, 0.5);
    EXPECT_DOUBLE_EQ(r.dev_accuracy, 100.0);
    EXPECT_DOUBLE_EQ(r.test_accuracy, 100.0);
    EXPECT_EQ(r.unscored, 0u);
}

TEST(RunBaseline, CosineVariantSeparatesDisjointAnswers) {
    BaselineOptions options;
    options.hash_dim = 64;
    BaselineResult r = run_baseline(baseline_dataset(), BaselineMetric::kCosine, options);
    EXPECT_EQ(r.metric, BaselineMetric::kCosine);
    EXPECT_DOUBLE_EQ(r.dev_accuracy, 100.0);
    EXPECT_DOUBLE_EQ(r.test_accuracy, 75.0);
}

TEST(RunBaseline, ExternalScoresDriveTheVerdicts) {
    std::map<std::string, std::vector<double>> scores = {
        {"tr-s", {0.9}}, {"d-s", {0.8}}, {"d-r", {0.2}}, {"t-s", {0.7}},
        // t-r missing: it becomes unscored and flips to SUPPORTS (wrong).
    };
    BaselineOptions options;
    options.external_scores = &scores;
    BaselineResult r = run_baseline(baseline_dataset(), BaselineMetric::kExternal, options);
    EXPECT_DOUBLE_EQ(r.threshold, 0.5);
    EXPECT_DOUBLE_EQ(r.dev_accuracy, 100.0);
    // Test golds S, R, S(abstained): t-s right, t-r flips wrong, t-a flips wrong.
    EXPECT_DOUBLE_EQ(r.test_accuracy, 25.0);
    // t-r (absent from the table) and t-a (abstained) go unscored.
    EXPECT_EQ(r.unscored, 2u);
}

TEST(RunBaseline, ExternalLengthMismatchThrows) {
    std::map<std::string, std::vector<double>> scores = {
        {"tr-s", {0.9, 0.1}},
    };
    BaselineOptions options;
    options.external_scores = &scores;
    EXPECT_THROW(run_baseline(baseline_dataset(), BaselineMetric::kExternal, options),
                 LengthMismatch);
}

TEST(RunBaseline, ExternalWithoutTableIsAnError) {
    EXPECT_THROW(run_baseline(baseline_dataset(), BaselineMetric::kExternal), MissingInput);
}

TEST(RunBaseline, AllDevAbstainedThrowsEmptyDevSet) {
    pipeline::Dataset d;
    d.n_fixed = 1;
    d.records = {
        baseline_record("d-a", Split::kDev, S, {}, true),
        baseline_record("t-s", Split::kTest, S, {expl_pair("q", "alpha", "alpha")}),
    };
    EXPECT_THROW(run_baseline(d, BaselineMetric::kTokenF1), EmptyDevSet);
}

TEST(BaselineToJson, EncodesInfiniteThresholdsAsStrings) {
    BaselineResult r;
    r.metric = BaselineMetric::kCosine;
    r.threshold = 0.25;
    json finite = baseline_to_json(r);
    EXPECT_TRUE(finite["threshold"].is_number());
    EXPECT_DOUBLE_EQ(finite["threshold"].get<double>(), 0.25);

    r.threshold = -std::numeric_limits<double>::infinity();
    EXPECT_EQ(baseline_to_json(r)["threshold"], "-inf");
    r.threshold = std::numeric_limits<double>::infinity();
    EXPECT_EQ(baseline_to_json(r)["threshold"], "inf");
}

}  // namespace
}  // namespace qaproxy::eval
