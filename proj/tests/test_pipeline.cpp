#include "qaproxy/pipeline.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "qaproxy/embed.hpp"
#include "qaproxy/errors.hpp"
#include "test_util.hpp"

namespace qaproxy::pipeline {
namespace {

ClaimRecord claim(std::string id, std::string text, Label label = Label::kSupports,
                  Split split = Split::kTrain) {
    ClaimRecord c;
    c.id = std::move(id);
    c.claim = std::move(text);
    c.evidence = {"evidence for " + c.id};
    c.label = label;
    c.split = split;
    return c;
}

QAPair pair(std::string question, std::string claim_answer) {
    QAPair p;
    p.question = std::move(question);
    p.claim_answer = std::move(claim_answer);
    return p;
}

QAPair answered(std::string question, std::string claim_answer, std::string evidence_answer,
                double score) {
    QAPair p = pair(std::move(question), std::move(claim_answer));
    p.evidence_answer = std::move(evidence_answer);
    p.evidence_score = score;
    return p;
}

TEST(AssembleDataset, FiltersSelectsAndAbstains) {
    std::vector<ClaimRecord> claims = {claim("c1", "alpha beta"), claim("c2", "gamma"),
                                       claim("c3", "delta")};
    std::map<std::string, QASet> qa;
    qa["c1"] = QASet{"c1", {pair("q0", "alpha"), pair("q1", "zeta")}, false};
    qa["c3"] = QASet{"c3", {pair("q2", "omega")}, false};
    // c2 has no QA line at all; c3 loses its only pair to the filter.

    ValidationReport report;
    Dataset dataset =
        assemble_dataset(claims, qa, 3, ingest::ContainmentMode::kSubstring, &report);

    ASSERT_EQ(dataset.records.size(), 3u);
    EXPECT_EQ(dataset.n_fixed, 3);

    const DatasetRecord& r1 = dataset.records[0];
    EXPECT_FALSE(r1.abstained);
    EXPECT_TRUE(r1.qaset.padded);
    ASSERT_EQ(r1.qaset.pairs.size(), 3u);
    EXPECT_EQ(r1.qaset.pairs[0].question, "q0");
    EXPECT_EQ(r1.qaset.pairs[1].question, "q0");

    EXPECT_TRUE(dataset.records[1].abstained);
    EXPECT_EQ(dataset.records[1].qaset.claim_id, "c2");
    EXPECT_TRUE(dataset.records[1].qaset.pairs.empty());
    EXPECT_TRUE(dataset.records[2].abstained);

    EXPECT_EQ(report.claims, 3u);
    EXPECT_EQ(report.with_qa, 2u);
    EXPECT_EQ(report.abstained, 2u);
    EXPECT_EQ(report.padded, 1u);
    EXPECT_EQ(report.pairs_before_filter, 3u);
    EXPECT_EQ(report.pairs_after_filter, 1u);

    json j = report.to_json();
    EXPECT_EQ(j["claims"], 3);
    EXPECT_EQ(j["abstained"], 2);
}

TEST(JoinedEvidence, ConcatenatesWithSingleSpaces) {
    ClaimRecord c = claim("c1", "text");
    c.evidence = {"first passage.", "second passage."};
    EXPECT_EQ(joined_evidence(c), "first passage. second passage.");
    c.evidence = {"only"};
    EXPECT_EQ(joined_evidence(c), "only");
}

Dataset sample_dataset() {
    Dataset dataset;
    dataset.n_fixed = 2;
    DatasetRecord r1;
    r1.claim = claim("c1", "alpha beta", Label::kSupports, Split::kTrain);
    r1.qaset = QASet{"c1", {answered("q0", "alpha", "alpha", 0.75), pair("q1", "beta")}, false};
    DatasetRecord r2;
    r2.claim = claim("c2", "gamma", Label::kRefutes, Split::kTest);
    r2.abstained = true;
    r2.qaset.claim_id = "c2";
    dataset.records = {std::move(r1), std::move(r2)};
    return dataset;
}

void expect_same_dataset(const Dataset& a, const Dataset& b) {
    EXPECT_EQ(a.n_fixed, b.n_fixed);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const DatasetRecord& x = a.records[i];
        const DatasetRecord& y = b.records[i];
        EXPECT_EQ(x.claim.id, y.claim.id);
        EXPECT_EQ(x.claim.claim, y.claim.claim);
        EXPECT_EQ(x.claim.evidence, y.claim.evidence);
        EXPECT_EQ(x.claim.label, y.claim.label);
        EXPECT_EQ(x.claim.split, y.claim.split);
        EXPECT_EQ(x.abstained, y.abstained);
        EXPECT_EQ(x.qaset.claim_id, y.qaset.claim_id);
        EXPECT_EQ(x.qaset.padded, y.qaset.padded);
        EXPECT_EQ(x.qaset.pairs, y.qaset.pairs);
    }
}

TEST(DatasetArchive, RoundTripsExactly) {
    testutil::TempDir dir;
    const std::string path = dir.file("dataset.jsonl");
    Dataset original = sample_dataset();
    write_dataset(path, original);
    Dataset loaded = read_dataset(path);
    expect_same_dataset(original, loaded);

    const std::string first = testutil::read_file(path);
    write_dataset(path, loaded);
    EXPECT_EQ(testutil::read_file(path), first);
}

TEST(DatasetArchive, RejectsDamagedFiles) {
    testutil::TempDir dir;
    const std::string path = dir.file("dataset.jsonl");

    testutil::write_file(path, "");
    EXPECT_THROW(read_dataset(path), ParseError);

    testutil::write_file(path, R"({"format":"something-else","version":1,"n_fixed":2})"
                               "\n");
    EXPECT_THROW(read_dataset(path), ParseError);

    testutil::write_file(path, R"({"format":"qaproxy-dataset","version":9,"n_fixed":2})"
                               "\n");
    EXPECT_THROW(read_dataset(path), ParseError);

    testutil::write_file(path, R"({"format":"qaproxy-dataset","version":1,"n_fixed":0})"
                               "\n");
    EXPECT_THROW(read_dataset(path), ParseError);

    const std::string header = R"({"format":"qaproxy-dataset","version":1,"n_fixed":2})"
                               "\n";
    const std::string short_record =
        R"({"id":"c1","claim":"x","evidence":["e"],"label":"SUPPORTS","split":"train",)"
        R"("abstained":false,"padded":false,"pairs":[{"question":"q","claim_answer":"a",)"
        R"("evidence_answer":null,"evidence_score":null}]})"
        "\n";
    testutil::write_file(path, header + short_record);
    try {
        read_dataset(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("expected n_fixed=2"), std::string::npos);
    }

    Dataset original = sample_dataset();
    write_dataset(path, original);
    std::string body = testutil::read_file(path);
    std::size_t header_end = body.find('\n');
    std::string one_record = body.substr(header_end + 1);
    one_record = one_record.substr(0, one_record.find('\n') + 1);
    testutil::write_file(path, body + one_record);
    EXPECT_THROW(read_dataset(path), ParseError);
}

class LocalQAService {
  public:
    explicit LocalQAService(httplib::Server::Handler handler) {
        server_.Post("/answer", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LocalQAService() {
        server_.stop();
        thread_.join();
    }

    ingest::QAServiceEndpoint endpoint() const {
        ingest::QAServiceEndpoint ep;
        ep.base_url = "http://127.0.0.1:" + std::to_string(port_);
        ep.timeout = std::chrono::milliseconds(2000);
        return ep;
    }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

TEST(FillEvidenceAnswers, AsksOncePerDistinctQuestionAndFillsEveryPair) {
    std::atomic<int> hits{0};
    LocalQAService service([&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        auto doc = nlohmann::json::parse(req.body);
        const std::string question = doc.at("question");
        if (question == "silent?") {
            res.set_content(R"({"candidates":[]})", "application/json");
            return;
        }
        nlohmann::json out = {
            {"candidates", {{{"text", "ans " + question}, {"score", 0.5}}}},
        };
        res.set_content(out.dump(), "application/json");
    });

    Dataset dataset;
    dataset.n_fixed = 4;
    DatasetRecord r;
    r.claim = claim("c1", "alpha beta");
    // Padding repeats q0; one pair the service cannot answer; one pre-filled.
    r.qaset = QASet{"c1",
                    {pair("q0?", "alpha"), pair("silent?", "beta"),
                     answered("done?", "alpha", "kept", 0.25), pair("q0?", "alpha")},
                    true};
    dataset.records.push_back(std::move(r));

    const std::size_t calls = fill_evidence_answers(dataset, service.endpoint(), 2);
    EXPECT_EQ(calls, 2u);
    EXPECT_EQ(hits.load(), 2);

    const auto& pairs = dataset.records[0].qaset.pairs;
    ASSERT_EQ(pairs.size(), 4u);
    EXPECT_EQ(pairs[0].evidence_answer, "ans q0?");
    EXPECT_DOUBLE_EQ(*pairs[0].evidence_score, 0.5);
    EXPECT_FALSE(pairs[1].evidence_answer.has_value());
    EXPECT_FALSE(pairs[1].evidence_score.has_value());
    EXPECT_EQ(pairs[2].evidence_answer, "kept");
    EXPECT_DOUBLE_EQ(*pairs[2].evidence_score, 0.25);
    EXPECT_EQ(pairs[3].evidence_answer, "ans q0?");
}

TEST(FillEvidenceAnswers, CoversManyClaimsAcrossWorkers) {
    std::atomic<int> hits{0};
    LocalQAService service([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.set_content(R"({"candidates":[{"text":"yes","score":1.0}]})", "application/json");
    });

    Dataset dataset;
    dataset.n_fixed = 2;
    for (int i = 0; i < 8; ++i) {
        DatasetRecord r;
        r.claim = claim("c" + std::to_string(i), "alpha");
        r.qaset = QASet{r.claim.id,
                        {pair("first " + std::to_string(i), "alpha"),
                         pair("second " + std::to_string(i), "alpha")},
                        false};
        dataset.records.push_back(std::move(r));
    }
    DatasetRecord skip;
    skip.claim = claim("c-skip", "alpha");
    skip.abstained = true;
    skip.qaset.claim_id = "c-skip";
    dataset.records.push_back(std::move(skip));

    const std::size_t calls = fill_evidence_answers(dataset, service.endpoint(), 3);
    EXPECT_EQ(calls, 16u);
    EXPECT_EQ(hits.load(), 16);
    for (const auto& record : dataset.records) {
        if (record.abstained) continue;
        for (const auto& p : record.qaset.pairs) {
            EXPECT_EQ(p.evidence_answer, "yes");
            EXPECT_DOUBLE_EQ(*p.evidence_score, 1.0);
        }
    }
}

TEST(FillEvidenceAnswers, PropagatesServiceFailure) {
    Dataset dataset;
    dataset.n_fixed = 1;
    DatasetRecord r;
    r.claim = claim("c1", "alpha");
    r.qaset = QASet{"c1", {pair("q?", "alpha")}, false};
    dataset.records.push_back(std::move(r));

    ingest::QAServiceEndpoint ep;
    ep.base_url = "http://127.0.0.1:1";
    ep.timeout = std::chrono::milliseconds(200);
    ep.max_retries = 0;
    EXPECT_THROW(fill_evidence_answers(dataset, ep, 2), ServiceUnreachable);
}

Dataset answered_dataset() {
    Dataset dataset;
    dataset.n_fixed = 2;
    DatasetRecord r1;
    r1.claim = claim("c1", "alpha beta", Label::kSupports, Split::kTrain);
    r1.qaset = QASet{
        "c1", {answered("q0", "alpha", "alpha", 0.9), answered("q1", "beta", "other", 0.4)}, false};
    DatasetRecord r2;
    r2.claim = claim("c2", "gamma joy", Label::kRefutes, Split::kDev);
    r2.qaset = QASet{"c2", {answered("q2", "gamma", "gamma", 0.8), pair("q3", "joy")}, false};
    DatasetRecord r3;
    r3.claim = claim("c3", "delta", Label::kSupports, Split::kTest);
    r3.abstained = true;
    r3.qaset.claim_id = "c3";
    dataset.records = {std::move(r1), std::move(r2), std::move(r3)};
    return dataset;
}

TEST(BundleArchive, BuildsWritesAndReadsBack) {
    embed::HashEmbedder embedder(8, 7);
    Dataset dataset = answered_dataset();
    BundleSet set = build_bundles(dataset, embedder, "hash(dim=8,seed=7)");

    EXPECT_EQ(set.n_fixed, 2);
    EXPECT_EQ(set.dim_claim, 8);
    EXPECT_EQ(set.dim_question, 8);
    EXPECT_EQ(set.dim_answer_pair, 16);
    ASSERT_EQ(set.records.size(), 3u);
    EXPECT_FALSE(set.records[0].abstained);
    EXPECT_EQ(set.records[0].bundle.question_vecs.size(), 2u);
    EXPECT_TRUE(set.records[2].abstained);
    EXPECT_TRUE(set.records[2].bundle.claim_vec.empty());

    // The unanswered q3 embeds the shared no-answer sentinel.
    EXPECT_EQ(set.records[1].bundle.answer_vecs[1],
              embedder.embed_answer_pair("c2", 1, "joy", kNoAnswerSentinel));

    testutil::TempDir dir;
    const std::string path = dir.file("bundles.jsonl");
    write_bundles(path, set);
    BundleSet loaded = read_bundles(path);

    EXPECT_EQ(loaded.n_fixed, set.n_fixed);
    EXPECT_EQ(loaded.dim_claim, set.dim_claim);
    EXPECT_EQ(loaded.dim_question, set.dim_question);
    EXPECT_EQ(loaded.dim_answer_pair, set.dim_answer_pair);
    EXPECT_EQ(loaded.provider, "hash(dim=8,seed=7)");
    ASSERT_EQ(loaded.records.size(), set.records.size());
    for (std::size_t i = 0; i < set.records.size(); ++i) {
        const BundleRecord& x = set.records[i];
        const BundleRecord& y = loaded.records[i];
        EXPECT_EQ(x.claim_id, y.claim_id);
        EXPECT_EQ(x.label, y.label);
        EXPECT_EQ(x.split, y.split);
        EXPECT_EQ(x.abstained, y.abstained);
        EXPECT_EQ(x.padded, y.padded);
        EXPECT_EQ(x.claim_text, y.claim_text);
        EXPECT_EQ(x.pairs, y.pairs);
        EXPECT_EQ(x.bundle.claim_vec, y.bundle.claim_vec);
        EXPECT_EQ(x.bundle.question_vecs, y.bundle.question_vecs);
        EXPECT_EQ(x.bundle.answer_vecs, y.bundle.answer_vecs);
    }

    const std::string first = testutil::read_file(path);
    write_bundles(path, loaded);
    EXPECT_EQ(testutil::read_file(path), first);
}

TEST(BundleArchive, RejectsDamagedFiles) {
    testutil::TempDir dir;
    const std::string path = dir.file("bundles.jsonl");

    testutil::write_file(path, "");
    EXPECT_THROW(read_bundles(path), ParseError);

    testutil::write_file(path, R"({"format":"qaproxy-dataset","version":1,"n_fixed":1})"
                               "\n");
    EXPECT_THROW(read_bundles(path), ParseError);

    const std::string header =
        R"({"format":"qaproxy-bundles","version":1,"n_fixed":1,"dim_claim":2,)"
        R"("dim_question":2,"dim_answer_pair":2,"provider":"x"})"
        "\n";
    const std::string narrow_answer =
        R"({"claim_id":"c1","label":"SUPPORTS","split":"train","abstained":false,)"
        R"("padded":false,"claim":"alpha","pairs":[{"question":"q","claim_answer":"alpha",)"
        R"("evidence_answer":null,"evidence_score":null}],)"
        R"("claim_vec":[0.6,0.8],"question_vecs":[[1.0,0.0]],"answer_vecs":[[1.0]]})"
        "\n";
    testutil::write_file(path, header + narrow_answer);
    try {
        read_bundles(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("dims do not match header"), std::string::npos);
    }

    // 1e999 overflows double during JSON parsing, so it is rejected before
    // any bundle-level validation runs.
    const std::string overflowing =
        R"({"claim_id":"c1","label":"SUPPORTS","split":"train","abstained":false,)"
        R"("padded":false,"claim":"alpha","pairs":[{"question":"q","claim_answer":"alpha",)"
        R"("evidence_answer":null,"evidence_score":null}],)"
        R"("claim_vec":[1e999,0.8],"question_vecs":[[1.0,0.0]],"answer_vecs":[[1.0,0.0]]})"
        "\n";
    testutil::write_file(path, header + overflowing);
    try {
        read_bundles(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("invalid JSON"), std::string::npos);
        EXPECT_EQ(e.line(), 2u);
    }

    const std::string ragged =
        R"({"claim_id":"c1","label":"SUPPORTS","split":"train","abstained":false,)"
        R"("padded":false,"claim":"alpha","pairs":[{"question":"q","claim_answer":"alpha",)"
        R"("evidence_answer":null,"evidence_score":null}],)"
        R"("claim_vec":[0.6,0.8],"question_vecs":[[1.0,0.0],[0.0,1.0]],)"
        R"("answer_vecs":[[1.0,0.0]]})"
        "\n";
    testutil::write_file(path, header + ragged);
    try {
        read_bundles(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("invalid bundle"), std::string::npos);
    }
}

TEST(BundleArchive, ProjectsBackToDatasetFields) {
    embed::HashEmbedder embedder(8, 0);
    Dataset dataset = answered_dataset();
    BundleSet set = build_bundles(dataset, embedder, "hash");
    Dataset projected = to_dataset(set);

    EXPECT_EQ(projected.n_fixed, dataset.n_fixed);
    ASSERT_EQ(projected.records.size(), dataset.records.size());
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        EXPECT_EQ(projected.records[i].claim.id, dataset.records[i].claim.id);
        EXPECT_EQ(projected.records[i].claim.claim, dataset.records[i].claim.claim);
        EXPECT_EQ(projected.records[i].claim.label, dataset.records[i].claim.label);
        EXPECT_EQ(projected.records[i].claim.split, dataset.records[i].claim.split);
        EXPECT_EQ(projected.records[i].abstained, dataset.records[i].abstained);
        EXPECT_EQ(projected.records[i].qaset.pairs, dataset.records[i].qaset.pairs);
    }
}

}  // namespace
}  // namespace qaproxy::pipeline
