#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qaproxy/embed.hpp"
#include "qaproxy/ingest.hpp"
#include "qaproxy/jsonl.hpp"
#include "qaproxy/qa_client.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::pipeline {

// One claim flowing through the staged pipeline. After assembly the QA set
// is selected to n_fixed; claims with nothing left after filtering are kept
// as abstentions so evaluation can score them honestly.
struct DatasetRecord {
    ClaimRecord claim;
    QASet qaset;
    bool abstained = false;
};

struct Dataset {
    int n_fixed = 10;
    std::vector<DatasetRecord> records;
};

struct ValidationReport {
    std::size_t claims = 0;
    std::size_t with_qa = 0;
    std::size_t abstained = 0;
    std::size_t padded = 0;
    std::size_t pairs_before_filter = 0;
    std::size_t pairs_after_filter = 0;

    json to_json() const {
        return json{{"claims", claims},
                    {"with_qa", with_qa},
                    {"abstained", abstained},
                    {"padded", padded},
                    {"pairs_before_filter", pairs_before_filter},
                    {"pairs_after_filter", pairs_after_filter}};
    }
};

// Filter by answer containment, then select to n_fixed. Claims with no QA
// line or nothing surviving the filter become abstentions.
inline Dataset assemble_dataset(const std::vector<ClaimRecord>& claims,
                                const std::map<std::string, QASet>& qa_sets, int n_fixed,
                                ingest::ContainmentMode mode, ValidationReport* report = nullptr) {
    Dataset dataset;
    dataset.n_fixed = n_fixed;
    ValidationReport stats;
    stats.claims = claims.size();

    for (const ClaimRecord& claim : claims) {
        DatasetRecord record;
        record.claim = claim;
        auto it = qa_sets.find(claim.id);
        std::vector<QAPair> surviving;
        if (it != qa_sets.end()) {
            ++stats.with_qa;
            stats.pairs_before_filter += it->second.pairs.size();
            surviving = ingest::filter_qa_pairs(claim.claim, it->second.pairs, mode);
            stats.pairs_after_filter += surviving.size();
        }
        if (surviving.empty()) {
            record.abstained = true;
            record.qaset.claim_id = claim.id;
            ++stats.abstained;
        } else {
            record.qaset = ingest::select_questions(claim.id, std::move(surviving), n_fixed);
            if (record.qaset.padded) ++stats.padded;
        }
        dataset.records.push_back(std::move(record));
    }
    if (report) *report = stats;
    return dataset;
}

// Joined gold evidence as one QA context. The gold passages form a single
// context for the extractive QA model.
inline std::string joined_evidence(const ClaimRecord& claim) {
    std::string out;
    for (const auto& e : claim.evidence) {
        if (!out.empty()) out += ' ';
        out += e;
    }
    return out;
}

// Fills missing evidence answers by querying the QA service, at most `jobs`
// claims in flight. Identical questions within a claim (padding repeats the
// first one) are asked once. Returns the number of service calls made.
inline std::size_t fill_evidence_answers(Dataset& dataset,
                                         const ingest::QAServiceEndpoint& endpoint,
                                         int jobs = 4) {
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> calls{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= dataset.records.size()) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            DatasetRecord& record = dataset.records[i];
            if (record.abstained) continue;
            try {
                const std::string evidence = joined_evidence(record.claim);
                std::map<std::string, std::pair<std::optional<std::string>, std::optional<double>>>
                    cache;
                for (QAPair& pair : record.qaset.pairs) {
                    if (pair.evidence_answer) continue;
                    auto it = cache.find(pair.question);
                    if (it == cache.end()) {
                        auto answer =
                            ingest::fetch_evidence_answer(endpoint, pair.question, evidence);
                        calls.fetch_add(1);
                        std::pair<std::optional<std::string>, std::optional<double>> entry;
                        if (answer) entry = {answer->text, answer->score};
                        it = cache.emplace(pair.question, std::move(entry)).first;
                    }
                    pair.evidence_answer = it->second.first;
                    pair.evidence_score = it->second.second;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::max(1, jobs);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return calls.load();
}

// ---------------------------------------------------------------------------
// Dataset archive: header line {"format","version","n_fixed"}, then one
// record per line.

namespace detail {

inline json pair_to_json(const QAPair& pair) {
    json j;
    j["question"] = pair.question;
    j["claim_answer"] = pair.claim_answer;
    j["evidence_answer"] = pair.evidence_answer ? json(*pair.evidence_answer) : json(nullptr);
    j["evidence_score"] = pair.evidence_score ? json(*pair.evidence_score) : json(nullptr);
    return j;
}

inline QAPair pair_from_json(const json& pj, const std::string& path, std::size_t line_no) {
    QAPair pair;
    pair.question = get_string(pj, "question", path, line_no);
    pair.claim_answer = get_string(pj, "claim_answer", path, line_no);
    if (pj.contains("evidence_answer") && !pj["evidence_answer"].is_null())
        pair.evidence_answer = pj["evidence_answer"].get<std::string>();
    if (pj.contains("evidence_score") && !pj["evidence_score"].is_null())
        pair.evidence_score = get_finite_number(pj, "evidence_score", path, line_no);
    if (auto violations = validate_pair(pair); !violations.empty())
        throw ParseError(path, line_no, "invalid pair: " + violations.front());
    return pair;
}

}  // namespace detail

inline void write_dataset(const std::string& path, const Dataset& dataset) {
    std::string out;
    out += json{{"format", "qaproxy-dataset"}, {"version", 1}, {"n_fixed", dataset.n_fixed}}.dump();
    out += '\n';
    for (const DatasetRecord& record : dataset.records) {
        json j;
        j["id"] = record.claim.id;
        j["claim"] = record.claim.claim;
        j["evidence"] = record.claim.evidence;
        j["label"] = std::string(to_string(record.claim.label));
        j["split"] = std::string(to_string(record.claim.split));
        j["abstained"] = record.abstained;
        j["padded"] = record.qaset.padded;
        json pairs = json::array();
        for (const QAPair& pair : record.qaset.pairs) pairs.push_back(detail::pair_to_json(pair));
        j["pairs"] = std::move(pairs);
        out += j.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

inline Dataset read_dataset(const std::string& path) {
    Dataset dataset;
    bool have_header = false;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        if (!have_header) {
            if (j.value("format", "") != "qaproxy-dataset")
                throw ParseError(path, line_no, "not a qaproxy dataset file");
            if (j.value("version", -1) != 1)
                throw ParseError(path, line_no, "unsupported dataset version");
            dataset.n_fixed = static_cast<int>(get_finite_number(j, "n_fixed", path, line_no));
            if (dataset.n_fixed <= 0) throw ParseError(path, line_no, "n_fixed must be positive");
            have_header = true;
            return;
        }
        DatasetRecord record;
        record.claim.id = get_string(j, "id", path, line_no);
        if (!seen.insert(record.claim.id).second)
            throw ParseError(path, line_no, "duplicate id " + record.claim.id);
        record.claim.claim = get_string(j, "claim", path, line_no);
        if (!j.contains("evidence") || !j["evidence"].is_array())
            throw ParseError(path, line_no, "evidence: expected array");
        for (const auto& e : j["evidence"]) record.claim.evidence.push_back(e.get<std::string>());
        auto label = parse_label(get_string(j, "label", path, line_no));
        if (!label) throw ParseError(path, line_no, "label: not SUPPORTS or REFUTES");
        record.claim.label = *label;
        auto split = parse_split(get_string(j, "split", path, line_no));
        if (!split) throw ParseError(path, line_no, "split: not train, dev, or test");
        record.claim.split = *split;
        record.abstained = j.value("abstained", false);
        record.qaset.claim_id = record.claim.id;
        record.qaset.padded = j.value("padded", false);
        if (j.contains("pairs"))
            for (const auto& pj : j["pairs"])
                record.qaset.pairs.push_back(detail::pair_from_json(pj, path, line_no));
        if (!record.abstained && record.qaset.pairs.size() != static_cast<std::size_t>(dataset.n_fixed))
            throw ParseError(path, line_no,
                             "record has " + std::to_string(record.qaset.pairs.size()) +
                                 " pairs, expected n_fixed=" + std::to_string(dataset.n_fixed));
        dataset.records.push_back(std::move(record));
    });
    if (!have_header) throw ParseError(path, 1, "missing dataset header line");
    return dataset;
}

// ---------------------------------------------------------------------------
// Bundle archive: the embedded dataset. Keeps the claim and QA text next to
// the vectors so verdicts stay explainable downstream.

struct BundleRecord {
    std::string claim_id;
    Label label = Label::kSupports;
    Split split = Split::kTrain;
    bool abstained = false;
    bool padded = false;
    std::string claim_text;
    std::vector<QAPair> pairs;
    FeatureBundle bundle;  // empty when abstained
};

struct BundleSet {
    int n_fixed = 10;
    int dim_claim = 0;
    int dim_question = 0;
    int dim_answer_pair = 0;
    std::string provider;  // human-readable provenance, e.g. "hash(dim=256,seed=0)"
    std::vector<BundleRecord> records;
};

inline BundleSet build_bundles(const Dataset& dataset, const embed::EmbeddingProvider& provider,
                               std::string provider_desc) {
    BundleSet set;
    set.n_fixed = dataset.n_fixed;
    set.dim_claim = provider.dim_claim();
    set.dim_question = provider.dim_question();
    set.dim_answer_pair = provider.dim_answer_pair();
    set.provider = std::move(provider_desc);
    for (const DatasetRecord& record : dataset.records) {
        BundleRecord br;
        br.claim_id = record.claim.id;
        br.label = record.claim.label;
        br.split = record.claim.split;
        br.abstained = record.abstained;
        br.padded = record.qaset.padded;
        br.claim_text = record.claim.claim;
        br.pairs = record.qaset.pairs;
        if (!record.abstained)
            br.bundle = embed::build_bundle(provider, record.claim, record.qaset);
        set.records.push_back(std::move(br));
    }
    return set;
}

inline void write_bundles(const std::string& path, const BundleSet& set) {
    std::string out;
    out += json{{"format", "qaproxy-bundles"},
                {"version", 1},
                {"n_fixed", set.n_fixed},
                {"dim_claim", set.dim_claim},
                {"dim_question", set.dim_question},
                {"dim_answer_pair", set.dim_answer_pair},
                {"provider", set.provider}}
               .dump();
    out += '\n';
    for (const BundleRecord& record : set.records) {
        json j;
        j["claim_id"] = record.claim_id;
        j["label"] = std::string(to_string(record.label));
        j["split"] = std::string(to_string(record.split));
        j["abstained"] = record.abstained;
        j["padded"] = record.padded;
        j["claim"] = record.claim_text;
        if (!record.abstained) {
            json pairs = json::array();
            for (const QAPair& pair : record.pairs) pairs.push_back(detail::pair_to_json(pair));
            j["pairs"] = std::move(pairs);
            j["claim_vec"] = record.bundle.claim_vec;
            j["question_vecs"] = record.bundle.question_vecs;
            j["answer_vecs"] = record.bundle.answer_vecs;
        }
        out += j.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

inline BundleSet read_bundles(const std::string& path) {
    BundleSet set;
    bool have_header = false;
    for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        if (!have_header) {
            if (j.value("format", "") != "qaproxy-bundles")
                throw ParseError(path, line_no, "not a qaproxy bundle file");
            if (j.value("version", -1) != 1)
                throw ParseError(path, line_no, "unsupported bundle version");
            set.n_fixed = static_cast<int>(get_finite_number(j, "n_fixed", path, line_no));
            set.dim_claim = static_cast<int>(get_finite_number(j, "dim_claim", path, line_no));
            set.dim_question =
                static_cast<int>(get_finite_number(j, "dim_question", path, line_no));
            set.dim_answer_pair =
                static_cast<int>(get_finite_number(j, "dim_answer_pair", path, line_no));
            set.provider = j.value("provider", "");
            have_header = true;
            return;
        }
        BundleRecord record;
        record.claim_id = get_string(j, "claim_id", path, line_no);
        auto label = parse_label(get_string(j, "label", path, line_no));
        if (!label) throw ParseError(path, line_no, "label: not SUPPORTS or REFUTES");
        record.label = *label;
        auto split = parse_split(get_string(j, "split", path, line_no));
        if (!split) throw ParseError(path, line_no, "split: not train, dev, or test");
        record.split = *split;
        record.abstained = j.value("abstained", false);
        record.padded = j.value("padded", false);
        record.claim_text = get_string(j, "claim", path, line_no);
        if (!record.abstained) {
            for (const auto& pj : j.at("pairs"))
                record.pairs.push_back(detail::pair_from_json(pj, path, line_no));
            record.bundle.claim_vec = j.at("claim_vec").get<Vec>();
            record.bundle.question_vecs = j.at("question_vecs").get<std::vector<Vec>>();
            record.bundle.answer_vecs = j.at("answer_vecs").get<std::vector<Vec>>();
            if (auto violations = validate_bundle(record.bundle); !violations.empty())
                throw ParseError(path, line_no, "invalid bundle: " + violations.front());
            if (static_cast<int>(record.bundle.claim_vec.size()) != set.dim_claim ||
                static_cast<int>(record.bundle.question_vecs.front().size()) != set.dim_question ||
                static_cast<int>(record.bundle.answer_vecs.front().size()) != set.dim_answer_pair)
                throw ParseError(path, line_no, "bundle dims do not match header");
        }
        set.records.push_back(std::move(record));
    });
    if (!have_header) throw ParseError(path, 1, "missing bundle header line");
    return set;
}

// Bundle records still carry the dataset fields; project them back for
// consumers that work on text (the metric baselines).
inline Dataset to_dataset(const BundleSet& set) {
    Dataset dataset;
    dataset.n_fixed = set.n_fixed;
    for (const BundleRecord& record : set.records) {
        DatasetRecord dr;
        dr.claim.id = record.claim_id;
        dr.claim.claim = record.claim_text;
        dr.claim.label = record.label;
        dr.claim.split = record.split;
        dr.abstained = record.abstained;
        dr.qaset.claim_id = record.claim_id;
        dr.qaset.padded = record.padded;
        dr.qaset.pairs = record.pairs;
        dataset.records.push_back(std::move(dr));
    }
    return dataset;
}

}  // namespace qaproxy::pipeline
