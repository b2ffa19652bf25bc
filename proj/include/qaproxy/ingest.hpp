#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qaproxy/jsonl.hpp"
#include "qaproxy/text.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::ingest {

// Substring is the default containment reading; token-boundary is the
// stricter opt-in that only matches whole-token runs.
enum class ContainmentMode { kSubstring, kTokenBoundary };

inline bool claim_contains_answer(std::string_view claim, std::string_view answer,
                                  ContainmentMode mode = ContainmentMode::kSubstring) {
    if (mode == ContainmentMode::kSubstring) {
        return normalize_text(claim).find(normalize_text(answer)) != std::string::npos;
    }
    const std::vector<std::string> claim_tokens = normalized_tokens(claim);
    const std::vector<std::string> answer_tokens = normalized_tokens(answer);
    if (answer_tokens.empty()) return true;
    if (answer_tokens.size() > claim_tokens.size()) return false;
    for (std::size_t i = 0; i + answer_tokens.size() <= claim_tokens.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < answer_tokens.size(); ++k) {
            if (claim_tokens[i + k] != answer_tokens[k]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

// Drops pairs whose claim-side answer the claim does not contain, preserving
// order. Idempotent by construction.
inline std::vector<QAPair> filter_qa_pairs(std::string_view claim, std::vector<QAPair> pairs,
                                           ContainmentMode mode = ContainmentMode::kSubstring) {
    std::vector<QAPair> kept;
    kept.reserve(pairs.size());
    for (auto& pair : pairs)
        if (claim_contains_answer(claim, pair.claim_answer, mode)) kept.push_back(std::move(pair));
    return kept;
}

// First n_fixed questions when there are enough; otherwise the list is
// topped up by repeating the first pair (question and answers alike).
inline QASet select_questions(std::string claim_id, std::vector<QAPair> pairs, int n_fixed) {
    if (pairs.empty())
        throw EmptyQASet("select_questions: claim " + claim_id + " has no QA pairs");
    QASet set;
    set.claim_id = std::move(claim_id);
    const std::size_t target = static_cast<std::size_t>(n_fixed);
    if (pairs.size() >= target) {
        pairs.resize(target);
        set.pairs = std::move(pairs);
    } else {
        set.padded = true;
        set.pairs = std::move(pairs);
        const QAPair first = set.pairs.front();
        while (set.pairs.size() < target) set.pairs.push_back(first);
    }
    return set;
}

// Claims file: JSON Lines of
//   {"id", "claim", "evidence": [...], "label": SUPPORTS|REFUTES,
//    "split": train|dev|test}
inline std::vector<ClaimRecord> load_claims(const std::string& path) {
    std::vector<ClaimRecord> records;
    std::set<std::string> seen_ids;
    for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        ClaimRecord rec;
        rec.id = get_string(j, "id", path, line_no);
        rec.claim = get_string(j, "claim", path, line_no);
        if (!j.contains("evidence") || !j["evidence"].is_array())
            throw ParseError(path, line_no, "evidence: expected array of strings");
        for (const auto& e : j["evidence"]) {
            if (!e.is_string()) throw ParseError(path, line_no, "evidence: expected strings");
            rec.evidence.push_back(e.get<std::string>());
        }
        const std::string label_text = get_string(j, "label", path, line_no);
        auto label = parse_label(label_text);
        if (!label)
            throw ParseError(path, line_no,
                             "label: \"" + label_text + "\" is not SUPPORTS or REFUTES");
        rec.label = *label;
        const std::string split_text = get_string(j, "split", path, line_no);
        auto split = parse_split(split_text);
        if (!split)
            throw ParseError(path, line_no,
                             "split: \"" + split_text + "\" is not train, dev, or test");
        rec.split = *split;

        if (!seen_ids.insert(rec.id).second)
            throw ParseError(path, line_no, "duplicate id " + rec.id);
        if (auto violations = validate_record(rec); !violations.empty()) {
            std::string msg = "invalid record:";
            for (const auto& v : violations) msg += " " + v + ";";
            throw ParseError(path, line_no, msg);
        }
        records.push_back(std::move(rec));
    });
    return records;
}

// QA file: JSON Lines of
//   {"claim_id", "pairs": [{"question", "claim_answer",
//                           "evidence_answer": str|null,
//                           "evidence_score": num|null}, ...]}
// Sets come back pre-selection; claims without a line are simply absent.
inline std::map<std::string, QASet> load_qa_sets(const std::string& path,
                                                 const std::vector<ClaimRecord>& claims) {
    std::set<std::string> known_ids;
    for (const auto& c : claims) known_ids.insert(c.id);

    std::map<std::string, QASet> sets;
    std::vector<std::string> dangling;
    for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        std::string claim_id = get_string(j, "claim_id", path, line_no);
        if (!known_ids.count(claim_id)) {
            dangling.push_back(claim_id);
            return;
        }
        if (sets.count(claim_id))
            throw ParseError(path, line_no, "duplicate claim_id " + claim_id);
        if (!j.contains("pairs") || !j["pairs"].is_array())
            throw ParseError(path, line_no, "pairs: expected array");
        QASet set;
        set.claim_id = claim_id;
        for (const auto& pj : j["pairs"]) {
            QAPair pair;
            pair.question = get_string(pj, "question", path, line_no);
            pair.claim_answer = get_string(pj, "claim_answer", path, line_no);
            if (pj.contains("evidence_answer") && !pj["evidence_answer"].is_null()) {
                if (!pj["evidence_answer"].is_string())
                    throw ParseError(path, line_no, "evidence_answer: expected string or null");
                pair.evidence_answer = pj["evidence_answer"].get<std::string>();
            }
            if (pj.contains("evidence_score") && !pj["evidence_score"].is_null())
                pair.evidence_score = get_finite_number(pj, "evidence_score", path, line_no);
            if (auto violations = validate_pair(pair); !violations.empty())
                throw ParseError(path, line_no, "invalid pair: " + violations.front());
            set.pairs.push_back(std::move(pair));
        }
        sets.emplace(std::move(claim_id), std::move(set));
    });

    if (!dangling.empty()) {
        std::string msg = std::to_string(dangling.size()) + " QA line(s) reference unknown claims:";
        for (std::size_t i = 0; i < dangling.size() && i < 5; ++i) msg += " " + dangling[i];
        if (dangling.size() > 5) msg += " ...";
        throw DanglingClaimId(msg);
    }
    return sets;
}

}  // namespace qaproxy::ingest
