#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaproxy/jsonl.hpp"
#include "qaproxy/linalg.hpp"
#include "qaproxy/text.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::metrics {

// A claim with its per-pair similarity scores; claim_score is their mean.
struct ScoredClaim {
    std::string claim_id;
    std::vector<double> pair_scores;
    double claim_score = 0.0;
    Label label = Label::kSupports;
};

namespace detail {

// Mean per-class recall over the classes present in `golds`.
inline double macro_over(const std::vector<Label>& preds, const std::vector<Label>& golds) {
    int gold_count[2] = {0, 0};
    int correct[2] = {0, 0};
    for (std::size_t i = 0; i < golds.size(); ++i) {
        int c = label_index(golds[i]);
        ++gold_count[c];
        if (preds[i] == golds[i]) ++correct[c];
    }
    double sum = 0.0;
    int classes = 0;
    for (int c = 0; c < 2; ++c) {
        if (gold_count[c] == 0) continue;
        sum += static_cast<double>(correct[c]) / gold_count[c];
        ++classes;
    }
    return classes == 0 ? 0.0 : sum / classes;
}

}  // namespace detail

// Token-level F1 between two answers, on normalized whitespace tokens with
// multiset overlap. Either side empty, or no overlap, gives 0.
inline double token_f1(std::string_view a, std::string_view b) {
    std::vector<std::string> ta = normalized_tokens(a);
    std::vector<std::string> tb = normalized_tokens(b);
    if (ta.empty() || tb.empty()) return 0.0;

    std::unordered_map<std::string, int> counts;
    for (const auto& t : ta) ++counts[t];
    int overlap = 0;
    for (const auto& t : tb) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double p = static_cast<double>(overlap) / static_cast<double>(ta.size());
    double r = static_cast<double>(overlap) / static_cast<double>(tb.size());
    return 2.0 * p * r / (p + r);
}

// u.v / (|u||v|), 0 if either vector has zero norm.
inline double cosine_sim(const Vec& u, const Vec& v) {
    if (u.size() != v.size())
        throw DimMismatch("cosine_sim: " + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()));
    double nu = l2_norm(u);
    double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot(u, v) / (nu * nv);
}

inline ScoredClaim score_claim(std::string claim_id, std::vector<double> pair_scores,
                               Label label) {
    if (pair_scores.empty()) throw EmptyScores("score_claim: no pair scores");
    double sum = 0.0;
    for (double s : pair_scores) sum += s;
    ScoredClaim out;
    out.claim_id = std::move(claim_id);
    out.claim_score = sum / static_cast<double>(pair_scores.size());
    out.pair_scores = std::move(pair_scores);
    out.label = label;
    return out;
}

// Inclusive cut: score >= threshold reads as SUPPORTS.
inline Label apply_threshold(double score, double threshold) {
    return score >= threshold ? Label::kSupports : Label::kRefutes;
}

struct Calibration {
    double threshold = 0.0;
    double dev_accuracy = 0.0;
};

// Picks the threshold that maximizes dev macro accuracy. Accuracy is not
// monotone in the threshold, so this is an exact scan over the finite
// candidate set {midpoints of adjacent distinct sorted scores} plus both
// infinities; every achievable labeling appears there. Ties go to the
// smallest candidate.
inline Calibration calibrate_threshold(const std::vector<ScoredClaim>& dev) {
    if (dev.empty()) throw EmptyDevSet("calibrate_threshold: empty dev set");

    std::vector<double> distinct;
    distinct.reserve(dev.size());
    for (const auto& sc : dev) distinct.push_back(sc.claim_score);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    candidates.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    candidates.push_back(std::numeric_limits<double>::infinity());

    std::vector<Label> golds;
    golds.reserve(dev.size());
    for (const auto& sc : dev) golds.push_back(sc.label);

    Calibration best{0.0, -1.0};
    std::vector<Label> preds(dev.size(), Label::kRefutes);
    for (double t : candidates) {
        for (std::size_t i = 0; i < dev.size(); ++i)
            preds[i] = apply_threshold(dev[i].claim_score, t);
        double acc = detail::macro_over(preds, golds);
        if (acc > best.dev_accuracy) best = {t, acc};
    }
    return best;
}

// External score file: JSON Lines of {"claim_id": str, "pair_scores": [num,...]}.
inline std::map<std::string, std::vector<double>> ingest_external_scores(
    const std::string& path) {
    std::map<std::string, std::vector<double>> out;
    for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
        std::string id = get_string(j, "claim_id", path, line_no);
        if (out.count(id)) throw ParseError(path, line_no, "duplicate claim_id " + id);
        if (!j.contains("pair_scores") || !j["pair_scores"].is_array())
            throw ParseError(path, line_no, "pair_scores: expected array");
        std::vector<double> scores;
        for (const auto& s : j["pair_scores"]) {
            if (!s.is_number()) throw ParseError(path, line_no, "pair_scores: expected numbers");
            double v = s.get<double>();
            if (!std::isfinite(v)) throw ParseError(path, line_no, "pair_scores: non-finite");
            scores.push_back(v);
        }
        if (scores.empty()) throw ParseError(path, line_no, "pair_scores: empty");
        out.emplace(std::move(id), std::move(scores));
    });
    return out;
}

}  // namespace qaproxy::metrics
