#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaproxy/errors.hpp"
#include "qaproxy/linalg.hpp"
#include "qaproxy/text.hpp"

namespace qaproxy {

// Verdict labels. REFUTES is class index 0 and SUPPORTS class index 1, so the
// numeric order matches the serialization tie-break order (SUPPORTS > REFUTES).
enum class Label : int { kRefutes = 0, kSupports = 1 };

inline constexpr int label_index(Label l) { return static_cast<int>(l); }

inline constexpr Label label_opposite(Label l) {
    return l == Label::kSupports ? Label::kRefutes : Label::kSupports;
}

inline std::string_view to_string(Label l) {
    return l == Label::kSupports ? "SUPPORTS" : "REFUTES";
}

// Strict two-value codec: anything else is a decode failure, never a default.
inline std::optional<Label> parse_label(std::string_view s) {
    if (s == "SUPPORTS") return Label::kSupports;
    if (s == "REFUTES") return Label::kRefutes;
    return std::nullopt;
}

enum class Split { kTrain, kDev, kTest };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kDev: return "dev";
        default: return "test";
    }
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::kTrain;
    if (s == "dev") return Split::kDev;
    if (s == "test") return Split::kTest;
    return std::nullopt;
}

// A claim, its gold evidence text(s), gold label, and split assignment.
struct ClaimRecord {
    std::string id;
    std::string claim;
    std::vector<std::string> evidence;
    Label label = Label::kSupports;
    Split split = Split::kTrain;
};

// Evidence side of the QA service is allowed to come back empty; the
// embedding layer substitutes this sentinel so vector dims stay uniform.
inline constexpr std::string_view kNoAnswerSentinel = "NO_ANSWER";

// One question with its claim-side answer and, once the evidence has been
// queried, the evidence-side answer and its confidence.
struct QAPair {
    std::string question;
    std::string claim_answer;
    std::optional<std::string> evidence_answer;
    std::optional<double> evidence_score;
};

inline bool operator==(const QAPair& a, const QAPair& b) {
    return a.question == b.question && a.claim_answer == b.claim_answer &&
           a.evidence_answer == b.evidence_answer && a.evidence_score == b.evidence_score;
}

// The QA pairs attached to one claim. After question selection the list has
// exactly n_fixed entries and `padded` records whether repetition happened.
struct QASet {
    std::string claim_id;
    std::vector<QAPair> pairs;
    bool padded = false;
};

// Numeric features for one claim: F_C, the F^Q_j, and the F^A_j.
struct FeatureBundle {
    Vec claim_vec;
    std::vector<Vec> question_vecs;
    std::vector<Vec> answer_vecs;

    std::size_t size() const { return question_vecs.size(); }
};

// Model input variants. The last one is the attention model; the others are
// the no-attention ablations over concatenated/pooled inputs.
enum class Variant { kC, kQ, kAA, kQAA, kCQAA, kAttentionCQAA };

inline constexpr std::array<Variant, 6> kVariantOrder = {
    Variant::kC, Variant::kQ, Variant::kAA, Variant::kQAA, Variant::kCQAA,
    Variant::kAttentionCQAA};

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::kC: return "C";
        case Variant::kQ: return "Q";
        case Variant::kAA: return "AA";
        case Variant::kQAA: return "Q_AA";
        case Variant::kCQAA: return "CQ_AA";
        default: return "ATTENTION_C_Q_AA";
    }
}

inline std::optional<Variant> parse_variant(std::string_view s) {
    for (Variant v : kVariantOrder)
        if (to_string(v) == s) return v;
    return std::nullopt;
}

// Training/evaluation knobs. The 1e-3 default learning rate targets the
// from-scratch comparison head; parity runs against fine-tuned encoders can
// set 2e-5 explicitly.
struct ExperimentConfig {
    int epochs = 5;
    int batch_size = 32;
    double learning_rate = 1e-3;
    int n_fixed = 10;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    Variant variant = Variant::kAttentionCQAA;
    int d_att = 0;  // 0 = derive min(d_claim, d_question) at training time

    std::vector<std::string> validate() const {
        std::vector<std::string> violations;
        if (epochs <= 0) violations.emplace_back("epochs: must be positive");
        if (batch_size <= 0) violations.emplace_back("batch_size: must be positive");
        if (!(learning_rate > 0.0)) violations.emplace_back("learning_rate: must be positive");
        if (n_fixed <= 0) violations.emplace_back("n_fixed: must be positive");
        if (seeds.empty()) violations.emplace_back("seeds: empty list");
        if (d_att < 0) violations.emplace_back("d_att: must be positive (or 0 for auto)");
        return violations;
    }
};

// Never aborts; each violation names the field and the broken rule.
inline std::vector<std::string> validate_record(const ClaimRecord& record) {
    std::vector<std::string> violations;
    if (record.id.empty()) violations.emplace_back("id: empty");
    if (normalize_text(record.claim).empty()) violations.emplace_back("claim: empty");
    if (record.evidence.empty()) {
        violations.emplace_back("evidence: empty list");
    } else {
        for (std::size_t i = 0; i < record.evidence.size(); ++i) {
            if (normalize_text(record.evidence[i]).empty())
                violations.emplace_back("evidence[" + std::to_string(i) + "]: empty");
        }
    }
    return violations;
}

// Pair-level invariants, enforced wherever QA pairs enter the system.
inline std::vector<std::string> validate_pair(const QAPair& pair) {
    std::vector<std::string> violations;
    if (pair.question.empty()) violations.emplace_back("question: empty");
    if (pair.claim_answer.empty()) violations.emplace_back("claim_answer: empty");
    if (pair.evidence_answer.has_value() != pair.evidence_score.has_value())
        violations.emplace_back("evidence_answer/evidence_score: must be present together");
    if (pair.evidence_score &&
        !(*pair.evidence_score >= 0.0 && *pair.evidence_score <= 1.0))
        violations.emplace_back("evidence_score: outside [0,1]");
    return violations;
}

// Bundle invariants: one question vector per answer vector, nothing empty,
// every entry finite.
inline std::vector<std::string> validate_bundle(const FeatureBundle& bundle) {
    std::vector<std::string> violations;
    if (bundle.claim_vec.empty()) violations.emplace_back("claim_vec: empty");
    if (bundle.question_vecs.empty()) violations.emplace_back("question_vecs: empty");
    if (bundle.question_vecs.size() != bundle.answer_vecs.size())
        violations.emplace_back("question_vecs/answer_vecs: length mismatch");
    if (!all_finite(bundle.claim_vec)) violations.emplace_back("claim_vec: non-finite entry");
    for (std::size_t i = 0; i < bundle.question_vecs.size(); ++i) {
        if (!bundle.question_vecs.empty() &&
            bundle.question_vecs[i].size() != bundle.question_vecs.front().size())
            violations.emplace_back("question_vecs[" + std::to_string(i) + "]: dim mismatch");
        if (!all_finite(bundle.question_vecs[i]))
            violations.emplace_back("question_vecs[" + std::to_string(i) + "]: non-finite entry");
    }
    for (std::size_t i = 0; i < bundle.answer_vecs.size(); ++i) {
        if (!bundle.answer_vecs.empty() &&
            bundle.answer_vecs[i].size() != bundle.answer_vecs.front().size())
            violations.emplace_back("answer_vecs[" + std::to_string(i) + "]: dim mismatch");
        if (!all_finite(bundle.answer_vecs[i]))
            violations.emplace_back("answer_vecs[" + std::to_string(i) + "]: non-finite entry");
    }
    return violations;
}

}  // namespace qaproxy
