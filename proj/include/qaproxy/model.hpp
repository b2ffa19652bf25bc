#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qaproxy/jsonl.hpp"
#include "qaproxy/linalg.hpp"
#include "qaproxy/random.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::model {

// Trainable state of the attention comparison head.
//
//   score_j = w3 . tanh(W1 F_C + W2 F^Q_j)
//   a       = softmax(score)        over questions j
//   F       = sum_j a_j F^A_j
//   logits  = W_cls F + b_cls
//
// The claim is the query, questions are the keys, and answer-pair features
// are the values. No biases inside the scoring function; the classifier
// carries one.
struct AttentionParams {
    Matrix w1;      // d_att x d_claim
    Matrix w2;      // d_att x d_question
    Matrix w3;      // 1 x d_att
    Matrix w_cls;   // 2 x d_answer_pair
    Vec b_cls;      // 2

    int d_att() const { return w1.rows; }
    int d_claim() const { return w1.cols; }
    int d_question() const { return w2.cols; }
    int d_answer_pair() const { return w_cls.cols; }
};

// Linear classifier over a variant-specific input assembly (the
// no-attention ablations).
struct ConcatParams {
    Variant variant = Variant::kCQAA;
    Matrix w_cls;   // 2 x d_in
    Vec b_cls;      // 2

    int d_in() const { return w_cls.cols; }
};

using ModelParams = std::variant<AttentionParams, ConcatParams>;

inline Variant variant_of(const ModelParams& params) {
    if (std::holds_alternative<AttentionParams>(params)) return Variant::kAttentionCQAA;
    return std::get<ConcatParams>(params).variant;
}

// Everything the forward pass computed, kept for explanation output and for
// the backward pass.
struct ForwardTrace {
    Vec att_logits;    // n raw attention scores
    Vec weights;       // n softmax weights, positive, sum 1
    Vec pooled;        // weighted sum of answer features
    Vec class_logits;  // 2
    Label predicted = Label::kSupports;
};

namespace detail {

inline void check_attention_dims(const AttentionParams& p, const FeatureBundle& b) {
    if (b.question_vecs.empty()) throw DimMismatch("attention_forward: bundle has no questions");
    if (static_cast<int>(b.claim_vec.size()) != p.d_claim())
        throw DimMismatch("attention_forward: claim dim " + std::to_string(b.claim_vec.size()) +
                          " vs params " + std::to_string(p.d_claim()));
    if (static_cast<int>(b.question_vecs.front().size()) != p.d_question())
        throw DimMismatch("attention_forward: question dim mismatch");
    if (static_cast<int>(b.answer_vecs.front().size()) != p.d_answer_pair())
        throw DimMismatch("attention_forward: answer dim mismatch");
    if (p.w3.rows != 1 || p.w3.cols != p.d_att() || p.w2.rows != p.d_att())
        throw DimMismatch("attention_forward: inconsistent attention params");
    if (p.w_cls.rows != 2 || p.b_cls.size() != 2)
        throw DimMismatch("attention_forward: classifier must be 2-way");
}

inline Label argmax_label(const Vec& class_logits) {
    // Tie goes to SUPPORTS.
    return class_logits[label_index(Label::kSupports)] >=
                   class_logits[label_index(Label::kRefutes)]
               ? Label::kSupports
               : Label::kRefutes;
}

inline Vec mean_of(const std::vector<Vec>& vecs) {
    Vec out(vecs.front().size(), 0.0);
    for (const Vec& v : vecs) {
        if (v.size() != out.size()) throw DimMismatch("mean: inconsistent vector dims");
        axpy(1.0, v, out);
    }
    const double inv = 1.0 / static_cast<double>(vecs.size());
    for (double& x : out) x *= inv;
    return out;
}

}  // namespace detail

inline ForwardTrace attention_forward(const AttentionParams& params, const FeatureBundle& bundle) {
    detail::check_attention_dims(params, bundle);
    const std::size_t n = bundle.size();

    ForwardTrace trace;
    trace.att_logits.resize(n);
    const Vec w1c = matvec(params.w1, bundle.claim_vec);
    for (std::size_t j = 0; j < n; ++j) {
        Vec u = matvec(params.w2, bundle.question_vecs[j]);
        double score = 0.0;
        for (int k = 0; k < params.d_att(); ++k)
            score += params.w3(0, k) * std::tanh(w1c[static_cast<std::size_t>(k)] +
                                                 u[static_cast<std::size_t>(k)]);
        trace.att_logits[j] = score;
    }
    trace.weights = softmax(trace.att_logits);

    trace.pooled.assign(static_cast<std::size_t>(params.d_answer_pair()), 0.0);
    for (std::size_t j = 0; j < n; ++j) axpy(trace.weights[j], bundle.answer_vecs[j], trace.pooled);

    trace.class_logits = matvec(params.w_cls, trace.pooled);
    trace.class_logits[0] += params.b_cls[0];
    trace.class_logits[1] += params.b_cls[1];
    trace.predicted = detail::argmax_label(trace.class_logits);
    return trace;
}

// Input assembly for the no-attention variants. Question and answer groups
// are mean-pooled; groups the variant does not use are ignored entirely.
inline Vec concat_input(Variant variant, const Vec& claim_vec,
                        const std::vector<Vec>& question_vecs,
                        const std::vector<Vec>& answer_vecs) {
    auto need_claim = [&]() {
        if (claim_vec.empty()) throw MissingInput("variant needs claim_vec");
    };
    auto need_questions = [&]() {
        if (question_vecs.empty()) throw MissingInput("variant needs question_vecs");
    };
    auto need_answers = [&]() {
        if (answer_vecs.empty()) throw MissingInput("variant needs answer_vecs");
    };

    switch (variant) {
        case Variant::kC:
            need_claim();
            return claim_vec;
        case Variant::kQ:
            need_questions();
            return detail::mean_of(question_vecs);
        case Variant::kAA:
            need_answers();
            return detail::mean_of(answer_vecs);
        case Variant::kQAA: {
            need_questions();
            need_answers();
            Vec out = detail::mean_of(question_vecs);
            Vec a = detail::mean_of(answer_vecs);
            out.insert(out.end(), a.begin(), a.end());
            return out;
        }
        case Variant::kCQAA: {
            need_claim();
            need_questions();
            need_answers();
            Vec out = claim_vec;
            Vec q = detail::mean_of(question_vecs);
            Vec a = detail::mean_of(answer_vecs);
            out.insert(out.end(), q.begin(), q.end());
            out.insert(out.end(), a.begin(), a.end());
            return out;
        }
        default:
            throw Error("concat_input: ATTENTION_C_Q_AA is not a concat variant");
    }
}

inline Vec concat_forward(const ConcatParams& params, const Vec& claim_vec,
                          const std::vector<Vec>& question_vecs,
                          const std::vector<Vec>& answer_vecs) {
    Vec input = concat_input(params.variant, claim_vec, question_vecs, answer_vecs);
    if (static_cast<int>(input.size()) != params.d_in())
        throw DimMismatch("concat_forward: input dim " + std::to_string(input.size()) +
                          " vs params " + std::to_string(params.d_in()));
    Vec logits = matvec(params.w_cls, input);
    logits[0] += params.b_cls[0];
    logits[1] += params.b_cls[1];
    return logits;
}

// -log softmax(logits)[label], via log-sum-exp so saturated logits stay finite.
inline double cross_entropy(const Vec& class_logits, Label label) {
    return log_sum_exp(class_logits) -
           class_logits[static_cast<std::size_t>(label_index(label))];
}

struct AttentionGrads {
    Matrix w1, w2, w3, w_cls;
    Vec b_cls;
    double loss = 0.0;
};

// Exact analytic gradients of cross_entropy(attention_forward(.)) with
// respect to every parameter. Checked against central finite differences in
// the test suite; keep the two in lockstep when touching either.
inline AttentionGrads attention_backward(const AttentionParams& params,
                                         const FeatureBundle& bundle, Label label) {
    detail::check_attention_dims(params, bundle);
    const std::size_t n = bundle.size();
    const int d_att = params.d_att();

    // Recompute the forward pass, keeping tanh activations per question.
    const Vec w1c = matvec(params.w1, bundle.claim_vec);
    std::vector<Vec> tanh_act(n);
    Vec att_logits(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        Vec u = matvec(params.w2, bundle.question_vecs[j]);
        tanh_act[j].resize(static_cast<std::size_t>(d_att));
        double score = 0.0;
        for (int k = 0; k < d_att; ++k) {
            double h = std::tanh(w1c[static_cast<std::size_t>(k)] + u[static_cast<std::size_t>(k)]);
            tanh_act[j][static_cast<std::size_t>(k)] = h;
            score += params.w3(0, k) * h;
        }
        att_logits[j] = score;
    }
    const Vec weights = softmax(att_logits);

    Vec pooled(static_cast<std::size_t>(params.d_answer_pair()), 0.0);
    for (std::size_t j = 0; j < n; ++j) axpy(weights[j], bundle.answer_vecs[j], pooled);

    Vec class_logits = matvec(params.w_cls, pooled);
    class_logits[0] += params.b_cls[0];
    class_logits[1] += params.b_cls[1];

    AttentionGrads grads;
    grads.loss = cross_entropy(class_logits, label);
    grads.w1 = Matrix(params.w1.rows, params.w1.cols);
    grads.w2 = Matrix(params.w2.rows, params.w2.cols);
    grads.w3 = Matrix(1, d_att);
    grads.w_cls = Matrix(2, params.d_answer_pair());
    grads.b_cls.assign(2, 0.0);

    // dL/dlogits = softmax - onehot
    Vec g = softmax(class_logits);
    g[static_cast<std::size_t>(label_index(label))] -= 1.0;

    add_outer(grads.w_cls, g, pooled);
    grads.b_cls = g;

    // Through the weighted sum: dL/da_j = (W_cls^T g) . F^A_j
    const Vec d_pooled = matvec_transposed(params.w_cls, g);
    Vec d_weights(n, 0.0);
    double weighted_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        d_weights[j] = dot(d_pooled, bundle.answer_vecs[j]);
        weighted_sum += weights[j] * d_weights[j];
    }

    // Softmax backward, then through w3 . tanh(.).
    Vec du_sum(static_cast<std::size_t>(d_att), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double d_logit = weights[j] * (d_weights[j] - weighted_sum);
        Vec du(static_cast<std::size_t>(d_att), 0.0);
        for (int k = 0; k < d_att; ++k) {
            const double h = tanh_act[j][static_cast<std::size_t>(k)];
            grads.w3(0, k) += d_logit * h;
            du[static_cast<std::size_t>(k)] = d_logit * params.w3(0, k) * (1.0 - h * h);
        }
        add_outer(grads.w2, du, bundle.question_vecs[j]);
        axpy(1.0, du, du_sum);
    }
    // The claim enters every question's score, so its gradient sums over j.
    add_outer(grads.w1, du_sum, bundle.claim_vec);
    return grads;
}

struct ConcatGrads {
    Matrix w_cls;
    Vec b_cls;
    double loss = 0.0;
};

inline ConcatGrads concat_backward(const ConcatParams& params, const Vec& input, Label label) {
    if (static_cast<int>(input.size()) != params.d_in())
        throw DimMismatch("concat_backward: input dim mismatch");
    Vec logits = matvec(params.w_cls, input);
    logits[0] += params.b_cls[0];
    logits[1] += params.b_cls[1];

    ConcatGrads grads;
    grads.loss = cross_entropy(logits, label);
    grads.w_cls = Matrix(2, params.d_in());
    Vec g = softmax(logits);
    g[static_cast<std::size_t>(label_index(label))] -= 1.0;
    add_outer(grads.w_cls, g, input);
    grads.b_cls = g;
    return grads;
}

// ---------------------------------------------------------------------------
// Initialization and training

struct BundleDims {
    int d_claim = 0;
    int d_question = 0;
    int d_answer_pair = 0;

    static BundleDims of(const FeatureBundle& b) {
        return {static_cast<int>(b.claim_vec.size()),
                static_cast<int>(b.question_vecs.front().size()),
                static_cast<int>(b.answer_vecs.front().size())};
    }
};

namespace detail {

inline void fill_uniform(Matrix& m, double limit, SplitMix64& rng) {
    for (double& x : m.data) x = rng.next_symmetric(limit);
}

inline void fill_uniform(Vec& v, double limit, SplitMix64& rng) {
    for (double& x : v) x = rng.next_symmetric(limit);
}

}  // namespace detail

// Uniform [-e, e] with e = 1/sqrt(fan_in) per tensor; the classifier bias
// shares its layer's limit. Draw order is fixed so a seed pins every bit.
inline AttentionParams init_attention(const BundleDims& dims, int d_att, SplitMix64& rng) {
    AttentionParams p;
    p.w1 = Matrix(d_att, dims.d_claim);
    p.w2 = Matrix(d_att, dims.d_question);
    p.w3 = Matrix(1, d_att);
    p.w_cls = Matrix(2, dims.d_answer_pair);
    p.b_cls.assign(2, 0.0);
    detail::fill_uniform(p.w1, 1.0 / std::sqrt(static_cast<double>(dims.d_claim)), rng);
    detail::fill_uniform(p.w2, 1.0 / std::sqrt(static_cast<double>(dims.d_question)), rng);
    detail::fill_uniform(p.w3, 1.0 / std::sqrt(static_cast<double>(d_att)), rng);
    const double cls_limit = 1.0 / std::sqrt(static_cast<double>(dims.d_answer_pair));
    detail::fill_uniform(p.w_cls, cls_limit, rng);
    detail::fill_uniform(p.b_cls, cls_limit, rng);
    return p;
}

inline int concat_input_dim(Variant variant, const BundleDims& dims) {
    switch (variant) {
        case Variant::kC: return dims.d_claim;
        case Variant::kQ: return dims.d_question;
        case Variant::kAA: return dims.d_answer_pair;
        case Variant::kQAA: return dims.d_question + dims.d_answer_pair;
        case Variant::kCQAA: return dims.d_claim + dims.d_question + dims.d_answer_pair;
        default: throw Error("concat_input_dim: not a concat variant");
    }
}

inline ConcatParams init_concat(Variant variant, const BundleDims& dims, SplitMix64& rng) {
    ConcatParams p;
    p.variant = variant;
    const int d_in = concat_input_dim(variant, dims);
    p.w_cls = Matrix(2, d_in);
    p.b_cls.assign(2, 0.0);
    const double limit = 1.0 / std::sqrt(static_cast<double>(d_in));
    detail::fill_uniform(p.w_cls, limit, rng);
    detail::fill_uniform(p.b_cls, limit, rng);
    return p;
}

namespace detail {

// Adam with the standard defaults. One buffer pair per parameter tensor.
struct AdamBuf {
    Vec m, v;
    explicit AdamBuf(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

inline void adam_step(std::vector<double>& param, const std::vector<double>& grad, AdamBuf& buf,
                      long step, double lr) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        buf.m[i] = kBeta1 * buf.m[i] + (1.0 - kBeta1) * grad[i];
        buf.v[i] = kBeta2 * buf.v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double mhat = buf.m[i] / bc1;
        const double vhat = buf.v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
}

}  // namespace detail

struct Example {
    const FeatureBundle* bundle = nullptr;
    Label label = Label::kSupports;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // epoch-mean training loss, one per epoch
};

// Mini-batch training, seed-deterministic end to end: parameter draws, batch
// shuffles, and gradient accumulation order are all fixed by `seed`.
inline TrainResult train(std::span<const Example> examples, const ExperimentConfig& config,
                         std::uint64_t seed) {
    if (examples.empty()) throw EmptyTrainSplit("train: no training examples");
    if (auto violations = config.validate(); !violations.empty())
        throw Error("train: invalid config: " + violations.front());

    const BundleDims dims = BundleDims::of(*examples.front().bundle);
    for (const Example& ex : examples) {
        const BundleDims d = BundleDims::of(*ex.bundle);
        if (d.d_claim != dims.d_claim || d.d_question != dims.d_question ||
            d.d_answer_pair != dims.d_answer_pair)
            throw DimMismatch("train: bundles disagree on dims");
    }

    SplitMix64 rng(seed);
    const bool attention = config.variant == Variant::kAttentionCQAA;

    TrainResult result{attention ? ModelParams(init_attention(
                                       dims,
                                       config.d_att > 0 ? config.d_att
                                                        : std::min(dims.d_claim, dims.d_question),
                                       rng))
                                 : ModelParams(init_concat(config.variant, dims, rng)),
                       {}};

    // Concat variants see a fixed input per example; assemble them once.
    std::vector<Vec> concat_inputs;
    if (!attention) {
        concat_inputs.reserve(examples.size());
        for (const Example& ex : examples)
            concat_inputs.push_back(concat_input(config.variant, ex.bundle->claim_vec,
                                                 ex.bundle->question_vecs, ex.bundle->answer_vecs));
    }

    std::vector<detail::AdamBuf> adam;
    if (attention) {
        auto& p = std::get<AttentionParams>(result.params);
        adam.emplace_back(p.w1.data.size());
        adam.emplace_back(p.w2.data.size());
        adam.emplace_back(p.w3.data.size());
        adam.emplace_back(p.w_cls.data.size());
        adam.emplace_back(p.b_cls.size());
    } else {
        auto& p = std::get<ConcatParams>(result.params);
        adam.emplace_back(p.w_cls.data.size());
        adam.emplace_back(p.b_cls.size());
    }

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_in_place(order, rng);
        double epoch_loss = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            ++step;

            if (attention) {
                auto& p = std::get<AttentionParams>(result.params);
                AttentionGrads acc;
                acc.w1 = Matrix(p.w1.rows, p.w1.cols);
                acc.w2 = Matrix(p.w2.rows, p.w2.cols);
                acc.w3 = Matrix(p.w3.rows, p.w3.cols);
                acc.w_cls = Matrix(p.w_cls.rows, p.w_cls.cols);
                acc.b_cls.assign(2, 0.0);
                for (std::size_t i = start; i < end; ++i) {
                    const Example& ex = examples[order[i]];
                    AttentionGrads g = attention_backward(p, *ex.bundle, ex.label);
                    epoch_loss += g.loss;
                    axpy(inv_batch, g.w1.data, acc.w1.data);
                    axpy(inv_batch, g.w2.data, acc.w2.data);
                    axpy(inv_batch, g.w3.data, acc.w3.data);
                    axpy(inv_batch, g.w_cls.data, acc.w_cls.data);
                    axpy(inv_batch, g.b_cls, acc.b_cls);
                }
                detail::adam_step(p.w1.data, acc.w1.data, adam[0], step, config.learning_rate);
                detail::adam_step(p.w2.data, acc.w2.data, adam[1], step, config.learning_rate);
                detail::adam_step(p.w3.data, acc.w3.data, adam[2], step, config.learning_rate);
                detail::adam_step(p.w_cls.data, acc.w_cls.data, adam[3], step,
                                  config.learning_rate);
                detail::adam_step(p.b_cls, acc.b_cls, adam[4], step, config.learning_rate);
            } else {
                auto& p = std::get<ConcatParams>(result.params);
                Matrix acc_w(p.w_cls.rows, p.w_cls.cols);
                Vec acc_b(2, 0.0);
                for (std::size_t i = start; i < end; ++i) {
                    const std::size_t idx = order[i];
                    ConcatGrads g = concat_backward(p, concat_inputs[idx], examples[idx].label);
                    epoch_loss += g.loss;
                    axpy(inv_batch, g.w_cls.data, acc_w.data);
                    axpy(inv_batch, g.b_cls, acc_b);
                }
                detail::adam_step(p.w_cls.data, acc_w.data, adam[0], step, config.learning_rate);
                detail::adam_step(p.b_cls, acc_b, adam[1], step, config.learning_rate);
            }
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(examples.size()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction

// Verdict plus, for the attention model, the per-question weights in QASet
// order. Callers holding the QA text attach the answer pairs.
struct VerdictReport {
    std::string claim_id;
    Label predicted = Label::kSupports;
    std::vector<double> weights;  // empty for concat variants
    std::vector<QAPair> pairs;
};

inline VerdictReport predict(const ModelParams& params, const FeatureBundle& bundle) {
    VerdictReport report;
    if (const auto* att = std::get_if<AttentionParams>(&params)) {
        ForwardTrace trace = attention_forward(*att, bundle);
        report.predicted = trace.predicted;
        report.weights = std::move(trace.weights);
    } else {
        const auto& cat = std::get<ConcatParams>(params);
        Vec logits =
            concat_forward(cat, bundle.claim_vec, bundle.question_vecs, bundle.answer_vecs);
        report.predicted = detail::argmax_label(logits);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned JSON with row-major arrays; loads reject any shape
// that does not reassemble exactly.

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const json& j, const std::string& path, const char* name) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw ParseError(path + ": " + name + ": expected {rows, cols, data}");
    Matrix m;
    m.rows = j["rows"].get<int>();
    m.cols = j["cols"].get<int>();
    if (m.rows <= 0 || m.cols <= 0) throw ParseError(path + ": " + name + ": non-positive shape");
    m.data = j["data"].get<std::vector<double>>();
    if (m.data.size() != static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols))
        throw ParseError(path + ": " + name + ": data size does not match shape");
    if (!all_finite(m)) throw ParseError(path + ": " + name + ": non-finite entry");
    return m;
}

}  // namespace detail

inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const ModelParams& params) {
    json doc;
    doc["format"] = "qaproxy-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["variant"] = std::string(to_string(variant_of(params)));
    if (const auto* att = std::get_if<AttentionParams>(&params)) {
        doc["dims"] = {{"claim", att->d_claim()},
                       {"question", att->d_question()},
                       {"answer_pair", att->d_answer_pair()},
                       {"att", att->d_att()}};
        doc["params"] = {{"w1", detail::matrix_to_json(att->w1)},
                         {"w2", detail::matrix_to_json(att->w2)},
                         {"w3", detail::matrix_to_json(att->w3)},
                         {"w_cls", detail::matrix_to_json(att->w_cls)},
                         {"b_cls", att->b_cls}};
    } else {
        const auto& cat = std::get<ConcatParams>(params);
        doc["dims"] = {{"in", cat.d_in()}};
        doc["params"] = {{"w_cls", detail::matrix_to_json(cat.w_cls)}, {"b_cls", cat.b_cls}};
    }
    atomic_write_file(path, doc.dump(2) + "\n");
}

inline ModelParams load_checkpoint(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file_bytes(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    if (doc.value("format", "") != "qaproxy-checkpoint")
        throw ParseError(path + ": not a checkpoint file");
    if (doc.value("version", -1) != kCheckpointVersion)
        throw ParseError(path + ": unsupported checkpoint version");
    auto variant = parse_variant(doc.value("variant", ""));
    if (!variant) throw ParseError(path + ": unknown variant");
    const json& p = doc.at("params");

    auto load_bias = [&](const json& b) {
        Vec bias = b.get<std::vector<double>>();
        if (bias.size() != 2 || !all_finite(bias))
            throw ParseError(path + ": b_cls: expected 2 finite entries");
        return bias;
    };

    if (*variant == Variant::kAttentionCQAA) {
        AttentionParams att;
        att.w1 = detail::matrix_from_json(p.at("w1"), path, "w1");
        att.w2 = detail::matrix_from_json(p.at("w2"), path, "w2");
        att.w3 = detail::matrix_from_json(p.at("w3"), path, "w3");
        att.w_cls = detail::matrix_from_json(p.at("w_cls"), path, "w_cls");
        att.b_cls = load_bias(p.at("b_cls"));
        if (att.w2.rows != att.w1.rows || att.w3.rows != 1 || att.w3.cols != att.w1.rows ||
            att.w_cls.rows != 2)
            throw ParseError(path + ": attention params dims disagree");
        return att;
    }
    ConcatParams cat;
    cat.variant = *variant;
    cat.w_cls = detail::matrix_from_json(p.at("w_cls"), path, "w_cls");
    cat.b_cls = load_bias(p.at("b_cls"));
    if (cat.w_cls.rows != 2) throw ParseError(path + ": classifier must be 2-way");
    return cat;
}

}  // namespace qaproxy::model
