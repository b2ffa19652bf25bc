#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qaproxy/jsonl.hpp"
#include "qaproxy/linalg.hpp"
#include "qaproxy/text.hpp"
#include "qaproxy/types.hpp"

namespace qaproxy::embed {

// Turns claim, question, and answer-pair text into fixed-dim vectors.
// Implementations must be deterministic: same inputs, identical vectors.
// The claim id and question index are lookup context for store-backed
// providers; text-based providers ignore them.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    virtual int dim_claim() const = 0;
    virtual int dim_question() const = 0;
    virtual int dim_answer_pair() const = 0;

    virtual Vec embed_claim(std::string_view claim_id, std::string_view text) const = 0;
    virtual Vec embed_question(std::string_view claim_id, int index,
                               std::string_view text) const = 0;
    virtual Vec embed_answer_pair(std::string_view claim_id, int index,
                                  std::string_view claim_answer,
                                  std::string_view evidence_answer) const = 0;
};

// Signed feature hashing of character n-grams (sizes 3-5) over normalized
// text, L2-normalized. A desk-scale stand-in for a sentence encoder: cheap,
// deterministic, and normalize_text-equal strings map to equal vectors.
class HashEmbedder final : public EmbeddingProvider {
  public:
    explicit HashEmbedder(int dim = 256, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {
        if (dim <= 0) throw Error("HashEmbedder: dim must be positive");
    }

    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }

    int dim_claim() const override { return dim_; }
    int dim_question() const override { return dim_; }
    // Pair encoding is [claim half; evidence half] so a comparison head can
    // relate the two sides.
    int dim_answer_pair() const override { return 2 * dim_; }

    Vec hash_embed(std::string_view text) const {
        Vec out(static_cast<std::size_t>(dim_), 0.0);
        const std::string norm = normalize_text(text);
        if (norm.empty()) return out;  // only the empty text maps to zero

        // Codepoint boundaries; n-grams run over codepoints, hashes over the
        // underlying bytes.
        std::vector<std::size_t> starts;
        for (std::size_t i = 0; i < norm.size(); ++i)
            if ((static_cast<unsigned char>(norm[i]) & 0xC0) != 0x80) starts.push_back(i);
        starts.push_back(norm.size());
        const std::size_t n_chars = starts.size() - 1;

        bool emitted = false;
        for (std::size_t len = 3; len <= 5; ++len) {
            if (n_chars < len) break;
            for (std::size_t i = 0; i + len <= n_chars; ++i) {
                add_feature(out, norm, starts[i], starts[i + len], len);
                emitted = true;
            }
        }
        // Texts shorter than the smallest n-gram still get one feature.
        if (!emitted) add_feature(out, norm, 0, norm.size(), 0);

        double norm2 = l2_norm(out);
        if (norm2 == 0.0) {
            // Signed buckets of a short text can cancel exactly; fall back to
            // a single whole-text bucket so non-empty text never hits zero.
            out.assign(static_cast<std::size_t>(dim_), 0.0);
            out[static_cast<std::size_t>(mix(norm, 0, norm.size(), 1) %
                                         static_cast<std::uint64_t>(dim_))] = 1.0;
            norm2 = 1.0;
        }
        for (double& x : out) x /= norm2;
        return out;
    }

    Vec embed_claim(std::string_view, std::string_view text) const override {
        return hash_embed(text);
    }
    Vec embed_question(std::string_view, int, std::string_view text) const override {
        return hash_embed(text);
    }
    Vec embed_answer_pair(std::string_view, int, std::string_view claim_answer,
                          std::string_view evidence_answer) const override {
        Vec out = hash_embed(claim_answer);
        Vec ev = hash_embed(evidence_answer);
        out.insert(out.end(), ev.begin(), ev.end());
        return out;
    }

  private:
    std::uint64_t mix(const std::string& text, std::size_t begin, std::size_t end,
                      std::uint64_t salt) const {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ seed_ ^ (salt * 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = begin; i < end; ++i) {
            h ^= static_cast<unsigned char>(text[i]);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    void add_feature(Vec& out, const std::string& text, std::size_t begin, std::size_t end,
                     std::uint64_t salt) const {
        const std::uint64_t h = mix(text, begin, end, salt);
        const std::size_t bucket =
            static_cast<std::size_t>((h >> 1) % static_cast<std::uint64_t>(dim_));
        out[bucket] += (h & 1) ? 1.0 : -1.0;
    }

    int dim_;
    std::uint64_t seed_;
};

// Precomputed vectors keyed "c:{claim_id}", "q:{claim_id}:{i}",
// "ap:{claim_id}:{i}". File format: a dim header line, then one
// {"key","vec"} JSON object per line.
struct EmbeddingStore {
    int dim_claim = 0;
    int dim_question = 0;
    int dim_answer_pair = 0;
    std::map<std::string, Vec> vectors;

    static std::string claim_key(std::string_view id) { return "c:" + std::string(id); }
    static std::string question_key(std::string_view id, int i) {
        return "q:" + std::string(id) + ":" + std::to_string(i);
    }
    static std::string answer_pair_key(std::string_view id, int i) {
        return "ap:" + std::string(id) + ":" + std::to_string(i);
    }

    static EmbeddingStore read(const std::string& path) {
        EmbeddingStore store;
        bool have_header = false;
        for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
            if (!have_header) {
                store.dim_claim = static_cast<int>(get_finite_number(j, "dim_claim", path, line_no));
                store.dim_question =
                    static_cast<int>(get_finite_number(j, "dim_question", path, line_no));
                store.dim_answer_pair =
                    static_cast<int>(get_finite_number(j, "dim_answer_pair", path, line_no));
                if (store.dim_claim <= 0 || store.dim_question <= 0 || store.dim_answer_pair <= 0)
                    throw ParseError(path, line_no, "store dims must be positive");
                have_header = true;
                return;
            }
            std::string key = get_string(j, "key", path, line_no);
            if (store.vectors.count(key)) throw ParseError(path, line_no, "duplicate key " + key);
            if (!j.contains("vec") || !j["vec"].is_array())
                throw ParseError(path, line_no, "vec: expected array");
            Vec vec;
            vec.reserve(j["vec"].size());
            for (const auto& x : j["vec"]) {
                if (!x.is_number()) throw ParseError(path, line_no, "vec: expected numbers");
                double v = x.get<double>();
                if (!std::isfinite(v)) throw ParseError(path, line_no, "vec: non-finite entry");
                vec.push_back(v);
            }
            const int expected = key.rfind("c:", 0) == 0    ? store.dim_claim
                                 : key.rfind("q:", 0) == 0  ? store.dim_question
                                 : key.rfind("ap:", 0) == 0 ? store.dim_answer_pair
                                                            : -1;
            if (expected < 0) throw ParseError(path, line_no, "key " + key + ": unknown prefix");
            if (static_cast<int>(vec.size()) != expected)
                throw ParseError(path, line_no,
                                 "key " + key + ": dim " + std::to_string(vec.size()) +
                                     " does not match header " + std::to_string(expected));
            store.vectors.emplace(std::move(key), std::move(vec));
        });
        if (!have_header) throw ParseError(path, 1, "missing store header line");
        return store;
    }

    // Canonical encoding: header, then keys in lexicographic order. Reading a
    // canonical file and writing it back is byte-identical.
    void write(const std::string& path) const {
        std::string out;
        out += json{{"dim_claim", dim_claim},
                    {"dim_question", dim_question},
                    {"dim_answer_pair", dim_answer_pair}}
                   .dump();
        out += '\n';
        for (const auto& [key, vec] : vectors) {
            out += json{{"key", key}, {"vec", vec}}.dump();
            out += '\n';
        }
        atomic_write_file(path, out);
    }
};

class StoreProvider final : public EmbeddingProvider {
  public:
    explicit StoreProvider(EmbeddingStore store) : store_(std::move(store)) {}

    const EmbeddingStore& store() const { return store_; }

    int dim_claim() const override { return store_.dim_claim; }
    int dim_question() const override { return store_.dim_question; }
    int dim_answer_pair() const override { return store_.dim_answer_pair; }

    Vec embed_claim(std::string_view claim_id, std::string_view) const override {
        return lookup(EmbeddingStore::claim_key(claim_id));
    }
    Vec embed_question(std::string_view claim_id, int index, std::string_view) const override {
        return lookup(EmbeddingStore::question_key(claim_id, index));
    }
    Vec embed_answer_pair(std::string_view claim_id, int index, std::string_view,
                          std::string_view) const override {
        return lookup(EmbeddingStore::answer_pair_key(claim_id, index));
    }

  private:
    Vec lookup(const std::string& key) const {
        auto it = store_.vectors.find(key);
        if (it == store_.vectors.end()) throw MissingKey("store has no key " + key);
        return it->second;
    }

    EmbeddingStore store_;
};

// Assembles the feature bundle for one claim from a selected QA set. An
// absent evidence answer embeds the NO_ANSWER sentinel.
inline FeatureBundle build_bundle(const EmbeddingProvider& provider, const ClaimRecord& claim,
                                  const QASet& qaset) {
    if (qaset.pairs.empty()) throw EmptyQASet("build_bundle: " + claim.id + " has no QA pairs");

    FeatureBundle bundle;
    bundle.claim_vec = provider.embed_claim(claim.id, claim.claim);
    bundle.question_vecs.reserve(qaset.pairs.size());
    bundle.answer_vecs.reserve(qaset.pairs.size());
    for (std::size_t i = 0; i < qaset.pairs.size(); ++i) {
        const QAPair& pair = qaset.pairs[i];
        bundle.question_vecs.push_back(
            provider.embed_question(claim.id, static_cast<int>(i), pair.question));
        bundle.answer_vecs.push_back(provider.embed_answer_pair(
            claim.id, static_cast<int>(i), pair.claim_answer,
            pair.evidence_answer ? std::string_view(*pair.evidence_answer) : kNoAnswerSentinel));
    }

    if (static_cast<int>(bundle.claim_vec.size()) != provider.dim_claim() ||
        static_cast<int>(bundle.question_vecs.front().size()) != provider.dim_question() ||
        static_cast<int>(bundle.answer_vecs.front().size()) != provider.dim_answer_pair())
        throw DimMismatch("build_bundle: provider returned vectors off its declared dims");
    if (auto violations = validate_bundle(bundle); !violations.empty())
        throw Error("build_bundle: " + claim.id + ": " + violations.front());
    return bundle;
}

}  // namespace qaproxy::embed
