#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "qaproxy/errors.hpp"

namespace qaproxy::ingest {

// Stand-in for the extractive QA model: an HTTP service answering
// POST /answer {"question", "context"} with
// {"candidates": [{"text", "score"}, ...]}, scores in [0,1].
struct QAServiceEndpoint {
    std::string base_url;
    std::chrono::milliseconds timeout{5000};
    int max_retries = 2;
};

struct AnswerCandidate {
    std::string text;
    double score = 0.0;
};

struct EvidenceAnswer {
    std::string text;
    double score = 0.0;
};

// Highest score wins; equal scores go to the lowest index. Null on empty.
inline const AnswerCandidate* pick_best_candidate(std::span<const AnswerCandidate> candidates) {
    const AnswerCandidate* best = nullptr;
    for (const auto& c : candidates)
        if (!best || c.score > best->score) best = &c;
    return best;
}

namespace detail {

inline std::vector<AnswerCandidate> parse_candidates(const std::string& body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponse(std::string("qa service: invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("candidates") || !doc["candidates"].is_array())
        throw MalformedResponse("qa service: missing candidates array");
    std::vector<AnswerCandidate> out;
    for (const auto& c : doc["candidates"]) {
        if (!c.is_object() || !c.contains("text") || !c["text"].is_string() ||
            !c.contains("score") || !c["score"].is_number())
            throw MalformedResponse("qa service: candidate must be {text: str, score: num}");
        AnswerCandidate cand{c["text"].get<std::string>(), c["score"].get<double>()};
        if (!(cand.score >= 0.0 && cand.score <= 1.0))
            throw MalformedResponse("qa service: score outside [0,1]");
        out.push_back(std::move(cand));
    }
    return out;
}

}  // namespace detail

// Asks the service for the evidence's answer to one question. Retries
// connection failures and non-200 statuses up to max_retries extra attempts;
// a schema-violating payload fails immediately. Empty candidate list means
// the evidence has no answer.
inline std::optional<EvidenceAnswer> fetch_evidence_answer(const QAServiceEndpoint& endpoint,
                                                           std::string_view question,
                                                           std::string_view evidence) {
    if (question.empty() || evidence.empty())
        throw Error("fetch_evidence_answer: question and evidence must be non-empty");

    const std::string body =
        nlohmann::json{{"question", std::string(question)}, {"context", std::string(evidence)}}
            .dump();

    httplib::Client client(endpoint.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        httplib::Result res = client.Post("/answer", body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        const std::vector<AnswerCandidate> candidates = detail::parse_candidates(res->body);
        const AnswerCandidate* best = pick_best_candidate(candidates);
        if (!best) return std::nullopt;
        return EvidenceAnswer{best->text, best->score};
    }
    throw ServiceUnreachable("qa service " + endpoint.base_url + " failed after " +
                             std::to_string(endpoint.max_retries + 1) + " attempt(s): " +
                             last_error);
}

}  // namespace qaproxy::ingest
