#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "qaproxy/errors.hpp"

namespace qaproxy {

// Canonical text form used for answer containment and token overlap:
// NFKC case folding, then runs of Unicode whitespace collapsed to a single
// ASCII space and edges trimmed. Case folding is not ASCII folding, so
// "Lübeck" stays "lübeck".
inline std::string normalize_text(std::string_view text) {
    if (text.empty()) return {};

    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) throw Error("icu: NFKC_Casefold instance unavailable");

    icu::UnicodeString raw =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString folded = nfkc_cf->normalize(raw, status);
    if (U_FAILURE(status)) throw Error("icu: normalization failed");

    icu::UnicodeString out;
    bool pending_space = false;
    bool emitted = false;
    for (int32_t i = 0; i < folded.length();) {
        UChar32 c = folded.char32At(i);
        i += U16_LENGTH(c);
        if (u_isUWhiteSpace(c)) {
            pending_space = emitted;
            continue;
        }
        if (pending_space) {
            out.append(static_cast<UChar32>(U' '));
            pending_space = false;
        }
        out.append(c);
        emitted = true;
    }

    std::string result;
    out.toUTF8String(result);
    return result;
}

// Whitespace tokens of the normalized form of `text`.
inline std::vector<std::string> normalized_tokens(std::string_view text) {
    std::string norm = normalize_text(text);
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        if (end > start) tokens.emplace_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

}  // namespace qaproxy
