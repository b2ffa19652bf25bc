#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qaproxy/errors.hpp"

namespace qaproxy {

using json = nlohmann::json;

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path);
    return buf.str();
}

// Write via a temp file in the same directory, then rename. Readers never
// observe a half-written file.
inline void atomic_write_file(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename to " + path + " failed: " + ec.message());
}

// Streams a JSON Lines file to `handler(line_number, parsed)`. Whitespace-only
// lines are skipped; malformed JSON becomes a ParseError carrying the line.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const json&)>& handler) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json parsed;
        try {
            parsed = json::parse(line);
        } catch (const json::exception& e) {
            // Covers parse_error plus out_of_range (e.g. literals like 1e999
            // that overflow double during parsing).
            throw ParseError(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        handler(line_no, parsed);
    }
    if (in.bad()) throw IoError("read failed for " + path);
}

// Typed field access with schema-style error messages.
inline std::string get_string(const json& j, const char* key, const std::string& path,
                              std::size_t line) {
    if (!j.contains(key) || !j[key].is_string())
        throw ParseError(path, line, std::string(key) + ": expected string");
    return j[key].get<std::string>();
}

inline double get_finite_number(const json& j, const char* key, const std::string& path,
                                std::size_t line) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError(path, line, std::string(key) + ": expected number");
    double v = j[key].get<double>();
    if (!std::isfinite(v)) throw ParseError(path, line, std::string(key) + ": non-finite");
    return v;
}

// FNV-1a over file bytes; cheap provenance fingerprint for run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string file_digest(const std::string& path) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file_bytes(path))));
    return std::string(buf);
}

}  // namespace qaproxy
