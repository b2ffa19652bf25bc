#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <string>
#include <vector>

#include "qaproxy/jsonl.hpp"

namespace qaproxy {

inline std::string iso8601_utc_now() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Sidecar written next to every produced artifact: enough to re-run the
// command and to notice when an input file changed underneath a result.
struct RunManifest {
    std::string tool_version;
    std::string command;                         // argv joined with spaces
    json config = json::object();                // resolved options
    std::map<std::string, std::string> inputs;   // path -> content digest
    std::vector<std::uint64_t> seeds;
    std::string created_at = iso8601_utc_now();

    void add_input(const std::string& path) { inputs[path] = file_digest(path); }

    json to_json() const {
        json in = json::object();
        for (const auto& [path, digest] : inputs) in[path] = digest;
        return json{{"tool_version", tool_version}, {"command", command},
                    {"config", config},            {"inputs", std::move(in)},
                    {"seeds", seeds},              {"created_at", created_at}};
    }
};

// `<output>.manifest.json`, atomically.
inline void write_manifest(const std::string& output_path, const RunManifest& manifest) {
    atomic_write_file(output_path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

}  // namespace qaproxy
