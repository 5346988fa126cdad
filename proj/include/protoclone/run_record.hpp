#pragma once

// Per-run provenance written next to every command's CSV output: the fully
// populated config, its hash, the seed, results, warnings and stage timings.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace protoclone {

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

// Hash of a config snapshot (compact dump), as 16 lowercase hex digits.
std::string config_hash(const nlohmann::json& config_snapshot);

struct RunRecord {
    std::string tool = "protoclone";
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::string config_hash;
    std::uint64_t seed = 0;
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings;  // stage name, seconds
    int exit_code = 0;

    bool operator==(const RunRecord&) const = default;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);

void write_record(const RunRecord& record, const std::string& path);
RunRecord read_record(const std::string& path);

}  // namespace protoclone
