#include "protoclone/run_record.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace protoclone {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& config_snapshot) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_snapshot.dump())));
    return buf;
}

json to_json(const RunRecord& r) {
    json timings = json::array();
    for (const auto& [stage, seconds] : r.timings) timings.push_back({{"stage", stage}, {"seconds", seconds}});
    return json{{"tool", r.tool},         {"command", r.command},   {"config", r.config},
                {"config_hash", r.config_hash}, {"seed", r.seed},  {"results", r.results},
                {"warnings", r.warnings}, {"timings", timings},     {"exit_code", r.exit_code}};
}

RunRecord record_from_json(const json& doc) {
    RunRecord r;
    try {
        r.tool = doc.at("tool").get<std::string>();
        r.command = doc.at("command").get<std::string>();
        r.config = doc.at("config");
        r.config_hash = doc.at("config_hash").get<std::string>();
        r.seed = doc.at("seed").get<std::uint64_t>();
        r.results = doc.at("results");
        r.warnings = doc.at("warnings").get<std::vector<std::string>>();
        for (const auto& t : doc.at("timings")) {
            r.timings.emplace_back(t.at("stage").get<std::string>(), t.at("seconds").get<double>());
        }
        r.exit_code = doc.at("exit_code").get<int>();
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed run record: ") + e.what());
    }
    return r;
}

void write_record(const RunRecord& record, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(record).dump(2) << '\n';
}

RunRecord read_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return record_from_json(json::parse(in));
}

}  // namespace protoclone
