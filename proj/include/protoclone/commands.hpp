#pragma once

// Subcommands of the protoclone tool. Each takes a validated RunConfig,
// writes CSV tables plus a <command>_record.json into the output directory
// and returns an exit code: 0 success, 1 computation failure, 2 bad input.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "protoclone/run_config.hpp"
#include "protoclone/run_record.hpp"

namespace protoclone {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Shortest decimal form that reads back to the same double.
std::string format_number(double x);

// Comma-separated table with a header row; cells containing commas, quotes
// or newlines are quoted.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    [[nodiscard]] std::size_t rows() const { return rows_.size(); }
    [[nodiscard]] std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct RunContext {
    std::filesystem::path out_dir;
    int jobs = 1;
    bool quiet = false;
    std::ostream* log = nullptr;  // human-readable summary; nullptr or quiet silences it
};

struct CommandResult {
    int exit_code = kExitOk;
    RunRecord record;
    std::vector<std::filesystem::path> files;  // written outputs, record last
};

CommandResult cmd_spectrum(const RunConfig& cfg, const RunContext& ctx);
CommandResult cmd_kick_curve(const RunConfig& cfg, const RunContext& ctx);
CommandResult cmd_clone(const RunConfig& cfg, const RunContext& ctx);
CommandResult cmd_discriminate(const RunConfig& cfg, const RunContext& ctx);
CommandResult cmd_oracle(const RunConfig& cfg, const RunContext& ctx);
CommandResult cmd_sweep(const RunConfig& cfg, const RunContext& ctx);

// Names accepted by run_command, in help order.
const std::vector<std::string>& command_names();

struct CommandOptions {
    std::string config_path;
    std::optional<std::string> out_dir;  // PROTOCLONE_OUT, when set, takes precedence
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool quiet = false;
};

// Loads and validates the config, resolves the output directory and runs
// the named command. Errors are reported on `err`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace protoclone
