#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdfabench/error.hpp"
#include "pdfabench/harness.hpp"

namespace pdfabench::cli {

/// Bad invocation or configuration; maps to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

enum class Command { enumerate, stats, curve, run, suite, report };

Command parse_command(std::string const& name);
std::string_view to_string(Command command) noexcept;

struct CliConfig {
    Command command = Command::stats;
    std::filesystem::path library = "library.jsonl";
    std::filesystem::path store = "records.jsonl";
    std::filesystem::path out = ".";
    ProtocolConfig protocol;
    int n_states = 3;
    int draws = 1;
    int jobs = 1;
    int verbosity = 1;
    /// `run` and `curve`: restrict to one machine id.
    std::string machine;
    /// `run`: family and optional single size (otherwise the whole grid).
    Family family = Family::lstm;
    std::optional<int> size;
    HistogramOptions histogram;
};

/// Key/value overrides as they would appear in a config file; a key may
/// carry a section prefix ("lstm.epochs").
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Config file syntax: "key = value" lines, "[section]" headers for
/// glm, reservoir, lstm, logistic, curve and report, '#' comments.
/// Precedence: overrides > file > defaults. Unknown keys and malformed
/// values throw UsageError.
CliConfig parse_config(std::string const& file_text, Overrides const& overrides = {},
                       std::string const& source = "<config>");
CliConfig parse_config_file(std::optional<std::filesystem::path> const& path, Overrides const& overrides = {});

/// Checks input paths the command needs; throws UsageError when missing.
void check_paths(CliConfig const& config);

/// Runs a command. Returns 0 on success and 1 on runtime failure; usage
/// problems throw UsageError. Human-readable output goes to `out`,
/// diagnostics to `err`.
int execute(CliConfig const& config, std::ostream& out, std::ostream& err);

/// Full entry point: argument parsing, config, execution, exit code.
int main(int argc, char** argv);

}  // namespace pdfabench::cli
