#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "implicit/error.hpp"
#include "implicit/gensol.hpp"
#include "implicit/variations.hpp"
#include "implicit/verify.hpp"

namespace implicit::cli {

enum class Format { Csv, Json };

struct CommandOptions {
  std::filesystem::path problem;
  std::optional<std::filesystem::path> out;
  std::optional<double> tol;
  unsigned threads = 0;
  Format format = Format::Csv;
  /// verify only; defaults to <out>/grid.bin.
  std::optional<std::filesystem::path> grid;
  /// variations only; overrides [variations] lambdas when non-empty.
  std::vector<double> lambdas;
};

/// Exit codes shared by every subcommand.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int runtime = 1;
inline constexpr int usage = 2;
inline constexpr int singular = 3;
inline constexpr int check_failed = 4;
}  // namespace exit_code

int exit_code_for(ErrorKind kind);

nlohmann::json to_json(const VerificationReport& report);
nlohmann::json to_json(const GenSolReport& report);
nlohmann::json to_json(const ConvergenceReport& report);

/// Each command writes its artifacts below the output directory, a report on
/// `out` and diagnostics on `err`, and returns the exit code. Library errors
/// propagate; run_cli maps them.
int cmd_parametrize(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_gensol(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_variations(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Full command line including argv[0]. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace implicit::cli
