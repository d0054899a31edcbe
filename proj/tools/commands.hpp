#pragma once

#include "config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace sbie::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kConfigFailure = 1;
inline constexpr int kSolverFailure = 2;
inline constexpr int kGeometryHalt = 3;
inline constexpr int kRuntimeFailure = 4;

// Each command writes its tables and resolved_config.json into `out` and progress lines to `log`.
int cmd_transform(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
int cmd_spectra(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
int cmd_convergence(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
int cmd_solve(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
int cmd_bench(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);
int cmd_simulate(const RunConfig& c, const std::filesystem::path& out, std::ostream& log);

// Dispatch by subcommand name; throws std::invalid_argument for an unknown name.
int run_command(const std::string& name, const RunConfig& c, const std::filesystem::path& out, std::ostream& log);

}  // namespace sbie::cli
