#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace washboard::cli {

inline constexpr const char* tool_version = "0.1.0";

/// Subcommand names in dispatch order.
const std::vector<std::string>& command_names();

struct CommandOutput {
    std::vector<std::filesystem::path> files;  ///< CSVs written, manifest last
};

/**
 Runs one subcommand and writes `<output.path>/<name>.csv` (plus extras for
 some commands) and `<output.path>/<name>.manifest.json`.
 */
CommandOutput run_command(const std::string& name, const RunConfig& cfg);

/// FNV-1a 64 over the IEEE bytes of a grid, as 16 hex digits.
std::string grid_hash(const std::vector<double>& grid);

}  // namespace washboard::cli
