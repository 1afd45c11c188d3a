#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lumber::cli {

/// Runs the `lumber` command line. `args` excludes the program name.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Name of the resolved-configuration file a command writes into its output
/// directory, e.g. "chunk.run_config.json".
std::string run_config_name(const std::string& command);

}  // namespace lumber::cli
