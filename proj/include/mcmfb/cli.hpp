#pragma once

#include <string>

namespace mcmfb::cli {

/// Exit codes: 0 ok, 2 config error, 3 solver error, 4 I/O error,
/// 5 verification failure.
int run_command(const std::string& config_or_preset, std::string out_dir = "");
int verify_command(const std::string& run_dir);
int converge_command(const std::string& config_or_preset, int levels,
                     std::string out_dir = "");
int plot_command(const std::string& run_dir, bool triple);
int preset_command(const std::string& name);

int dispatch(int argc, char** argv);

} // namespace mcmfb::cli
