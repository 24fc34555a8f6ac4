#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qndsim_cli/config.hpp"

namespace qndsim::cli {

/// Each command writes its files into `out` and returns their names.
std::vector<std::string> cmd_spectrum(const RunConfig& config, const std::filesystem::path& out);
std::vector<std::string> cmd_efficiency(const RunConfig& config, const std::filesystem::path& out);
std::vector<std::string> cmd_protocol(const RunConfig& config, const std::filesystem::path& out);
std::vector<std::string> cmd_tomo_selftest(const RunConfig& config, const std::filesystem::path& out);
std::vector<std::string> cmd_sweep(const RunConfig& config, const std::filesystem::path& out);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;

/// Full command line entry point; never throws.
int run(int argc, const char* const* argv);

}  // namespace qndsim::cli
