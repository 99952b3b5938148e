#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guidesim::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

/// Parses the subcommand and flags, executes, and writes outputs under --out.
/// Diagnostics go to standard error; machine-readable outputs only to files.
int dispatch(int argc, const char* const* argv);

/// "1,2,5-8" -> {1,2,5,6,7,8}
std::vector<std::uint64_t> parse_seeds(std::string_view text);

/// Writes att_compare.csv and kernel_heatmap.csv for the given run directories.
/// The heatmap kernel comes from `kernel_text` when non-empty, else from the
/// first run directory's kernel.txt.
void emit_plot_data(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                    const std::string& kernel_text, double x_max, double t_max, int nx, int nt);

} // namespace guidesim::cli
