#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vralpr/pipeline.hpp"

namespace vralpr {

/// Command-line values that replace config-file fields when given.
struct ConfigOverrides {
  std::optional<int> line_y;
  std::optional<int> chunk;
  std::optional<int> overlap;
  std::optional<std::string> output;
  std::optional<std::string> source;
  std::optional<int> workers;
  std::optional<std::string> dump_dir;
};

/// Loads `config_path` (built-in defaults when empty) and applies, per field,
/// flag > VRALPR_WORKERS (workers only) > config file > default.
PipelineConfig resolve_config(const std::string& config_path, const ConfigOverrides& overrides);

/// Entry point of the `vralpr` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on pipeline or data errors, 2 on usage or
/// configuration errors. Data goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vralpr
