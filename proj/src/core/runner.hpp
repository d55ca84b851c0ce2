#pragma once

#include <string>

#include "json.hpp"

#include "core/config.hpp"

namespace synckit {

struct RunReport {
  nlohmann::json json;
  std::string text;
  int exit_code = 0;
};

// Executes one command (graph-info, check, synthesize, backstep, simulate,
// sweep) against a resolved config, writing the manifest and any trace CSVs
// into `out_dir`. Refusals and invalid inputs escape as Error; check-style
// failures come back as exit_code 2 with the full report.
RunReport run_command(const std::string& command, const Config& cfg, const std::string& out_dir);

}  // namespace synckit
