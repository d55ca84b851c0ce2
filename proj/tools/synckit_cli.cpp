// Command-line front end. Talks to the toolkit exclusively through the
// shared-library C interface.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "synckit/synckit.h"

namespace {

struct CommonOptions {
  std::string config;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid = 0;
  bool grid_set = false;
  bool override_gain = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "JSON config file")->required();
  cmd->add_option("--out", opt.out_dir, "artifact directory (default: out)");
  cmd->add_option("--seed", opt.seed, "sampling / initial-condition seed")
      ->each([&opt](const std::string&) { opt.seed_set = true; });
  cmd->add_option("--grid", opt.grid, "grid points per box axis")
      ->each([&opt](const std::string&) { opt.grid_set = true; });
  cmd->add_flag("--override-gain", opt.override_gain,
                "accept gains below the certified floor (failure experiments)");
}

int run(const std::string& command, const CommonOptions& opt) {
  std::string overrides = "{";
  bool first = true;
  const auto append = [&](const std::string& kv) {
    if (!first) overrides += ",";
    overrides += kv;
    first = false;
  };
  if (opt.seed_set) append("\"seed\":" + std::to_string(opt.seed));
  if (opt.grid_set) append("\"grid\":" + std::to_string(opt.grid));
  if (opt.override_gain) append("\"override_gain\":true");
  overrides += "}";

  sk_report* report = nullptr;
  const sk_status status = sk_run(command.c_str(), opt.config.c_str(), opt.out_dir.c_str(),
                                  overrides.c_str(), &report);
  if (status != SK_OK) {
    std::fprintf(stderr, "error: %s\n", sk_last_error());
    return static_cast<int>(status);
  }
  std::fputs(sk_report_text(report), stdout);
  const int code = sk_report_exit_code(report);
  sk_report_destroy(report);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified synchronization toolkit for networked nonlinear agents"};
  app.set_version_flag("--version", std::string(sk_version()));
  app.require_subcommand(1);

  const char* commands[] = {"graph-info", "check", "synthesize", "backstep", "simulate", "sweep"};
  const char* blurbs[] = {
      "graph connectivity, spectra and coupling margin",
      "certificate checks over the sample box",
      "controller gain synthesis with structural checks",
      "augmented-certificate construction for strict-feedback systems",
      "closed-loop integration with rate fitting",
      "parameter sweep over repeated simulations",
  };
  CommonOptions opts[6];
  for (int i = 0; i < 6; ++i) {
    add_common(app.add_subcommand(commands[i], blurbs[i]), opts[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 6; ++i) {
    if (app.got_subcommand(commands[i])) return run(commands[i], opts[i]);
  }
  std::fprintf(stderr, "error: no command given\n");
  return 1;
}
