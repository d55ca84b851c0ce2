#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/backstepping.hpp"
#include "core/certificate.hpp"
#include "core/graph.hpp"
#include "core/registry.hpp"
#include "core/sampling.hpp"
#include "core/system.hpp"

namespace synckit {

// Initial-condition recipe for experiments.
struct InitialSpec {
  enum class Kind { explicit_x0, perturbed, spread };
  Kind kind = Kind::spread;
  Eigen::VectorXd x0;     // explicit stacked state
  Eigen::VectorXd z0;     // common on-manifold point
  double delta = 1e-2;    // per-agent offset norm
  double spread = 1.0;    // uniform range half-width
};

// Flag overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  bool override_gain = false;
};

// Fully resolved run description: every default materialized, expressions
// compiled, graph built. `resolved` mirrors the effective settings for the
// manifest.
struct Config {
  nlohmann::json resolved;
  std::uint64_t seed = 0;

  std::shared_ptr<CommGraph> graph;

  std::string example_name;  // nonempty when a registry entry was used
  bool has_system = false;
  ControlAffineSystem system;
  MetricCertificate cert;
  Box box;
  Eigen::MatrixXd Q;
  bool constant_metric = false;
  bool constant_input = false;
  Eigen::MatrixXd P0;
  Eigen::MatrixXd G0;
  std::optional<KillingData> killing;
  std::shared_ptr<const StrictFeedbackSystem> strict;
  RowVectorFn grad_alpha;

  int grid = 21;
  int random_points = 1000;
  std::vector<std::string> checks;

  std::string synth_kind = "local";
  std::optional<double> gain;
  double safety = 1.25;
  bool override_gain = false;

  std::string backstep_base;
  double M_b = 1.0;
  std::optional<double> eta;

  double T = 10.0;
  double dt = 1e-3;
  int decimate = 1;
  InitialSpec initial;
  double window_lo = 0.0;  // resolved to [0.2 T, 0.8 T] unless given
  double window_hi = 0.0;

  std::string sweep_param = "delta";
  std::vector<double> sweep_values{1e-2, 1e-1};

  // Sample set over `box`: full grid plus `random_points` seeded draws.
  SampleSet samples() const;
};

// Reads and resolves a JSON config file. Parse and validation problems raise
// Error(usage) with the offending field in the message.
Config load_config(const std::string& path, const CliOverrides& overrides = {});
Config parse_config(const nlohmann::json& doc, const CliOverrides& overrides = {});

// FNV-1a 64-bit digest (hex string) of the raw config bytes.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace synckit
