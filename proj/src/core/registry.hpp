#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/backstepping.hpp"
#include "core/certificate.hpp"
#include "core/sampling.hpp"
#include "core/system.hpp"

namespace synckit {

// A ready-to-run benchmark: dynamics, certificate, verification box and the
// margin matrix its declared rho was checked against.
struct Example {
  std::string name;
  ControlAffineSystem system;
  MetricCertificate cert;
  Box box;
  Eigen::MatrixXd Q;
  bool constant_metric = false;
  bool constant_input = false;
  Eigen::MatrixXd P0;  // metric value when constant
  Eigen::MatrixXd G0;  // input matrix when constant
  std::optional<KillingData> killing;
  std::shared_ptr<const StrictFeedbackSystem> strict;  // strict-feedback bases
  RowVectorFn grad_alpha;                              // backstepping ingredient
  // Backstepped entries record their construction parameters.
  double eta = 0.0;
  double epsilon = 0.0;
};

// Looks up a named example; `<base>-backstepped` entries are constructed on
// first use (default eta, z_b box [-1, 1]) and memoized. Unknown names raise
// a usage error listing the registry.
const Example& find_example(const std::string& name);

std::vector<std::string> example_names();

}  // namespace synckit
