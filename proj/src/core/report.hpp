#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <limits>
#include <string>

namespace synckit {

// Margin convention: all terms of an inequality are moved to the left-hand
// side, so margin <= tolerance means the property holds and the worst
// sample is the one with the largest margin.
struct VerificationReport {
  std::string property;
  double worst_margin = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd worst_point;
  bool pass = false;
  std::size_t samples_checked = 0;
  double tolerance = 0.0;

  void observe(double margin, const Eigen::VectorXd& at) {
    ++samples_checked;
    if (margin > worst_margin) {
      worst_margin = margin;
      worst_point = at;
    }
  }

  void finalize(double tol) {
    tolerance = tol;
    pass = worst_margin <= tol;
  }
};

// Default tolerances: exact/analytic evaluation paths vs. anything that
// goes through a finite difference.
inline constexpr double kTolAnalytic = 1e-9;
inline constexpr double kTolFiniteDiff = 1e-6;

}  // namespace synckit
