#pragma once

#include <Eigen/Core>
#include <functional>

namespace synckit {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using RowVectorFn = std::function<Eigen::RowVectorXd(const Eigen::VectorXd&)>;

// Control-affine agent dynamics xdot = f(x) + g(x) u.
struct ControlAffineSystem {
  int state_dim = 0;
  int input_dim = 0;
  VectorFn f;
  MatrixFn g;      // n x p
  MatrixFn jac_f;  // analytic Jacobian of f when available
  double h_jac = 1e-5;

  bool has_analytic_jacobian() const { return static_cast<bool>(jac_f); }
  Eigen::MatrixXd jacobian_f(const Eigen::VectorXd& z) const;
};

// One classical 4th-order step of zdot = field(z).
Eigen::VectorXd rk4_step(const VectorFn& field, const Eigen::VectorXd& z, double h);

Eigen::MatrixXd fd_jacobian(const VectorFn& field, const Eigen::VectorXd& z, double h);

}  // namespace synckit
