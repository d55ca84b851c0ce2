#include "core/system.hpp"

namespace synckit {

Eigen::MatrixXd ControlAffineSystem::jacobian_f(const Eigen::VectorXd& z) const {
  if (jac_f) return jac_f(z);
  return fd_jacobian(f, z, h_jac);
}

Eigen::VectorXd rk4_step(const VectorFn& field, const Eigen::VectorXd& z, double h) {
  const Eigen::VectorXd k1 = field(z);
  const Eigen::VectorXd k2 = field(z + 0.5 * h * k1);
  const Eigen::VectorXd k3 = field(z + 0.5 * h * k2);
  const Eigen::VectorXd k4 = field(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::MatrixXd fd_jacobian(const VectorFn& field, const Eigen::VectorXd& z, double h) {
  const auto n = z.size();
  const auto m = field(z).size();
  Eigen::MatrixXd jac(m, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd zp = z, zm = z;
    zp[k] += h;
    zm[k] -= h;
    jac.col(k) = (field(zp) - field(zm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace synckit
