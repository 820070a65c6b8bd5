#pragma once

#include <Eigen/Dense>
#include <functional>

namespace missforest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SolveReport {
  Vec solution;
  int iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
};

// Damped Newton root finder for smooth estimating equations.  Steps are halved
// (up to 30 times) whenever the residual infinity-norm would increase; when no
// Jacobian is supplied a central-difference one is used.  Non-convergence is
// reported, not thrown; a singular Jacobian throws SingularJacobian.
SolveReport newton_solve(const std::function<Vec(const Vec&)>& residual,
                         const std::function<Mat(const Vec&)>& jacobian,
                         Vec theta0, double tol = 1e-8, int max_iter = 100);

inline SolveReport newton_solve(const std::function<Vec(const Vec&)>& residual,
                                Vec theta0, double tol = 1e-8,
                                int max_iter = 100) {
  return newton_solve(residual, nullptr, std::move(theta0), tol, max_iter);
}

// Central-difference Jacobian with per-coordinate step 1e-6 * max(1, |theta_i|).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& theta);

// Finite-sample sandwich covariance (1/n) * A^{-1} B A^{-T}, symmetrized.
Mat sandwich(const Mat& A, const Mat& B, int n);

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace missforest
