#include "missforest/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "missforest/errors.hpp"
#include "missforest/log.hpp"

namespace missforest {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& theta) {
  const int p = static_cast<int>(theta.size());
  Vec probe = theta;
  Mat jac;
  for (int j = 0; j < p; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + h;
    const Vec up = f(probe);
    probe[j] = theta[j] - h;
    const Vec down = f(probe);
    probe[j] = theta[j];
    if (jac.size() == 0) jac.resize(up.size(), p);
    jac.col(j) = (up - down) / (2.0 * h);
  }
  if (jac.size() == 0) jac.resize(0, p);
  return jac;
}

SolveReport newton_solve(const std::function<Vec(const Vec&)>& residual,
                         const std::function<Mat(const Vec&)>& jacobian,
                         Vec theta0, double tol, int max_iter) {
  SolveReport report;
  Vec theta = std::move(theta0);
  Vec res = residual(theta);
  if (!all_finite(res))
    throw NonFiniteEvaluation("residual is non-finite at the starting point");
  double norm = res.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < max_iter; ++iter) {
    if (norm <= tol) {
      report.solution = theta;
      report.iterations = iter;
      report.final_residual_norm = norm;
      report.converged = true;
      return report;
    }
    const Mat jac = jacobian ? jacobian(theta) : fd_jacobian(residual, theta);
    Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible())
      throw SingularJacobian("Jacobian is singular at iteration " +
                             std::to_string(iter));
    const Vec step = lu.solve(res);

    // Damping: halve the step until the residual norm stops increasing.
    double scale = 1.0;
    Vec trial;
    Vec trial_res;
    double trial_norm = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      trial = theta - scale * step;
      trial_res = residual(trial);
      if (all_finite(trial_res)) {
        trial_norm = trial_res.lpNorm<Eigen::Infinity>();
        if (trial_norm < norm) {
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) {
      // No productive step length: report the best point seen, unconverged.
      report.solution = theta;
      report.iterations = iter + 1;
      report.final_residual_norm = norm;
      report.converged = false;
      log_info("newton_solve: stalled at residual norm " + std::to_string(norm));
      return report;
    }
    theta = std::move(trial);
    res = std::move(trial_res);
    norm = trial_norm;
  }

  report.solution = theta;
  report.iterations = max_iter;
  report.final_residual_norm = norm;
  report.converged = norm <= tol;
  if (!report.converged)
    log_info("newton_solve: max iterations reached with residual norm " +
             std::to_string(norm));
  return report;
}

Mat sandwich(const Mat& A, const Mat& B, int n) {
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible())
    throw SingularA("bread matrix of the sandwich is singular");
  const Mat a_inv = lu.inverse();
  Mat v = a_inv * B * a_inv.transpose() / static_cast<double>(n);
  v = ((v + v.transpose()) / 2.0).eval();
  return v;
}

}  // namespace missforest
