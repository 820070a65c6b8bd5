#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace missforest {

// Observed data: proxies hold NaN where a value is missing; indicators are the
// derived response pattern (1 = observed).  Indicator columns are always fully
// observed, even for rows whose proxies are all missing.
struct Dataset {
  Eigen::MatrixXd proxies;    // n x K, NaN encodes missing
  Eigen::MatrixXi indicators; // n x K in {0,1}

  int n() const { return static_cast<int>(proxies.rows()); }
  int k() const { return static_cast<int>(proxies.cols()); }

  bool observed(int row, int var) const { return indicators(row, var - 1) == 1; }
  double value(int row, int var) const { return proxies(row, var - 1); }
  int r_value(int row, int ind) const { return indicators(row, ind - 1); }

  // Derive indicators from NaN placement.
  static Dataset from_proxies(Eigen::MatrixXd x) {
    Dataset d;
    d.indicators.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        d.indicators(i, j) = std::isnan(x(i, j)) ? 0 : 1;
    d.proxies = std::move(x);
    return d;
  }

  // Mask a complete matrix by a response pattern.
  static Dataset from_complete(const Eigen::MatrixXd& x,
                               const Eigen::MatrixXi& r) {
    Dataset d;
    d.proxies = x;
    d.indicators = r;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (r(i, j) == 0) d.proxies(i, j) = std::numeric_limits<double>::quiet_NaN();
    return d;
  }
};

}  // namespace missforest
