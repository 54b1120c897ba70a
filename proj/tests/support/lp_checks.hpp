#pragma once

// Test-side checks of LP optimality certificates and a brute-force vertex
// enumeration oracle for tiny LPs.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/optim/lp.hpp"

namespace flexpool::oracle {

/// Dual feasibility plus complementary-slackness residual of an optimal solution.
/// Returns the largest violation found.
inline double certificate_residual(const optim::LinearProgram& lp, const optim::LpSolution& sol) {
  const Eigen::Index n = lp.num_variables();
  double worst = 0.0;
  // Stationarity: cost = A_in' y_in + A_eq' y_eq + d.
  Eigen::VectorXd stat = lp.cost - sol.reduced_costs;
  if (lp.A_in.rows() > 0) stat -= lp.A_in.transpose() * sol.duals_in;
  if (lp.A_eq.rows() > 0) stat -= lp.A_eq.transpose() * sol.duals_eq;
  if (n > 0) worst = std::max(worst, stat.cwiseAbs().maxCoeff());

  // y_in <= 0 and y_in * slack = 0.
  if (lp.A_in.rows() > 0) {
    const Eigen::VectorXd slack = lp.b_in - lp.A_in * sol.x;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      worst = std::max(worst, sol.duals_in[i]);
      worst = std::max(worst, std::abs(sol.duals_in[i] * slack[i]));
    }
  }
  // Reduced costs: nonnegative at lower bound, nonpositive at upper, zero in between.
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = sol.reduced_costs[j];
    const double to_lo = std::isfinite(lp.lower[j]) ? sol.x[j] - lp.lower[j] : optim::kInf;
    const double to_hi = std::isfinite(lp.upper[j]) ? lp.upper[j] - sol.x[j] : optim::kInf;
    if (d > 1e-11) worst = std::max(worst, d * to_lo);
    if (d < -1e-11) worst = std::max(worst, -d * to_hi);
  }
  return worst;
}

inline double primal_residual(const optim::LinearProgram& lp, const Eigen::VectorXd& x) {
  double worst = 0.0;
  if (lp.A_in.rows() > 0) worst = std::max(worst, (lp.A_in * x - lp.b_in).maxCoeff());
  if (lp.A_eq.rows() > 0) worst = std::max(worst, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lp.lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

/// Minimum of cost' x over {A x <= b, lo <= x <= hi} (all bounds finite) by
/// enumerating every vertex candidate. Only for n <= 3.
inline std::optional<double> brute_force_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                                            const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                                            const Eigen::VectorXd& hi) {
  const Eigen::Index n = c.size();
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd H(m + 2 * n, n);
  Eigen::VectorXd h(m + 2 * n);
  H.topRows(m) = A;
  h.head(m) = b;
  for (Eigen::Index j = 0; j < n; ++j) {
    H.row(m + 2 * j).setZero();
    H(m + 2 * j, j) = 1.0;
    h[m + 2 * j] = hi[j];
    H.row(m + 2 * j + 1).setZero();
    H(m + 2 * j + 1, j) = -1.0;
    h[m + 2 * j + 1] = -lo[j];
  }
  const Eigen::Index rows = H.rows();
  std::optional<double> best;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  // Iterate over all n-subsets of rows.
  std::vector<bool> pick(static_cast<std::size_t>(rows), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd r(n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      if (pick[static_cast<std::size_t>(i)]) {
        M.row(k) = H.row(i);
        r[k] = h[i];
        ++k;
      }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() < n) continue;
    const Eigen::VectorXd x = lu.solve(r);
    if (((H * x - h).array() <= 1e-9).all()) {
      const double v = c.dot(x);
      if (!best || v < *best) best = v;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace flexpool::oracle
