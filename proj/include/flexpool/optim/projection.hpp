#pragma once

// Euclidean projection onto {x : G x = d, lo <= x <= hi}.
//
// Dykstra's alternating projections between the affine set and the box. Each
// time the set of clamped coordinates stays unchanged for a sweep, the
// equality-constrained projection with that active set is solved exactly and
// accepted once it satisfies the KKT conditions of the full problem. Dykstra can
// sit on a residual plateau for thousands of sweeps before converging, so a
// stalled residual is confirmed by an LP feasibility check before giving up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"

namespace flexpool::optim {

inline constexpr double kTolProj = 1e-7;
inline constexpr int kMaxDykstraSweeps = 100000;
inline constexpr int kStallWindow = 500;

/// Symmetric positive-definite tridiagonal system factored as L D L'.
class TridiagonalLdlt {
 public:
  TridiagonalLdlt() = default;

  TridiagonalLdlt(const Eigen::VectorXd& diag, const Eigen::VectorXd& off) {
    const Eigen::Index n = diag.size();
    d_.resize(n);
    l_.resize(std::max<Eigen::Index>(n - 1, 0));
    if (n == 0) return;
    d_[0] = diag[0];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      l_[i] = off[i] / d_[i];
      d_[i + 1] = diag[i + 1] - l_[i] * off[i];
    }
    if ((d_.array() <= 0.0).any()) throw NumericalFailure("tridiagonal system is not positive definite");
  }

  Eigen::VectorXd solve(Eigen::VectorXd rhs) const {
    const Eigen::Index n = d_.size();
    for (Eigen::Index i = 1; i < n; ++i) rhs[i] -= l_[i - 1] * rhs[i - 1];
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] /= d_[i];
    for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] -= l_[i] * rhs[i + 1];
    return rhs;
  }

  Eigen::Index size() const { return d_.size(); }

 private:
  Eigen::VectorXd d_, l_;
};

/// Precomputed projector for a fixed full-row-rank matrix G. Immutable after
/// construction; safe to share across threads.
class AffineBoxProjector {
 public:
  explicit AffineBoxProjector(Eigen::MatrixXd G) : G_(std::move(G)) {
    const Eigen::MatrixXd GGt = G_ * G_.transpose();
    const Eigen::Index n = GGt.rows();
    bool tri = true;
    for (Eigen::Index i = 0; i < n && tri; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(i - j) > 1 && GGt(i, j) != 0.0) {
          tri = false;
          break;
        }
    tridiagonal_ = tri;
    if (tri) {
      Eigen::VectorXd off(std::max<Eigen::Index>(n - 1, 0));
      for (Eigen::Index i = 0; i + 1 < n; ++i) off[i] = GGt(i, i + 1);
      tri_ = TridiagonalLdlt(GGt.diagonal(), off);
    } else {
      llt_.compute(GGt);
      if (llt_.info() != Eigen::Success) throw NumericalFailure("G G' is not positive definite");
    }
  }

  const Eigen::MatrixXd& G() const { return G_; }
  bool tridiagonal() const { return tridiagonal_; }

  /// Projection onto {G x = d} alone.
  Eigen::VectorXd project_affine(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
    const Eigen::VectorXd r = G_ * x - d;
    return x - G_.transpose() * solve_ggt(r);
  }

  /// Projection of x0 onto {G x = d, -betabar <= x <= betabar}.
  Eigen::VectorXd project(const Eigen::VectorXd& d, const Eigen::VectorXd& betabar,
                          const Eigen::VectorXd& x0) const {
    return project(d, -betabar, betabar, x0);
  }

  Eigen::VectorXd project(const Eigen::VectorXd& d, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi, const Eigen::VectorXd& x0) const {
    const Eigen::Index g = G_.cols();
    if (d.size() != G_.rows() || lo.size() != g || hi.size() != g || x0.size() != g)
      throw DimensionMismatch("project_affine_box: dimension mismatch");

    const double scale = 1.0 + std::max({d.cwiseAbs().maxCoeff(), x0.cwiseAbs().maxCoeff(),
                                         finite_abs_max(lo), finite_abs_max(hi)});
    const double res_tol = 1e-12 * scale;

    // Fast path: x0 already feasible.
    if (in_box(x0, lo, hi, 0.0) && (G_ * x0 - d).cwiseAbs().maxCoeff() <= res_tol) return x0;

    Eigen::VectorXd x = x0;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(g);
    std::vector<std::int8_t> pattern(static_cast<std::size_t>(g), 0), prev(pattern);
    bool tried = false;
    double window_residual = std::numeric_limits<double>::infinity();
    bool known_feasible = false;

    for (int sweep = 1; sweep <= kMaxDykstraSweeps; ++sweep) {
      const Eigen::VectorXd y = project_affine(x, d);
      const Eigen::VectorXd yq = y + q;
      Eigen::VectorXd xn = yq.cwiseMax(lo).cwiseMin(hi);
      q = yq - xn;
      for (Eigen::Index i = 0; i < g; ++i)
        pattern[static_cast<std::size_t>(i)] = yq[i] > hi[i] ? 1 : (yq[i] < lo[i] ? -1 : 0);
      const double change = (xn - x).cwiseAbs().maxCoeff();
      x = std::move(xn);

      if (pattern == prev) {
        if (!tried) {
          tried = true;
          Eigen::VectorXd z;
          if (polish(pattern, d, lo, hi, x0, scale, z)) return z;
        }
      } else {
        prev = pattern;
        tried = false;
      }

      const double residual = (G_ * x - d).cwiseAbs().maxCoeff();
      if (change <= 1e-3 * kTolProj && residual <= res_tol) return x;
      // Residual frozen above tolerance across a whole window: the sets do not meet.
      if (sweep % kStallWindow == 0) {
        if (!known_feasible && residual > 1e3 * res_tol && residual >= (1.0 - 1e-9) * window_residual) {
          if (!feasible(d, lo, hi))
            throw EmptyIntersection("project_affine_box: residual " + std::to_string(residual) +
                                    " stalled; affine set and box do not intersect");
          known_feasible = true;
        }
        window_residual = residual;
      }
    }
    throw EmptyIntersection("project_affine_box: sweep limit reached without convergence");
  }

 private:
  static double finite_abs_max(const Eigen::VectorXd& v) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (std::isfinite(v[i])) m = std::max(m, std::abs(v[i]));
    return m;
  }

  static bool in_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                     double tol) {
    return ((x - lo).array() >= -tol).all() && ((hi - x).array() >= -tol).all();
  }

  bool feasible(const Eigen::VectorXd& d, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) const {
    LpBuilder b;
    for (Eigen::Index i = 0; i < G_.cols(); ++i) b.add_variable(lo[i], hi[i], 0.0);
    for (Eigen::Index r = 0; r < G_.rows(); ++r) {
      LpBuilder::Row row;
      for (Eigen::Index i = 0; i < G_.cols(); ++i)
        if (G_(r, i) != 0.0) row.emplace_back(i, G_(r, i));
      b.add_eq(row, d[r]);
    }
    return solve_lp(b.build()).status == LpStatus::Optimal;
  }

  Eigen::VectorXd solve_ggt(const Eigen::VectorXd& r) const {
    return tridiagonal_ ? tri_.solve(r) : Eigen::VectorXd(llt_.solve(r));
  }

  // Exact projection for a guessed active set; true when KKT holds.
  bool polish(const std::vector<std::int8_t>& pattern, const Eigen::VectorXd& d,
              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const Eigen::VectorXd& x0,
              double scale, Eigen::VectorXd& z) const {
    const Eigen::Index g = G_.cols();
    const Eigen::Index n = G_.rows();
    z = x0;
    Eigen::VectorXd rhs = -d;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < g; ++i) {
      const auto p = pattern[static_cast<std::size_t>(i)];
      if (p != 0) {
        z[i] = p > 0 ? hi[i] : lo[i];
        rhs += G_.col(i) * z[i];
      } else {
        rhs += G_.col(i) * x0[i];
        M.noalias() += G_.col(i) * G_.col(i).transpose();
      }
    }
    // rhs = G_F x0_F + G_A z_A - d ; solve M lambda = rhs.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd lambda = ldlt.solve(rhs);
    if (!lambda.allFinite()) return false;
    const Eigen::VectorXd Gtl = G_.transpose() * lambda;
    const double tol = 1e-12 * scale;
    for (Eigen::Index i = 0; i < g; ++i) {
      const auto p = pattern[static_cast<std::size_t>(i)];
      if (p == 0) {
        z[i] = x0[i] - Gtl[i];
        if (z[i] > hi[i] + tol || z[i] < lo[i] - tol) return false;
        z[i] = std::clamp(z[i], lo[i], hi[i]);
      } else {
        const double mu = x0[i] - z[i] - Gtl[i];
        if (p > 0 && mu < -1e-10 * scale) return false;
        if (p < 0 && mu > 1e-10 * scale) return false;
      }
    }
    return (G_ * z - d).cwiseAbs().maxCoeff() <= 1e-12 * scale + 1e-13 * scale * std::sqrt(double(g));
  }

  Eigen::MatrixXd G_;
  bool tridiagonal_ = false;
  TridiagonalLdlt tri_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Euclidean projection of x0 onto {beta : G beta = d, |beta| <= betabar}.
inline Eigen::VectorXd project_affine_box(const Eigen::MatrixXd& G, const Eigen::VectorXd& d,
                                          const Eigen::VectorXd& betabar, const Eigen::VectorXd& x0) {
  return AffineBoxProjector(G).project(d, betabar, x0);
}

}  // namespace flexpool::optim
