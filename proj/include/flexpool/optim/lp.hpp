#pragma once

// Dense bounded-variable revised simplex.
//
//   minimize    cost' x
//   subject to  A_in x <= b_in
//               A_eq x  = b_eq
//               lower <= x <= upper      (entries may be +-inf)
//
// Constraint matrices are stored sparse (column access drives pricing), the
// basis inverse is kept dense and refreshed by rank-1 eta updates with a
// periodic LU refactorization. Dantzig pricing falls back to Bland's rule after
// a run of degenerate pivots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "flexpool/errors.hpp"

namespace flexpool::optim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kTolFeas = 1e-8;
inline constexpr double kTolOpt = 1e-7;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

struct LinearProgram {
  Eigen::VectorXd cost;
  SparseMatrix A_in;
  Eigen::VectorXd b_in;
  SparseMatrix A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index num_variables() const { return cost.size(); }

  void validate() const {
    const Eigen::Index n = cost.size();
    auto fail = [](const char* msg) { throw DimensionMismatch(std::string("LinearProgram: ") + msg); };
    if (lower.size() != n || upper.size() != n) fail("bound vectors do not match cost length");
    if (A_in.rows() > 0 && A_in.cols() != n) fail("A_in column count does not match cost length");
    if (A_eq.rows() > 0 && A_eq.cols() != n) fail("A_eq column count does not match cost length");
    if (A_in.rows() != b_in.size()) fail("b_in length does not match A_in rows");
    if (A_eq.rows() != b_eq.size()) fail("b_eq length does not match A_eq rows");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
        fail("inconsistent variable bounds");
      if (!std::isfinite(cost[j])) fail("non-finite cost entry");
    }
  }
};

/// Incremental construction of a LinearProgram from sparse rows.
class LpBuilder {
 public:
  using Row = std::vector<std::pair<Eigen::Index, double>>;

  Eigen::Index add_variable(double lower, double upper, double cost = 0.0) {
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    return static_cast<Eigen::Index>(cost_.size()) - 1;
  }

  /// Adds `count` variables with identical bounds, returns the first index.
  Eigen::Index add_variables(Eigen::Index count, double lower, double upper, double cost = 0.0) {
    const auto first = static_cast<Eigen::Index>(cost_.size());
    for (Eigen::Index k = 0; k < count; ++k) add_variable(lower, upper, cost);
    return first;
  }

  void set_cost(Eigen::Index j, double c) { cost_[static_cast<std::size_t>(j)] = c; }

  void add_le(const Row& row, double rhs) { add_row(in_, rhs_in_, row, rhs); }
  void add_ge(const Row& row, double rhs) {
    Row neg = row;
    for (auto& [j, v] : neg) v = -v;
    add_row(in_, rhs_in_, neg, -rhs);
  }
  void add_eq(const Row& row, double rhs) { add_row(eq_, rhs_eq_, row, rhs); }

  Eigen::Index num_variables() const { return static_cast<Eigen::Index>(cost_.size()); }
  Eigen::Index num_inequalities() const { return static_cast<Eigen::Index>(rhs_in_.size()); }

  LinearProgram build() const {
    LinearProgram lp;
    const auto n = num_variables();
    lp.cost = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
    lp.lower = Eigen::Map<const Eigen::VectorXd>(lower_.data(), n);
    lp.upper = Eigen::Map<const Eigen::VectorXd>(upper_.data(), n);
    lp.b_in = Eigen::Map<const Eigen::VectorXd>(rhs_in_.data(), static_cast<Eigen::Index>(rhs_in_.size()));
    lp.b_eq = Eigen::Map<const Eigen::VectorXd>(rhs_eq_.data(), static_cast<Eigen::Index>(rhs_eq_.size()));
    lp.A_in.resize(lp.b_in.size(), n);
    lp.A_in.setFromTriplets(in_.begin(), in_.end());
    lp.A_eq.resize(lp.b_eq.size(), n);
    lp.A_eq.setFromTriplets(eq_.begin(), eq_.end());
    return lp;
  }

 private:
  static void add_row(std::vector<Triplet>& trip, std::vector<double>& rhs, const Row& row, double b) {
    const auto r = static_cast<int>(rhs.size());
    for (const auto& [j, v] : row)
      if (v != 0.0) trip.emplace_back(r, static_cast<int>(j), v);
    rhs.push_back(b);
  }

  std::vector<double> cost_, lower_, upper_;
  std::vector<Triplet> in_, eq_;
  std::vector<double> rhs_in_, rhs_eq_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

/// Row multipliers satisfy cost = A_in' duals_in + A_eq' duals_eq + reduced_costs;
/// at an optimum duals_in <= 0.
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd duals_in;
  Eigen::VectorXd duals_eq;
  Eigen::VectorXd reduced_costs;
  std::int64_t iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

namespace detail {

class RevisedSimplex {
 public:
  explicit RevisedSimplex(const LinearProgram& lp) : lp_(lp) {
    lp.validate();
    n_ = lp.num_variables();
    m_in_ = lp.A_in.rows();
    m_ = m_in_ + lp.A_eq.rows();

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(lp.A_in.nonZeros() + lp.A_eq.nonZeros()));
    for (Eigen::Index j = 0; j < lp.A_in.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(lp.A_in, j); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
    for (Eigen::Index j = 0; j < lp.A_eq.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(lp.A_eq, j); it; ++it)
        trip.emplace_back(static_cast<int>(m_in_ + it.row()), static_cast<int>(j), it.value());
    A_.resize(m_, n_);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();

    b_.resize(m_);
    b_ << lp.b_in, lp.b_eq;
    bscale_ = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
  }

  LpSolution solve() { return solve(lp_.cost); }

  /// Phase 1 runs once; later calls restart phase 2 from the last basis.
  LpSolution solve(const Eigen::VectorXd& cost) {
    if (cost.size() != n_) throw DimensionMismatch("simplex: cost length does not match variables");
    if (!cost.allFinite()) throw DimensionMismatch("simplex: non-finite cost");
    LpSolution sol;
    if (!phase1_done_) {
      setup();
      if (!art_row_.empty()) {
        cost_.setZero(total_);
        for (std::size_t k = 0; k < art_row_.size(); ++k) cost_[art_index(k)] = 1.0;
        iterate();  // phase 1 is bounded below by zero
        double infeas = 0.0;
        for (std::size_t k = 0; k < art_row_.size(); ++k) infeas += std::abs(x_[art_index(k)]);
        if (infeas > kTolFeas * bscale_) {
          infeasible_ = true;
        } else {
          for (std::size_t k = 0; k < art_row_.size(); ++k) {
            const auto j = art_index(k);
            lo_[j] = 0.0;
            hi_[j] = 0.0;
            if (state_[j] != State::Basic) x_[j] = 0.0;
          }
          drive_out_artificials();
        }
      }
      phase1_done_ = true;
    } else {
      iterations_ = 0;
    }
    if (infeasible_) {
      sol.status = LpStatus::Infeasible;
      sol.iterations = iterations_;
      return sol;
    }

    cost_.setZero(total_);
    cost_.head(n_) = cost;
    const bool bounded = iterate();
    sol.iterations = iterations_;
    if (!bounded) {
      sol.status = LpStatus::Unbounded;
      return sol;
    }

    refresh_basic();
    sol.status = LpStatus::Optimal;
    sol.x = x_.head(n_);
    for (Eigen::Index j = 0; j < n_; ++j) sol.x[j] = std::clamp(sol.x[j], lp_.lower[j], lp_.upper[j]);
    sol.objective = cost.dot(sol.x);

    Eigen::VectorXd y = dual_vector();
    sol.duals_in = y.head(m_in_);
    sol.duals_eq = y.tail(m_ - m_in_);
    sol.reduced_costs = cost - A_.transpose() * y;

    check_primal(sol.x);
    return sol;
  }

 private:
  enum class State : std::uint8_t { Basic, AtLower, AtUpper, Free };
  static constexpr Eigen::Index kVerifyAfter = 32;

  Eigen::Index art_index(std::size_t k) const { return n_ + m_in_ + static_cast<Eigen::Index>(k); }

  // Column j of the full matrix [A | I_in | artificials].
  template <class F>
  void for_column(Eigen::Index j, F&& f) const {
    if (j < n_) {
      for (SparseMatrix::InnerIterator it(A_, j); it; ++it) f(it.row(), it.value());
    } else if (j < n_ + m_in_) {
      f(j - n_, 1.0);
    } else {
      const auto k = static_cast<std::size_t>(j - n_ - m_in_);
      f(art_row_[k], art_sign_[k]);
    }
  }

  double column_dot(Eigen::Index j, const Eigen::VectorXd& y) const {
    double s = 0.0;
    for_column(j, [&](Eigen::Index r, double v) { s += v * y[r]; });
    return s;
  }

  void setup() {
    // Structural variables start at a finite bound, or at zero when free.
    const Eigen::Index base = n_ + m_in_;
    std::vector<double> lo(static_cast<std::size_t>(base)), hi(static_cast<std::size_t>(base));
    x_.setZero(base);
    state_.assign(static_cast<std::size_t>(base), State::AtLower);
    for (Eigen::Index j = 0; j < n_; ++j) {
      lo[j] = lp_.lower[j];
      hi[j] = lp_.upper[j];
      if (std::isfinite(lo[j]) && std::isfinite(hi[j]) && lp_.cost[j] < 0.0) {
        // Boxed: start at the bound the cost favours.
        x_[j] = hi[j];
        state_[j] = State::AtUpper;
      } else if (std::isfinite(lo[j])) {
        x_[j] = lo[j];
        state_[j] = State::AtLower;
      } else if (std::isfinite(hi[j])) {
        x_[j] = hi[j];
        state_[j] = State::AtUpper;
      } else {
        x_[j] = 0.0;
        state_[j] = State::Free;
      }
    }
    for (Eigen::Index i = 0; i < m_in_; ++i) {
      lo[n_ + i] = 0.0;
      hi[n_ + i] = kInf;
    }

    Eigen::VectorXd r = b_;
    for (Eigen::Index j = 0; j < n_; ++j)
      if (x_[j] != 0.0) for_column(j, [&](Eigen::Index row, double v) { r[row] -= v * x_[j]; });

    basis_.assign(static_cast<std::size_t>(m_), -1);
    art_row_.clear();
    art_sign_.clear();
    std::vector<double> xb(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i < m_in_ && r[i] >= 0.0) {
        basis_[i] = n_ + i;
        xb[i] = r[i];
      } else {
        art_row_.push_back(i);
        art_sign_.push_back(r[i] >= 0.0 ? 1.0 : -1.0);
        xb[i] = std::abs(r[i]);
      }
    }
    total_ = base + static_cast<Eigen::Index>(art_row_.size());
    x_.conservativeResize(total_);
    lo_.resize(total_);
    hi_.resize(total_);
    for (Eigen::Index j = 0; j < base; ++j) {
      lo_[j] = lo[j];
      hi_[j] = hi[j];
    }
    state_.resize(static_cast<std::size_t>(total_), State::Basic);
    for (std::size_t k = 0; k < art_row_.size(); ++k) {
      const auto j = art_index(k);
      lo_[j] = 0.0;
      hi_[j] = kInf;
      basis_[art_row_[k]] = j;
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      x_[basis_[i]] = xb[i];
      state_[basis_[i]] = State::Basic;
    }
    Binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (std::size_t k = 0; k < art_row_.size(); ++k) Binv_(art_row_[k], art_row_[k]) = art_sign_[k];
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_ + m_in_) Binv_(i, i) = 1.0;
    since_refactor_ = 0;
    iterations_ = 0;
    max_iterations_ = 50 * (m_ + n_) + 1000;
  }

  Eigen::VectorXd dual_vector() const {
    Eigen::VectorXd cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
    return Binv_.transpose() * cb;
  }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i)
      for_column(basis_[i], [&](Eigen::Index r, double v) { B(r, i) = v; });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Binv_ = lu.inverse();
    if (!Binv_.allFinite()) throw NumericalFailure("simplex: singular basis during refactorization");
    Eigen::VectorXd r = b_;
    for (Eigen::Index j = 0; j < total_; ++j)
      if (state_[j] != State::Basic && x_[j] != 0.0)
        for_column(j, [&](Eigen::Index row, double v) { r[row] -= v * x_[j]; });
    const Eigen::VectorXd xb = Binv_ * r;
    for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    since_refactor_ = 0;
  }

  // x_B = B^{-1}(b - N x_N) with the current inverse.
  void refresh_basic() {
    if (m_ == 0) return;
    Eigen::VectorXd r = b_;
    for (Eigen::Index j = 0; j < total_; ++j)
      if (state_[j] != State::Basic && x_[j] != 0.0)
        for_column(j, [&](Eigen::Index row, double v) { r[row] -= v * x_[j]; });
    const Eigen::VectorXd xb = Binv_ * r;
    for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  Eigen::VectorXd ftran(Eigen::Index j) const {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m_);
    for_column(j, [&](Eigen::Index r, double v) { alpha.noalias() += v * Binv_.col(r); });
    return alpha;
  }

  void pivot(Eigen::Index row, Eigen::Index entering, const Eigen::VectorXd& alpha) {
    const double piv = alpha[row];
    Binv_.row(row) /= piv;
    Eigen::VectorXd a = alpha;
    a[row] = 0.0;
    Binv_.noalias() -= a * Binv_.row(row);
    basis_[row] = entering;
    state_[entering] = State::Basic;
    ++since_refactor_;
  }

  // Returns false when the current phase is unbounded.
  bool iterate() {
    int degenerate_run = 0;
    bool bland = false;
    bool verified = false;
    const double cmax = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double dtol = 1e-9 * cmax;
    constexpr double kPivTol = 1e-9;
    const Eigen::Index refactor_every = std::max<Eigen::Index>(64, std::min<Eigen::Index>(m_, 400));

    for (;;) {
      if (iterations_ >= max_iterations_)
        throw NumericalFailure("simplex: iteration limit exceeded");
      if (since_refactor_ >= refactor_every) refactor();

      const Eigen::VectorXd y = dual_vector();

      Eigen::Index q = -1;
      double dir = 0.0;
      double best = 0.0;
      for (Eigen::Index j = 0; j < total_; ++j) {
        const State s = state_[j];
        if (s == State::Basic || hi_[j] - lo_[j] <= 0.0) continue;
        const double d = cost_[j] - column_dot(j, y);
        double score = 0.0;
        double dj = 0.0;
        if ((s == State::AtLower || s == State::Free) && d < -dtol) {
          score = -d;
          dj = 1.0;
        } else if ((s == State::AtUpper || s == State::Free) && d > dtol) {
          score = d;
          dj = -1.0;
        }
        if (dj == 0.0) continue;
        if (bland) {
          q = j;
          dir = dj;
          break;
        }
        if (score > best) {
          best = score;
          q = j;
          dir = dj;
        }
      }

      if (q < 0) {
        if (!verified) {
          // Re-price against a fresh factorization after many updates, otherwise
          // against recomputed basic values.
          if (since_refactor_ > kVerifyAfter) refactor();
          else refresh_basic();
          verified = true;
          continue;
        }
        return true;
      }
      verified = false;

      const Eigen::VectorXd alpha = ftran(q);
      double t_min = kInf;
      if (std::isfinite(lo_[q]) && std::isfinite(hi_[q])) t_min = hi_[q] - lo_[q];
      Eigen::Index leave = -1;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = alpha[i] * dir;
        const Eigen::Index bj = basis_[i];
        double t;
        if (a > kPivTol && std::isfinite(lo_[bj]))
          t = std::max(0.0, x_[bj] - lo_[bj]) / a;
        else if (a < -kPivTol && std::isfinite(hi_[bj]))
          t = std::max(0.0, hi_[bj] - x_[bj]) / -a;
        else
          continue;
        if (t < t_min) t_min = t;
      }
      if (!std::isfinite(t_min)) return false;

      // Among (near-)ties prefer the largest pivot, or the lowest index under Bland.
      const double tie = t_min + 1e-12 * (1.0 + t_min);
      double best_piv = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = alpha[i] * dir;
        const Eigen::Index bj = basis_[i];
        double t;
        if (a > kPivTol && std::isfinite(lo_[bj]))
          t = std::max(0.0, x_[bj] - lo_[bj]) / a;
        else if (a < -kPivTol && std::isfinite(hi_[bj]))
          t = std::max(0.0, hi_[bj] - x_[bj]) / -a;
        else
          continue;
        if (t > tie) continue;
        if (bland) {
          if (leave < 0 || bj < basis_[leave]) leave = i;
        } else if (std::abs(a) > best_piv) {
          best_piv = std::abs(a);
          leave = i;
        }
      }

      ++iterations_;
      double t = t_min;
      if (leave >= 0) {
        const double a = alpha[leave] * dir;
        const Eigen::Index bj = basis_[leave];
        t = a > 0 ? std::max(0.0, x_[bj] - lo_[bj]) / a : std::max(0.0, hi_[bj] - x_[bj]) / -a;
      }

      if (t <= 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      x_[q] += dir * t;
      for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] -= dir * t * alpha[i];

      if (leave < 0) {
        // Bound flip of the entering variable.
        if (dir > 0) {
          x_[q] = hi_[q];
          state_[q] = State::AtUpper;
        } else {
          x_[q] = lo_[q];
          state_[q] = State::AtLower;
        }
        continue;
      }
      const Eigen::Index out = basis_[leave];
      const double a = alpha[leave] * dir;
      if (a > 0) {
        x_[out] = lo_[out];
        state_[out] = State::AtLower;
      } else {
        x_[out] = hi_[out];
        state_[out] = State::AtUpper;
      }
      pivot(leave, q, alpha);
    }
  }

  // Replace basic artificials (all at zero level) by structural or slack columns.
  void drive_out_artificials() {
    const Eigen::Index first_art = n_ + m_in_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < first_art) continue;
      const Eigen::VectorXd rho = Binv_.row(i).transpose();
      Eigen::Index best = -1;
      double best_abs = 1e-7;
      for (Eigen::Index j = 0; j < first_art; ++j) {
        if (state_[j] == State::Basic) continue;
        const double v = std::abs(column_dot(j, rho));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row; artificial stays basic, fixed at zero
      const Eigen::VectorXd alpha = ftran(best);
      const Eigen::Index out = basis_[i];
      x_[out] = 0.0;
      state_[out] = State::AtLower;
      pivot(i, best, alpha);
    }
    refactor();
  }

  void check_primal(const Eigen::VectorXd& x) const {
    double viol = 0.0;
    if (m_in_ > 0) viol = std::max(viol, (lp_.A_in * x - lp_.b_in).maxCoeff());
    if (m_ > m_in_) viol = std::max(viol, (lp_.A_eq * x - lp_.b_eq).cwiseAbs().maxCoeff());
    if (!(viol <= 1e-6 * bscale_))
      throw NumericalFailure("simplex: final primal residual " + std::to_string(viol) + " exceeds tolerance");
  }

  const LinearProgram& lp_;
  Eigen::Index n_ = 0, m_in_ = 0, m_ = 0, total_ = 0;
  SparseMatrix A_;
  Eigen::VectorXd b_;
  double bscale_ = 1.0;

  Eigen::VectorXd cost_, x_, lo_, hi_;
  std::vector<State> state_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> art_row_;
  std::vector<double> art_sign_;
  Eigen::MatrixXd Binv_;
  Eigen::Index since_refactor_ = 0;
  std::int64_t iterations_ = 0;
  std::int64_t max_iterations_ = 0;
  bool phase1_done_ = false;
  bool infeasible_ = false;
};

}  // namespace detail

/// Solves `lp` to optimality, or reports infeasibility / unboundedness.
/// Throws NumericalFailure when iteration or conditioning limits are hit.
inline LpSolution solve_lp(const LinearProgram& lp) {
  detail::RevisedSimplex simplex(lp);
  return simplex.solve();
}

/// One constraint set, many objectives: each solve warm-starts from the
/// previous optimal basis.
class LpSession {
 public:
  explicit LpSession(LinearProgram lp)
      : lp_(std::make_unique<LinearProgram>(std::move(lp))), simplex_(std::make_unique<detail::RevisedSimplex>(*lp_)) {}

  LpSolution solve(const Eigen::VectorXd& cost) { return simplex_->solve(cost); }
  Eigen::Index num_variables() const { return lp_->num_variables(); }

 private:
  std::unique_ptr<LinearProgram> lp_;
  std::unique_ptr<detail::RevisedSimplex> simplex_;
};

}  // namespace flexpool::optim
