#pragma once

// Halfspace descriptions A p <= b of resource feasible sets in power space,
// built from power, cumulative-energy, ramp and linear state constraints.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"

namespace flexpool {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Power and cumulative-energy limits of a PE-system over N steps of t_s hours.
struct PeParams {
  Index N = 0;
  double t_s = 1.0;
  VectorXd p_lo, p_hi;  // kW
  VectorXd e_lo, e_hi;  // kWh
  double e0 = 0.0;      // kWh

  void validate() const {
    if (N < 1) throw DimensionMismatch("PeParams: N must be positive");
    if (!(t_s > 0.0)) throw DimensionMismatch("PeParams: t_s must be positive");
    if (p_lo.size() != N || p_hi.size() != N || e_lo.size() != N || e_hi.size() != N)
      throw DimensionMismatch("PeParams: bound vectors must have length N");
    for (Index k = 0; k < N; ++k) {
      if (std::isnan(p_lo[k]) || std::isnan(p_hi[k]) || p_lo[k] > p_hi[k])
        throw EmptyPolytope("PeParams: p_lo > p_hi at step " + std::to_string(k + 1));
      if (std::isnan(e_lo[k]) || std::isnan(e_hi[k]) || e_lo[k] > e_hi[k])
        throw EmptyPolytope("PeParams: e_lo > e_hi at step " + std::to_string(k + 1));
    }
    if (!std::isfinite(e0)) throw DimensionMismatch("PeParams: e0 must be finite");
  }
};

/// Ramp limits in kW/h for the N-1 transitions k = 2..N.
struct RampParams {
  VectorXd r_lo, r_hi;
};

/// x_{k+1} = A_k x_k + B_k u_k + C_k p_k for k = 1..K (K <= N), with bounds on
/// x_{k+1}. B/u may be left empty when there is no exogenous input.
struct StateModel {
  std::vector<MatrixXd> A, B, C;
  std::vector<VectorXd> u;
  VectorXd x1;
  std::vector<VectorXd> x_lo, x_hi;

  Index steps() const { return static_cast<Index>(A.size()); }
};

struct HPolytope {
  MatrixXd A;
  VectorXd b;
  Index N = 0;

  Index rows() const { return A.rows(); }

  void validate() const {
    if (A.cols() != N || A.rows() != b.size()) throw DimensionMismatch("HPolytope: inconsistent shapes");
    if (!A.allFinite() || !b.allFinite()) throw DimensionMismatch("HPolytope: non-finite entries");
  }
};

namespace detail {

// Collects rows a'p <= rhs, skipping rows whose rhs is +inf.
class RowSink {
 public:
  explicit RowSink(Index n) : n_(n) {}

  void le(const VectorXd& a, double rhs) {
    if (rhs == optim::kInf) return;
    if (std::isnan(rhs) || rhs == -optim::kInf)
      throw EmptyPolytope("constraint with right-hand side " + std::to_string(rhs));
    rows_.emplace_back(a, rhs);
  }

  void append_to(HPolytope& P) const {
    const Index m0 = P.A.rows();
    const auto extra = static_cast<Index>(rows_.size());
    P.A.conservativeResize(m0 + extra, n_);
    P.b.conservativeResize(m0 + extra);
    for (Index r = 0; r < extra; ++r) {
      P.A.row(m0 + r) = rows_[static_cast<std::size_t>(r)].first.transpose();
      P.b[m0 + r] = rows_[static_cast<std::size_t>(r)].second;
    }
  }

 private:
  Index n_;
  std::vector<std::pair<VectorXd, double>> rows_;
};

inline double scaled_tol(double rhs) { return optim::kTolFeas * std::max(1.0, std::abs(rhs)); }

inline Index add_polytope_rows(optim::LpBuilder& lp, const HPolytope& P, Index offset) {
  for (Index r = 0; r < P.rows(); ++r) {
    optim::LpBuilder::Row row;
    for (Index k = 0; k < P.N; ++k)
      if (P.A(r, k) != 0.0) row.emplace_back(offset + k, P.A(r, k));
    lp.add_le(row, P.b[r]);
  }
  return P.rows();
}

inline void require_nonempty(const HPolytope& P, const char* who) {
  optim::LpBuilder lp;
  lp.add_variables(P.N, -optim::kInf, optim::kInf);
  add_polytope_rows(lp, P, 0);
  if (optim::solve_lp(lp.build()).status == optim::LpStatus::Infeasible)
    throw EmptyPolytope(std::string(who) + ": feasible set is empty");
}

}  // namespace detail

/// Power rows for every step followed by the cumulative-energy pair for every
/// step (including k = N). Rows with infinite bounds are dropped.
inline HPolytope build_pe_polytope(const PeParams& params) {
  params.validate();
  const Index N = params.N;
  detail::RowSink sink(N);
  for (Index k = 0; k < N; ++k) {
    const VectorXd e = VectorXd::Unit(N, k);
    sink.le(e, params.p_hi[k]);
    sink.le(-e, -params.p_lo[k]);
  }
  for (Index k = 0; k < N; ++k) {
    VectorXd a = VectorXd::Zero(N);
    a.head(k + 1).setConstant(params.t_s);
    sink.le(a, params.e_hi[k] - params.e0);
    sink.le(-a, params.e0 - params.e_lo[k]);
  }
  HPolytope P;
  P.N = N;
  P.A.resize(0, N);
  P.b.resize(0);
  sink.append_to(P);
  detail::require_nonempty(P, "build_pe_polytope");
  return P;
}

inline HPolytope add_ramp_constraints(const HPolytope& P, const RampParams& ramp, double t_s) {
  const Index N = P.N;
  if (ramp.r_lo.size() != std::max<Index>(N - 1, 0) || ramp.r_hi.size() != ramp.r_lo.size())
    throw DimensionMismatch("add_ramp_constraints: expected N-1 ramp bound pairs");
  if (!(t_s > 0.0)) throw DimensionMismatch("add_ramp_constraints: t_s must be positive");
  detail::RowSink sink(N);
  for (Index k = 1; k < N; ++k) {
    if (ramp.r_lo[k - 1] > ramp.r_hi[k - 1]) throw EmptyPolytope("add_ramp_constraints: r_lo > r_hi");
    VectorXd a = VectorXd::Zero(N);
    a[k] = 1.0;
    a[k - 1] = -1.0;
    sink.le(a, t_s * ramp.r_hi[k - 1]);
    sink.le(-a, -t_s * ramp.r_lo[k - 1]);
  }
  HPolytope out = P;
  sink.append_to(out);
  if (out.rows() != P.rows()) detail::require_nonempty(out, "add_ramp_constraints");
  return out;
}

/// Eliminates the states by forward rollout: x_{k+1} = s_k + M_k p with
/// s_{k+1} = A_k s_k + B_k u_k and M_{k+1} = A_k M_k + C_k e_k'.
inline HPolytope add_state_constraints(const HPolytope& P, const StateModel& model) {
  const Index N = P.N;
  const Index K = model.steps();
  const Index nx = model.x1.size();
  if (K < 1 || K > N) throw DimensionMismatch("add_state_constraints: model must span 1..N steps");
  auto sz = [](const auto& v) { return static_cast<Index>(v.size()); };
  if (sz(model.C) != K || sz(model.x_lo) != K || sz(model.x_hi) != K)
    throw DimensionMismatch("add_state_constraints: per-step vectors must have one entry per step");
  const bool has_input = !model.B.empty();
  if (has_input && (sz(model.B) != K || sz(model.u) != K))
    throw DimensionMismatch("add_state_constraints: B and u must have one entry per step");

  VectorXd s = model.x1;
  MatrixXd M = MatrixXd::Zero(nx, N);
  detail::RowSink sink(N);
  for (Index k = 0; k < K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const MatrixXd& A = model.A[ks];
    const MatrixXd& C = model.C[ks];
    if (A.rows() != nx || A.cols() != nx || C.rows() != nx || C.cols() != 1 ||
        model.x_lo[ks].size() != nx || model.x_hi[ks].size() != nx)
      throw DimensionMismatch("add_state_constraints: inconsistent matrix sizes at step " + std::to_string(k + 1));
    s = A * s;
    if (has_input) {
      if (model.B[ks].rows() != nx || model.B[ks].cols() != model.u[ks].size())
        throw DimensionMismatch("add_state_constraints: B/u mismatch at step " + std::to_string(k + 1));
      s += model.B[ks] * model.u[ks];
    }
    M = A * M;
    M.col(k) += C.col(0);
    for (Index r = 0; r < nx; ++r) {
      if (model.x_lo[ks][r] > model.x_hi[ks][r]) throw EmptyPolytope("add_state_constraints: x_lo > x_hi");
      sink.le(M.row(r).transpose(), model.x_hi[ks][r] - s[r]);
      sink.le(-M.row(r).transpose(), s[r] - model.x_lo[ks][r]);
    }
  }
  HPolytope out = P;
  sink.append_to(out);
  detail::require_nonempty(out, "add_state_constraints");
  return out;
}

/// A p <= b within tol_feas, scaled by max(1, |b_r|) per row.
inline bool contains(const HPolytope& P, const VectorXd& p) {
  if (p.size() != P.N) throw DimensionMismatch("contains: dimension mismatch");
  const VectorXd lhs = P.A * p;
  for (Index r = 0; r < P.rows(); ++r)
    if (lhs[r] > P.b[r] + detail::scaled_tol(P.b[r])) return false;
  return true;
}

/// max f'p - min f'p over P.
namespace detail {

// Session over { p : A p <= b } for repeated support queries. Single-variable
// rows become variable bounds, which keeps the basis small.
inline optim::LpSession support_session(const HPolytope& P) {
  VectorXd lo = VectorXd::Constant(P.N, -optim::kInf);
  VectorXd hi = VectorXd::Constant(P.N, optim::kInf);
  std::vector<Index> general;
  for (Index r = 0; r < P.rows(); ++r) {
    Index nnz = 0, col = -1;
    for (Index k = 0; k < P.N; ++k)
      if (P.A(r, k) != 0.0) {
        ++nnz;
        col = k;
      }
    if (nnz != 1) {
      general.push_back(r);
      continue;
    }
    const double a = P.A(r, col);
    if (a > 0.0) hi[col] = std::min(hi[col], P.b[r] / a);
    else lo[col] = std::max(lo[col], P.b[r] / a);
  }
  for (Index k = 0; k < P.N; ++k) {
    if (lo[k] > hi[k] + scaled_tol(hi[k])) throw EmptyPolytope("support_width: empty polytope");
    if (lo[k] > hi[k]) lo[k] = hi[k];
  }
  optim::LpBuilder lp;
  for (Index k = 0; k < P.N; ++k) lp.add_variable(lo[k], hi[k]);
  for (const Index r : general) {
    optim::LpBuilder::Row row;
    for (Index k = 0; k < P.N; ++k)
      if (P.A(r, k) != 0.0) row.emplace_back(k, P.A(r, k));
    lp.add_le(row, P.b[r]);
  }
  return optim::LpSession(lp.build());
}

inline double support_width(optim::LpSession& session, const VectorXd& f) {
  double value[2];
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? -1.0 : 1.0;
    const auto sol = session.solve(sign * f);
    if (sol.status == optim::LpStatus::Infeasible) throw EmptyPolytope("support_width: empty polytope");
    if (sol.status == optim::LpStatus::Unbounded) throw UnboundedError("support_width: unbounded along f");
    value[side] = sign * sol.objective;
  }
  return std::max(0.0, value[0] - value[1]);
}

}  // namespace detail

inline double support_width(const HPolytope& P, const VectorXd& f) {
  if (f.size() != P.N) throw DimensionMismatch("support_width: dimension mismatch");
  auto session = detail::support_session(P);
  return detail::support_width(session, f);
}

struct Cube {
  VectorXd center;
  double half_edge = 0.0;
};

struct Box {
  VectorXd lo, hi;
};

/// Largest axis-aligned cube inside P: max r s.t. A c + |A| 1 r <= b.
inline Cube max_inscribed_cube(const HPolytope& P) {
  const Index N = P.N;
  optim::LpBuilder lp;
  lp.add_variables(N, -optim::kInf, optim::kInf);
  const Index r = lp.add_variable(0.0, optim::kInf, -1.0);
  for (Index row = 0; row < P.rows(); ++row) {
    optim::LpBuilder::Row a;
    double abs_sum = 0.0;
    for (Index k = 0; k < N; ++k) {
      if (P.A(row, k) != 0.0) a.emplace_back(k, P.A(row, k));
      abs_sum += std::abs(P.A(row, k));
    }
    a.emplace_back(r, abs_sum);
    lp.add_le(a, P.b[row]);
  }
  const auto sol = optim::solve_lp(lp.build());
  if (sol.status == optim::LpStatus::Infeasible) throw EmptyPolytope("max_inscribed_cube: empty polytope");
  if (sol.status == optim::LpStatus::Unbounded) throw UnboundedError("max_inscribed_cube: unbounded polytope");
  return {sol.x.head(N), sol.x[r]};
}

/// Box of maximum edge sum with cube ⊆ box ⊆ P. Row a: max(a,0)'hi + min(a,0)'lo <= b.
inline Box max_inscribed_box(const HPolytope& P, const Cube& cube) {
  const Index N = P.N;
  if (cube.center.size() != N) throw DimensionMismatch("max_inscribed_box: dimension mismatch");
  optim::LpBuilder lp;
  for (Index k = 0; k < N; ++k) lp.add_variable(-optim::kInf, cube.center[k] - cube.half_edge, 1.0);
  for (Index k = 0; k < N; ++k) lp.add_variable(cube.center[k] + cube.half_edge, optim::kInf, -1.0);
  for (Index row = 0; row < P.rows(); ++row) {
    optim::LpBuilder::Row a;
    for (Index k = 0; k < N; ++k) {
      const double v = P.A(row, k);
      if (v < 0.0) a.emplace_back(k, v);
      if (v > 0.0) a.emplace_back(N + k, v);
    }
    lp.add_le(a, P.b[row]);
  }
  const auto sol = optim::solve_lp(lp.build());
  if (sol.status == optim::LpStatus::Infeasible) throw EmptyPolytope("max_inscribed_box: cube not inside polytope");
  if (sol.status == optim::LpStatus::Unbounded) throw UnboundedError("max_inscribed_box: unbounded polytope");
  return {sol.x.head(N), sol.x.tail(N)};
}

}  // namespace flexpool
