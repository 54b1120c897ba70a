#pragma once

// Symmetric regulation power: the largest cube that fits into the aggregate
// feasible set, the cheapest baseline that keeps a given share of it reserved,
// and the resulting bid curve R(r) - R(0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/costs.hpp"
#include "flexpool/disagg.hpp"
#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"
#include "flexpool/parallel.hpp"
#include "flexpool/polytope.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool {

struct CapacityResult {
  double r_max = 0.0;
  std::vector<VectorXd> beta_max;  // per system
};

namespace detail {

inline void check_fleet(const std::vector<Zonotope>& zs, const char* who) {
  if (zs.empty()) throw DimensionMismatch(std::string(who) + ": no systems");
  for (const auto& z : zs)
    if (z.family != zs.front().family || z.N() != zs.front().N())
      throw FamilyMismatch(std::string(who) + ": systems differ in family or horizon");
}

inline optim::LpSolution solve_or_throw(const optim::LinearProgram& lp, const char* who) {
  auto sol = optim::solve_lp(lp);
  if (sol.status == optim::LpStatus::Infeasible) throw InfeasibleError(std::string(who) + ": infeasible");
  if (sol.status == optim::LpStatus::Unbounded) throw UnboundedError(std::string(who) + ": unbounded");
  return sol;
}

}  // namespace detail

/// max r s.t. G beta^(j) >= 0, G sum_j beta^(j) >= r 1, |beta^(j)| <= betabar^(j).
inline CapacityResult max_capacity_zono(const std::vector<Zonotope>& zs) {
  detail::check_fleet(zs, "max_capacity_zono");
  const Index N = zs.front().N(), g = zs.front().g();
  const MatrixXd& G = zs.front().data()->G;
  optim::LpBuilder lp;
  std::vector<Index> first;
  for (const auto& z : zs) {
    first.push_back(lp.num_variables());
    for (Index i = 0; i < g; ++i) lp.add_variable(-z.betabar[i], z.betabar[i]);
  }
  const Index r = lp.add_variable(0.0, optim::kInf, -1.0);
  for (const Index f : first)
    for (Index k = 0; k < N; ++k) {
      optim::LpBuilder::Row row;
      for (Index i = 0; i < g; ++i)
        if (G(k, i) != 0.0) row.emplace_back(f + i, G(k, i));
      lp.add_ge(row, 0.0);
    }
  for (Index k = 0; k < N; ++k) {
    optim::LpBuilder::Row row;
    for (const Index f : first)
      for (Index i = 0; i < g; ++i)
        if (G(k, i) != 0.0) row.emplace_back(f + i, G(k, i));
    row.emplace_back(r, -1.0);
    lp.add_ge(row, 0.0);
  }
  const auto sol = detail::solve_or_throw(lp.build(), "max_capacity_zono");
  CapacityResult out;
  out.r_max = std::max(0.0, sol.x[r]);
  for (std::size_t j = 0; j < zs.size(); ++j) {
    VectorXd b = sol.x.segment(first[j], g);
    out.beta_max.push_back(b.cwiseMax(-zs[j].betabar).cwiseMin(zs[j].betabar));
  }
  return out;
}

namespace detail {

// Variables p^(j) (free) and r^(j) >= 0 per system with A p + |A| r <= b, plus
// sum_j r^(j) >= r_bar 1. Returns the index of the first p variable per system.
inline std::vector<Index> add_box_in_polytope(optim::LpBuilder& lp, const std::vector<HPolytope>& ps) {
  std::vector<Index> first;
  for (const auto& P : ps) {
    const Index f = lp.add_variables(P.N, -optim::kInf, optim::kInf);
    lp.add_variables(P.N, 0.0, optim::kInf);
    first.push_back(f);
    for (Index row = 0; row < P.rows(); ++row) {
      optim::LpBuilder::Row a;
      for (Index k = 0; k < P.N; ++k)
        if (P.A(row, k) != 0.0) {
          a.emplace_back(f + k, P.A(row, k));
          a.emplace_back(f + P.N + k, std::abs(P.A(row, k)));
        }
      lp.add_le(a, P.b[row]);
    }
  }
  return first;
}

inline void check_polytopes(const std::vector<HPolytope>& ps, const char* who) {
  if (ps.empty()) throw DimensionMismatch(std::string(who) + ": no systems");
  for (const auto& P : ps)
    if (P.N != ps.front().N) throw DimensionMismatch(std::string(who) + ": systems differ in horizon");
}

}  // namespace detail

/// max r s.t. B(p^(j), r^(j)) inside P^(j), r^(j) >= 0, sum_j r^(j) >= r 1.
inline double max_capacity_poly(const std::vector<HPolytope>& ps) {
  detail::check_polytopes(ps, "max_capacity_poly");
  const Index N = ps.front().N;
  optim::LpBuilder lp;
  const auto first = detail::add_box_in_polytope(lp, ps);
  const Index r = lp.add_variable(0.0, optim::kInf, -1.0);
  for (Index k = 0; k < N; ++k) {
    optim::LpBuilder::Row row;
    for (const Index f : first) row.emplace_back(f + N + k, 1.0);
    row.emplace_back(r, -1.0);
    lp.add_ge(row, 0.0);
  }
  const auto sol = detail::solve_or_throw(lp.build(), "max_capacity_poly");
  return std::max(0.0, sol.x[r]);
}

/// Adds t_s vhat'(c_agg + G beta) to an aggregate cost. Each generator's slopes
/// move by the same amount, so the merged order is unchanged.
inline AggregateCost with_energy_price(const AggregateCost& ac, const Zonotope& Zagg, const VectorXd& vhat, double t_s) {
  if (vhat.size() != Zagg.N()) throw DimensionMismatch("with_energy_price: price length must equal N");
  if (ac.g() != Zagg.g()) throw DimensionMismatch("with_energy_price: generator count mismatch");
  const MatrixXd& G = Zagg.data()->G;
  AggregateCost out = ac;
  out.t_fix += t_s * vhat.dot(Zagg.c);
  for (Index i = 0; i < out.g(); ++i) {
    const double shift = t_s * vhat.dot(G.col(i));
    for (auto& seg : out.lists[static_cast<std::size_t>(i)]) seg.slope += shift;
    out.anchors[i] -= shift * out.betabar[i];
    detail::build_prefix(out, i);
  }
  return out;
}

struct BaselineResult {
  double eta = 0.0;
  double r = 0.0;             // reserved regulation power eta * r_max
  VectorXd beta_agg;          // minimizer within the remainder box
  VectorXd baseline;          // c_agg + G beta_agg
  double cost = 0.0;          // sum_j T^(j) + t_s vhat'p at the baseline
  std::int64_t iterations = 0;
  bool hit_max_iters = false;
};

/// Remainder half-widths sum_j (betabar^(j) - eta |beta_max^(j)|).
inline VectorXd remainder_box(const std::vector<Zonotope>& zs, const CapacityResult& cap, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("remainder_box: eta must lie in [0, 1]");
  if (cap.beta_max.size() != zs.size()) throw DimensionMismatch("remainder_box: capacity result does not match fleet");
  VectorXd R = VectorXd::Zero(zs.front().g());
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const VectorXd rem = zs[j].betabar - eta * cap.beta_max[j].cwiseAbs();
    for (Index i = 0; i < rem.size(); ++i)
      if (rem[i] < -detail::scaled_tol(zs[j].betabar[i]))
        throw EmptyRemainder("remainder_box: reservation exceeds betabar for system " + std::to_string(j));
    R += rem.cwiseMax(0.0);
  }
  return R;
}

/// Cheapest aggregate baseline with eta * r_max reserved: min T_agg(beta) +
/// t_s vhat'(c_agg + G beta) over |beta| <= remainder box, by projected subgradient
/// with clamping as the projection. `ac` is the merged T^(j) without vhat. The
/// default step numerator is mean(R) / |subgradient at 0|_inf.
inline BaselineResult baseline_cost_zono(const std::vector<Zonotope>& zs, const AggregateCost& ac,
                                         const CapacityResult& cap, double eta, const VectorXd& vhat, double t_s,
                                         const SubgradientParams& params = {}) {
  detail::check_fleet(zs, "baseline_cost_zono");
  params.validate();
  const Zonotope Zagg = minkowski_sum(zs);
  detail::check_cost_domain(Zagg, ac);
  const AggregateCost priced = with_energy_price(ac, Zagg, vhat, t_s);
  const VectorXd R = remainder_box(zs, cap, eta).cwiseMin(Zagg.betabar);
  auto clamp = [&](const VectorXd& x) { return VectorXd(x.cwiseMax(-R).cwiseMin(R)); };
  const VectorXd beta0 = VectorXd::Zero(Zagg.g());
  double a = params.a;
  if (!(a > 0.0)) {
    // Prices are small per kWh; scale the step so the first move spans the box.
    const double slope = subgradient_at(priced, beta0).cwiseAbs().maxCoeff();
    a = detail::default_step(params, R) / (slope > 0.0 ? slope : 1.0);
  }
  const auto sg = detail::subgradient_core(priced, beta0, a, params, clamp);
  BaselineResult out;
  out.eta = eta;
  out.r = eta * cap.r_max;
  out.beta_agg = sg.beta;
  out.baseline = Zagg.c + Zagg.data()->G * sg.beta;
  out.cost = sg.objective;
  out.iterations = sg.iterations;
  out.hit_max_iters = sg.hit_max_iters;
  return out;
}

/// Exact minimum of sum_j t_s (vhat - v^(j))'p^(j) subject to boxes B(p^(j), r^(j))
/// inside P^(j) and sum_j r^(j) >= r_target 1. `contract` holds v^(j) (empty: zero).
inline double baseline_cost_poly_oracle(const std::vector<HPolytope>& ps, const std::vector<VectorXd>& contract,
                                        const VectorXd& vhat, double t_s, double r_target) {
  detail::check_polytopes(ps, "baseline_cost_poly_oracle");
  const Index N = ps.front().N;
  if (vhat.size() != N) throw DimensionMismatch("baseline_cost_poly_oracle: price length must equal N");
  if (!contract.empty() && contract.size() != ps.size())
    throw DimensionMismatch("baseline_cost_poly_oracle: one contract price vector per system required");
  if (!(r_target >= 0.0)) throw ConfigError("baseline_cost_poly_oracle: r_target must be >= 0");
  optim::LpBuilder lp;
  const auto first = detail::add_box_in_polytope(lp, ps);
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const VectorXd w = contract.empty() ? vhat : VectorXd(vhat - contract[j]);
    for (Index k = 0; k < N; ++k) lp.set_cost(first[j] + k, t_s * w[k]);
  }
  for (Index k = 0; k < N; ++k) {
    optim::LpBuilder::Row row;
    for (const Index f : first) row.emplace_back(f + N + k, 1.0);
    lp.add_ge(row, r_target);
  }
  return detail::solve_or_throw(lp.build(), "baseline_cost_poly_oracle").objective;
}

/// Exact minimizer of the same problem. The box makes it separable: per generator
/// the optimum sits where the merged slopes turn non-negative, clamped to [-R, R].
inline BaselineResult baseline_cost_zono_exact(const std::vector<Zonotope>& zs, const AggregateCost& ac,
                                               const CapacityResult& cap, double eta, const VectorXd& vhat,
                                               double t_s) {
  detail::check_fleet(zs, "baseline_cost_zono_exact");
  const Zonotope Zagg = minkowski_sum(zs);
  detail::check_cost_domain(Zagg, ac);
  const AggregateCost priced = with_energy_price(ac, Zagg, vhat, t_s);
  const VectorXd R = remainder_box(zs, cap, eta).cwiseMin(Zagg.betabar);
  VectorXd beta(Zagg.g());
  for (Index i = 0; i < beta.size(); ++i) {
    double pos = 0.0;
    for (const auto& seg : priced.lists[static_cast<std::size_t>(i)]) {
      if (seg.slope >= 0.0) break;
      pos += seg.length;
    }
    beta[i] = std::clamp(pos - priced.betabar[i], -R[i], R[i]);
  }
  BaselineResult out;
  out.eta = eta;
  out.r = eta * cap.r_max;
  out.beta_agg = beta;
  out.baseline = Zagg.c + Zagg.data()->G * beta;
  out.cost = eval_aggregate(priced, beta);
  return out;
}

struct BidPoint {
  double eta = 0.0;
  double r = 0.0;
  double baseline_cost = 0.0;
  double offer_cost = 0.0;
  std::int64_t iterations = 0;
};

struct BidCurve {
  double r_max = 0.0;
  std::vector<BidPoint> points;
};

/// One baseline per eta; offer cost is R(eta r_max) - R(0).
inline BidCurve bid_curve(const std::vector<Zonotope>& zs, const AggregateCost& ac, const VectorXd& vhat, double t_s,
                          const std::vector<double>& eta_grid, const SubgradientParams& params = {},
                          unsigned threads = 1) {
  if (eta_grid.empty()) throw ConfigError("bid_curve: empty eta grid");
  for (std::size_t k = 0; k < eta_grid.size(); ++k) {
    if (!(eta_grid[k] >= 0.0 && eta_grid[k] <= 1.0)) throw ConfigError("bid_curve: eta values must lie in [0, 1]");
    if (k > 0 && !(eta_grid[k] > eta_grid[k - 1])) throw ConfigError("bid_curve: eta grid must be strictly ascending");
  }
  const CapacityResult cap = max_capacity_zono(zs);
  std::vector<double> etas = eta_grid;
  const bool has_zero = etas.front() == 0.0;
  if (!has_zero) etas.insert(etas.begin(), 0.0);
  std::vector<BaselineResult> res(etas.size());
  parallel_for(static_cast<std::ptrdiff_t>(etas.size()), threads, [&](std::ptrdiff_t k) {
    res[static_cast<std::size_t>(k)] = baseline_cost_zono(zs, ac, cap, etas[static_cast<std::size_t>(k)], vhat, t_s, params);
  });
  BidCurve curve;
  curve.r_max = cap.r_max;
  for (std::size_t k = has_zero ? 0 : 1; k < res.size(); ++k)
    curve.points.push_back({res[k].eta, res[k].r, res[k].cost, res[k].cost - res[0].cost, res[k].iterations});
  return curve;
}

}  // namespace flexpool
