#pragma once

// Disaggregation of an aggregate trajectory over zonotopic feasible sets:
// projected subgradient on the aggregate cost in generator coordinates, the
// slope-ordered distribution to systems, and an exact LP for comparison.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/costs.hpp"
#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"
#include "flexpool/parallel.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool {

struct SubgradientParams {
  double a = 0.0;  // step numerator; 0 selects sum(betabar_agg)/g
  int h = 5;
  double eps = 1e-3;
  std::int64_t max_iters = 100000;
  double eps_div_guard = 1e-9;

  void validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("SubgradientParams: a must be >= 0 (0 = default)");
    if (h < 1) throw ConfigError("SubgradientParams: h must be >= 1");
    if (!(eps > 0.0)) throw ConfigError("SubgradientParams: eps must be positive");
    if (max_iters < 1) throw ConfigError("SubgradientParams: max_iters must be positive");
    if (!(eps_div_guard > 0.0)) throw ConfigError("SubgradientParams: eps_div_guard must be positive");
  }
};

struct SubgradientResult {
  VectorXd beta;  // best iterate
  double objective = 0.0;
  std::int64_t iterations = 0;
  bool hit_max_iters = false;
  double a = 0.0;
  std::vector<double> history;  // best value V(1), V(2), ...
};

namespace detail {

inline void check_target(const Zonotope& Zagg, const VectorXd& p_agg) {
  if (p_agg.size() != Zagg.N()) throw DimensionMismatch("disaggregate: p_agg length must equal N");
  if (!p_agg.allFinite()) throw DimensionMismatch("disaggregate: non-finite p_agg");
  if (const auto facet = first_violated_facet(Zagg, p_agg))
    throw InfeasibleTarget("disaggregate: p_agg lies outside the aggregate zonotope (facet direction " +
                               std::to_string(*facet) + ")",
                           static_cast<std::size_t>(*facet));
}

inline void check_cost_domain(const Zonotope& Zagg, const AggregateCost& ac) {
  if (ac.g() != Zagg.g()) throw DimensionMismatch("disaggregate: cost and zonotope differ in generator count");
  for (Index i = 0; i < ac.g(); ++i)
    if (std::abs(ac.betabar[i] - Zagg.betabar[i]) > 1e-9 * std::max(1.0, Zagg.betabar[i]))
      throw DimensionMismatch("disaggregate: aggregate cost domain differs from the aggregate betabar");
}

}  // namespace detail

namespace detail {

// Projected subgradient from a feasible beta0 with step a/(k+1). Keeps the best
// evaluated iterate; stops when (V(k-h) - V(k)) / max(|V(k)|, guard) <= eps.
template <class Project>
SubgradientResult subgradient_core(const AggregateCost& ac, VectorXd beta, double a, const SubgradientParams& params,
                                   Project&& project) {
  SubgradientResult res;
  res.a = a;
  std::vector<double> V{std::numeric_limits<double>::infinity()};
  std::int64_t k = 0;
  for (;;) {
    const double W = eval_aggregate(ac, beta);
    const VectorXd grad = subgradient_at(ac, beta);
    if (W < V.back()) res.beta = beta;
    V.push_back(std::min(V.back(), W));
    ++k;
    const double prev = V[static_cast<std::size_t>(std::max<std::int64_t>(0, k - params.h))];
    const double cur = V.back();
    if ((prev - cur) / std::max(std::abs(cur), params.eps_div_guard) <= params.eps) break;
    if (k >= params.max_iters) {
      res.hit_max_iters = true;
      break;
    }
    beta = project(VectorXd(beta - (a / static_cast<double>(k)) * grad));
  }
  res.iterations = k;
  res.objective = V.back();
  res.history.assign(V.begin() + 1, V.end());
  return res;
}

// a = sum(bounds)/g unless overridden; 1 when every bound is zero.
inline double default_step(const SubgradientParams& params, const VectorXd& bounds) {
  if (params.a > 0.0) return params.a;
  const double a = bounds.size() > 0 ? bounds.sum() / static_cast<double>(bounds.size()) : 0.0;
  return a > 0.0 ? a : 1.0;
}

}  // namespace detail

/// min T_agg(beta) s.t. G beta = p_agg - c, |beta| <= betabar, by projected
/// subgradient started from the projection of zero.
inline SubgradientResult disaggregate_subgradient(const VectorXd& p_agg, const Zonotope& Zagg,
                                                  const AggregateCost& ac, const SubgradientParams& params = {}) {
  params.validate();
  detail::check_target(Zagg, p_agg);
  detail::check_cost_domain(Zagg, ac);
  const auto fam = Zagg.data();
  const VectorXd d = p_agg - Zagg.c;
  const VectorXd& bb = Zagg.betabar;
  const VectorXd beta0 = fam->projector.project(d, bb, VectorXd::Zero(Zagg.g()));
  return detail::subgradient_core(ac, beta0, detail::default_step(params, bb), params,
                                  [&](const VectorXd& x) { return fam->projector.project(d, bb, x); });
}

/// Splits beta_agg over systems: per generator, merged segments are consumed from
/// the left up to betabar_agg + beta_agg, each system starting at -betabar^(j).
/// Returns a g x J matrix, column j for system j.
inline MatrixXd distribute(const VectorXd& beta_agg, const std::vector<VectorXd>& betabars, const AggregateCost& ac,
                           unsigned threads = 1) {
  const Index g = ac.g();
  const Index J = static_cast<Index>(betabars.size());
  if (J != ac.systems) throw DimensionMismatch("distribute: one betabar per system required");
  detail::check_beta(ac, beta_agg, "distribute");
  MatrixXd B(g, J);
  for (Index j = 0; j < J; ++j) {
    if (betabars[static_cast<std::size_t>(j)].size() != g) throw DimensionMismatch("distribute: betabar length mismatch");
    B.col(j) = -betabars[static_cast<std::size_t>(j)];
  }
  parallel_for(g, threads, [&](std::ptrdiff_t i) {
    const auto& L = ac.lists[static_cast<std::size_t>(i)];
    if (L.empty()) return;
    double remaining = std::clamp(ac.betabar[i] + beta_agg[i], 0.0, ac.cum_len[static_cast<std::size_t>(i)].back());
    Index boundary = L.front().system;
    for (const auto& seg : L) {
      if (remaining <= 0.0) break;
      const double take = std::min(seg.length, remaining);
      B(i, seg.system) += take;
      remaining -= take;
      boundary = seg.system;
    }
    // Absorb the rounding residual of the sum in the boundary system.
    double sum = 0.0;
    for (Index j = 0; j < J; ++j) sum += B(i, j);
    const double bj = betabars[static_cast<std::size_t>(boundary)][i];
    B(i, boundary) = std::clamp(B(i, boundary) + (beta_agg[i] - sum), -bj, bj);
  });
  return B;
}

/// p^(j) = c^(j) + G beta^(j); N x J.
inline MatrixXd betas_to_trajectories(const std::vector<Zonotope>& zs, const MatrixXd& betas) {
  if (static_cast<Index>(zs.size()) != betas.cols()) throw DimensionMismatch("betas_to_trajectories: one beta per system required");
  if (zs.empty()) return MatrixXd();
  for (const auto& z : zs)
    if (z.family != zs.front().family || z.N() != zs.front().N() || z.g() != betas.rows())
      throw FamilyMismatch("betas_to_trajectories: systems differ in family or horizon");
  MatrixXd P(zs.front().N(), betas.cols());
  for (Index j = 0; j < betas.cols(); ++j) P.col(j) = zs[static_cast<std::size_t>(j)].c;
  P.noalias() += zs.front().data()->G * betas;
  return P;
}

struct DisaggregationResult {
  VectorXd beta_agg_star;
  MatrixXd beta_star;     // g x J
  MatrixXd trajectories;  // N x J
  double objective = 0.0;
  std::int64_t iterations = 0;
  bool hit_max_iters = false;
  std::vector<double> history;
  double subgradient_seconds = 0.0;   // the projected subgradient loop only
  double distribution_seconds = 0.0;  // distribution and trajectories
};

/// Largest |sum_j beta^(j) - beta_agg| and |sum_j p^(j) - p_agg|, and the number
/// of trajectories failing their own membership test.
struct InvariantReport {
  double beta_sum_error = 0.0;
  double trajectory_sum_error = 0.0;
  Index membership_violations = 0;
};

inline InvariantReport check_invariants(const DisaggregationResult& r, const std::vector<Zonotope>& zs,
                                        const VectorXd& p_agg) {
  InvariantReport rep;
  rep.beta_sum_error = (r.beta_star.rowwise().sum() - r.beta_agg_star).cwiseAbs().maxCoeff();
  rep.trajectory_sum_error = (r.trajectories.rowwise().sum() - p_agg).cwiseAbs().maxCoeff();
  for (std::size_t j = 0; j < zs.size(); ++j)
    if (!contains_point(zs[j], r.trajectories.col(static_cast<Index>(j)))) ++rep.membership_violations;
  return rep;
}

/// Full pipeline: subgradient on the aggregate, distribution, trajectories.
/// The reported objective is the anchored aggregate cost at the best beta, which
/// equals sum_j T^(j)(beta^(j)) of the distributed split.
inline DisaggregationResult disaggregate(const VectorXd& p_agg, const std::vector<Zonotope>& zs,
                                         const AggregateCost& ac, const SubgradientParams& params = {},
                                         unsigned threads = 1) {
  if (zs.empty()) throw DimensionMismatch("disaggregate: no systems");
  using Clock = std::chrono::steady_clock;
  const Zonotope Zagg = minkowski_sum(zs);
  const auto t0 = Clock::now();
  const auto sg = disaggregate_subgradient(p_agg, Zagg, ac, params);
  const auto t1 = Clock::now();
  std::vector<VectorXd> betabars;
  betabars.reserve(zs.size());
  for (const auto& z : zs) betabars.push_back(z.betabar);
  DisaggregationResult r;
  r.beta_agg_star = sg.beta;
  r.beta_star = distribute(sg.beta, betabars, ac, threads);
  r.trajectories = betas_to_trajectories(zs, r.beta_star);
  r.subgradient_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.distribution_seconds = std::chrono::duration<double>(Clock::now() - t1).count();
  r.objective = sg.objective;
  r.iterations = sg.iterations;
  r.hit_max_iters = sg.hit_max_iters;
  r.history = sg.history;
  return r;
}

struct OracleResult {
  MatrixXd beta;          // g x J
  MatrixXd trajectories;  // N x J
  double objective = 0.0;
};

/// Exact minimum of sum_j T^(j)(beta^(j)) s.t. sum_j (c^(j) + G beta^(j)) = p_agg,
/// |beta^(j)| <= betabar^(j). Multi-segment components use epigraph variables;
/// single-segment components enter the objective directly.
inline OracleResult disaggregate_lp_oracle(const VectorXd& p_agg, const std::vector<Zonotope>& zs,
                                           const std::vector<SystemCost>& costs) {
  if (zs.empty() || zs.size() != costs.size()) throw DimensionMismatch("disaggregate_lp_oracle: one cost per system required");
  const Zonotope Zagg = minkowski_sum(zs);
  if (p_agg.size() != Zagg.N()) throw DimensionMismatch("disaggregate_lp_oracle: p_agg length must equal N");
  const Index N = Zagg.N(), g = Zagg.g();
  const MatrixXd& G = Zagg.data()->G;
  optim::LpBuilder lp;
  std::vector<Index> first(zs.size());
  double fixed = 0.0;
  struct Epi {
    Index b, tau;
    const PwlComponent* comp;
  };
  std::vector<Epi> epis;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    const auto& sc = costs[j];
    if (sc.g() != g) throw DimensionMismatch("disaggregate_lp_oracle: cost generator count mismatch");
    fixed += sc.t_fix;
    first[j] = -1;
    for (Index i = 0; i < g; ++i) {
      const auto& c = sc.components[static_cast<std::size_t>(i)];
      const double bb = zs[j].betabar[i];
      if (std::abs(c.betabar - bb) > 1e-9 * std::max(1.0, bb))
        throw DimensionMismatch("disaggregate_lp_oracle: cost domain differs from betabar");
      double cost = 0.0;
      if (c.lengths.size() == 1) {
        cost = c.slopes[0];
        fixed += c.left_value + c.slopes[0] * bb;  // value at beta = 0
      } else if (c.lengths.empty()) {
        fixed += c.left_value;
      }
      const Index b = lp.add_variable(-bb, bb, cost);
      if (first[j] < 0) first[j] = b;
      if (c.lengths.size() > 1) epis.push_back({b, -1, &c});
    }
  }
  for (auto& e : epis) {
    e.tau = lp.add_variable(-optim::kInf, optim::kInf, 1.0);
    double a = -e.comp->betabar, va = e.comp->left_value;
    for (std::size_t t = 0; t < e.comp->lengths.size(); ++t) {
      const double q = e.comp->slopes[t];
      lp.add_le({{e.b, q}, {e.tau, -1.0}}, -(va - q * a));
      va += e.comp->lengths[t] * q;
      a += e.comp->lengths[t];
    }
  }
  const VectorXd rhs = p_agg - Zagg.c;
  for (Index r = 0; r < N; ++r) {
    optim::LpBuilder::Row row;
    for (std::size_t j = 0; j < zs.size(); ++j)
      for (Index i = 0; i < g; ++i)
        if (G(r, i) != 0.0) row.emplace_back(first[j] + i, G(r, i));
    lp.add_eq(row, rhs[r]);
  }
  const auto sol = optim::solve_lp(lp.build());
  if (sol.status == optim::LpStatus::Infeasible) throw InfeasibleError("disaggregate_lp_oracle: p_agg outside the aggregate set");
  if (sol.status != optim::LpStatus::Optimal) throw NumericalFailure("disaggregate_lp_oracle: LP not solved to optimality");
  OracleResult out;
  out.beta.resize(g, static_cast<Index>(zs.size()));
  for (std::size_t j = 0; j < zs.size(); ++j) out.beta.col(static_cast<Index>(j)) = sol.x.segment(first[j], g);
  out.trajectories = betas_to_trajectories(zs, out.beta);
  out.objective = sol.objective + fixed;
  return out;
}

/// (V_subgradient - V_oracle) / max(|V_oracle|, guard).
inline double relative_gap(double v_method, double v_oracle, double guard = 1e-9) {
  return (v_method - v_oracle) / std::max(std::abs(v_oracle), guard);
}

}  // namespace flexpool
