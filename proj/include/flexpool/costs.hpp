#pragma once

// Separable piecewise-linear costs in generator coordinates. A system's total
// cost is T(beta) = sum_i T_i(beta_i) + t_fix, with T_i = f_i - t_s v'g_i beta_i
// and t_fix = -t_s v'c. The aggregate cost concatenates all systems' segments
// per generator in ascending slope order; its value at beta is the cheapest
// split of beta over the systems.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/errors.hpp"
#include "flexpool/parallel.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool {

/// Convex PWL function on [-betabar, betabar]: segment t has length lengths[t]
/// and slope slopes[t]; left_value is the value at -betabar.
struct PwlComponent {
  std::vector<double> lengths;
  std::vector<double> slopes;
  double betabar = 0.0;
  double left_value = 0.0;

  /// f(b) = value_at_zero + slope * b. No segments when betabar is zero.
  static PwlComponent linear(double slope, double betabar, double value_at_zero = 0.0) {
    PwlComponent c;
    c.betabar = betabar;
    c.left_value = value_at_zero - slope * betabar;
    if (betabar > 0.0) {
      c.lengths.push_back(2.0 * betabar);
      c.slopes.push_back(slope);
    }
    return c;
  }

  void validate() const {
    if (lengths.size() != slopes.size()) throw DimensionMismatch("PwlComponent: lengths and slopes differ in size");
    if (!(betabar >= 0.0) || !std::isfinite(betabar)) throw NegativeBeta("PwlComponent: betabar must be finite and >= 0");
    if (!std::isfinite(left_value)) throw DimensionMismatch("PwlComponent: non-finite left value");
    double total = 0.0;
    for (std::size_t t = 0; t < lengths.size(); ++t) {
      if (!(lengths[t] > 0.0) || !std::isfinite(lengths[t]))
        throw DimensionMismatch("PwlComponent: segment lengths must be positive");
      if (!std::isfinite(slopes[t])) throw DimensionMismatch("PwlComponent: non-finite slope");
      if (t > 0 && slopes[t] < slopes[t - 1]) throw NonConvexInput("PwlComponent: slopes must be non-decreasing");
      total += lengths[t];
    }
    if (std::abs(total - 2.0 * betabar) > 1e-9 * std::max(1.0, betabar))
      throw DimensionMismatch("PwlComponent: segment lengths must sum to 2*betabar");
  }

  double eval(double beta) const {
    if (std::abs(beta) > betabar + detail::scaled_tol(betabar)) throw BetaOutOfRange("PwlComponent: beta outside the domain");
    double pos = std::clamp(beta + betabar, 0.0, 2.0 * betabar);
    double v = left_value;
    for (std::size_t t = 0; t < lengths.size() && pos > 0.0; ++t) {
      const double step = std::min(pos, lengths[t]);
      v += step * slopes[t];
      pos -= step;
    }
    return v;
  }
};

struct SystemCost {
  std::vector<PwlComponent> components;
  double t_fix = 0.0;

  Index g() const { return static_cast<Index>(components.size()); }

  double eval(const VectorXd& beta) const {
    if (beta.size() != g()) throw DimensionMismatch("SystemCost: beta length does not match components");
    double v = t_fix;
    for (Index i = 0; i < g(); ++i) v += components[static_cast<std::size_t>(i)].eval(beta[i]);
    return v;
  }
};

/// T_i = f_i - t_s (v'g_i) beta_i and t_fix = -t_s v'c.
inline SystemCost build_system_cost(const std::vector<PwlComponent>& flex, const VectorXd& v, const Zonotope& Z,
                                    double t_s) {
  if (static_cast<Index>(flex.size()) != Z.g()) throw DimensionMismatch("build_system_cost: one component per generator required");
  if (v.size() != Z.N()) throw DimensionMismatch("build_system_cost: price length must equal N");
  if (!v.allFinite() || !(t_s > 0.0)) throw DimensionMismatch("build_system_cost: prices must be finite and t_s positive");
  const MatrixXd& G = Z.data()->G;
  SystemCost out;
  out.t_fix = -t_s * v.dot(Z.c);
  out.components.reserve(flex.size());
  for (Index i = 0; i < Z.g(); ++i) {
    PwlComponent c = flex[static_cast<std::size_t>(i)];
    c.validate();
    if (std::abs(c.betabar - Z.betabar[i]) > 1e-9 * std::max(1.0, Z.betabar[i]))
      throw DimensionMismatch("build_system_cost: component " + std::to_string(i) + " domain differs from betabar");
    const double shift = t_s * v.dot(G.col(i));
    for (double& q : c.slopes) q -= shift;
    c.left_value += shift * c.betabar;
    out.components.push_back(std::move(c));
  }
  return out;
}

/// Pure flexibility cost with zero energy price.
inline SystemCost flexibility_only(const std::vector<PwlComponent>& flex) {
  SystemCost out;
  out.components = flex;
  for (const auto& c : out.components) c.validate();
  return out;
}

struct AggregateCost {
  struct Segment {
    double length;
    double slope;
    Index system;
  };

  std::vector<std::vector<Segment>> lists;  // per generator, ascending slope
  VectorXd betabar;                         // aggregate half-widths
  VectorXd anchors;                         // K_i = sum_j T_i^(j)(-betabar_i^(j))
  double t_fix = 0.0;
  Index systems = 0;

  // Prefix sums per generator: cum_len[i][m] = sum_{t<m} l_t, cum_val[i][m] = sum_{t<m} l_t q_t.
  std::vector<std::vector<double>> cum_len;
  std::vector<std::vector<double>> cum_val;

  Index g() const { return betabar.size(); }
};

namespace detail {

inline void build_prefix(AggregateCost& ac, Index i) {
  const auto& L = ac.lists[static_cast<std::size_t>(i)];
  auto& len = ac.cum_len[static_cast<std::size_t>(i)];
  auto& val = ac.cum_val[static_cast<std::size_t>(i)];
  len.assign(L.size() + 1, 0.0);
  val.assign(L.size() + 1, 0.0);
  for (std::size_t t = 0; t < L.size(); ++t) {
    len[t + 1] = len[t] + L[t].length;
    val[t + 1] = val[t] + L[t].length * L[t].slope;
  }
}

// Number of whole segments m with cum_len[m] <= pos.
inline std::size_t whole_segments(const std::vector<double>& cum_len, double pos) {
  const auto it = std::upper_bound(cum_len.begin() + 1, cum_len.end(), pos);
  return static_cast<std::size_t>(it - cum_len.begin()) - 1;
}

inline void check_beta(const AggregateCost& ac, const VectorXd& beta, const char* who) {
  if (beta.size() != ac.g()) throw DimensionMismatch(std::string(who) + ": beta length does not match generators");
  for (Index i = 0; i < beta.size(); ++i)
    if (!(std::abs(beta[i]) <= ac.betabar[i] + scaled_tol(ac.betabar[i])))
      throw BetaOutOfRange(std::string(who) + ": |beta[" + std::to_string(i) + "]| exceeds the aggregate betabar");
}

}  // namespace detail

/// Stable slope sort per generator; ties keep system order, then segment order.
inline AggregateCost merge_aggregate_cost(const std::vector<SystemCost>& costs, unsigned threads = 1) {
  if (costs.empty()) throw DimensionMismatch("merge_aggregate_cost: no systems");
  const Index g = costs.front().g();
  for (const auto& c : costs)
    if (c.g() != g) throw DimensionMismatch("merge_aggregate_cost: systems differ in generator count");
  AggregateCost ac;
  ac.systems = static_cast<Index>(costs.size());
  ac.lists.resize(static_cast<std::size_t>(g));
  ac.cum_len.resize(static_cast<std::size_t>(g));
  ac.cum_val.resize(static_cast<std::size_t>(g));
  ac.betabar = VectorXd::Zero(g);
  ac.anchors = VectorXd::Zero(g);
  for (const auto& c : costs) ac.t_fix += c.t_fix;
  for (Index i = 0; i < g; ++i)
    for (const auto& c : costs) {
      const auto& comp = c.components[static_cast<std::size_t>(i)];
      ac.betabar[i] += comp.betabar;
      ac.anchors[i] += comp.left_value;
    }
  parallel_for(g, threads, [&](std::ptrdiff_t i) {
    auto& L = ac.lists[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < costs.size(); ++j) {
      const auto& comp = costs[j].components[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < comp.lengths.size(); ++t)
        L.push_back({comp.lengths[t], comp.slopes[t], static_cast<Index>(j)});
    }
    std::stable_sort(L.begin(), L.end(), [](const auto& a, const auto& b) { return a.slope < b.slope; });
    detail::build_prefix(ac, i);
  });
  return ac;
}

/// t_fix + sum_i (K_i + integral of the merged slopes from -betabar_i to beta_i).
inline double eval_aggregate(const AggregateCost& ac, const VectorXd& beta) {
  detail::check_beta(ac, beta, "eval_aggregate");
  double v = ac.t_fix;
  for (Index i = 0; i < ac.g(); ++i) {
    const auto& L = ac.lists[static_cast<std::size_t>(i)];
    const auto& len = ac.cum_len[static_cast<std::size_t>(i)];
    v += ac.anchors[i];
    if (L.empty()) continue;
    const double pos = std::clamp(ac.betabar[i] + beta[i], 0.0, len.back());
    const std::size_t m = detail::whole_segments(len, pos);
    v += ac.cum_val[static_cast<std::size_t>(i)][m] + (pos - len[m]) * L[std::min(m, L.size() - 1)].slope;
  }
  return v;
}

/// Slope of the segment containing beta_i; right slope at breakpoints, last slope at the right end.
inline VectorXd subgradient_at(const AggregateCost& ac, const VectorXd& beta) {
  detail::check_beta(ac, beta, "subgradient_at");
  VectorXd d = VectorXd::Zero(ac.g());
  for (Index i = 0; i < ac.g(); ++i) {
    const auto& L = ac.lists[static_cast<std::size_t>(i)];
    if (L.empty()) continue;
    const auto& len = ac.cum_len[static_cast<std::size_t>(i)];
    const double pos = std::clamp(ac.betabar[i] + beta[i], 0.0, len.back());
    d[i] = L[std::min(detail::whole_segments(len, pos), L.size() - 1)].slope;
  }
  return d;
}

}  // namespace flexpool
