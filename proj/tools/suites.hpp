#pragma once

// Canned experiment suites shared by `flexpool bench` and the acceptance run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flexpool/disagg.hpp"
#include "flexpool/fleet.hpp"
#include "flexpool/regulation.hpp"
#include "flexpool/zonofit.hpp"

namespace flexpool::suites {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Independent 64-bit seed for a (seed, tag) pair.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  PhiloxStream s(seed, tag);
  const std::uint64_t hi = s.next_u32();
  return (hi << 32) | s.next_u32();
}

struct FittedFleet {
  std::vector<HPolytope> polytopes;
  std::vector<Zonotope> zonotopes, boxes;
  std::vector<double> lambda_z, lambda_b, fit_seconds;
};

inline FittedFleet fit_fleet(const FleetScenario& sc, unsigned threads, bool with_boxes = true) {
  FittedFleet f;
  f.polytopes = scenario_polytopes(sc);
  const std::size_t J = f.polytopes.size();
  f.zonotopes.resize(J);
  f.boxes.resize(with_boxes ? J : 0);
  f.lambda_z.assign(J, 0.0);
  f.lambda_b.assign(J, 0.0);
  f.fit_seconds.assign(J, 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(J), threads, [&](std::ptrdiff_t jj) {
    const auto j = static_cast<std::size_t>(jj);
    const auto t0 = Clock::now();
    const WidthProfile w = polytope_widths(f.polytopes[j]);
    f.zonotopes[j] = fit_zonotope(f.polytopes[j], w);
    f.lambda_z[j] = approximation_quality(f.zonotopes[j], w);
    if (with_boxes) {
      f.boxes[j] = fit_box(f.polytopes[j], w);
      f.lambda_b[j] = approximation_quality(f.boxes[j], w);
    }
    f.fit_seconds[j] = seconds_since(t0);
  });
  return f;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Approximation quality on a sampled PEV fleet.

struct LambdaSuite {
  FleetScenario scenario;
  FittedFleet fleet;
  double mean_z = 0.0, mean_b = 0.0;
  std::size_t dominance_violations = 0;
  double seconds = 0.0;
};

inline LambdaSuite run_lambda(std::uint64_t seed, unsigned threads, std::size_t count = 100, Index N = 12,
                              double t_s = 2.0) {
  const auto t0 = Clock::now();
  LambdaSuite s;
  s.scenario = sample_fleet(count, {}, N, t_s, seed, threads);
  s.fleet = fit_fleet(s.scenario, threads);
  s.mean_z = mean(s.fleet.lambda_z);
  s.mean_b = mean(s.fleet.lambda_b);
  for (std::size_t j = 0; j < count; ++j) s.dominance_violations += s.fleet.lambda_z[j] < s.fleet.lambda_b[j];
  s.seconds = seconds_since(t0);
  return s;
}

// Aggregate target: sum of member points with beta fractions U[-0.9, 0.9].
inline VectorXd sample_target(const std::vector<Zonotope>& zs, std::uint64_t seed) {
  VectorXd p = VectorXd::Zero(zs.front().N());
  const MatrixXd G = zs.front().G();
  for (std::size_t j = 0; j < zs.size(); ++j) {
    PhiloxStream rng(seed, j);
    VectorXd beta(zs[j].g());
    for (Index i = 0; i < beta.size(); ++i) beta[i] = rng.uniform(-0.9, 0.9) * zs[j].betabar[i];
    p += zs[j].c + G * beta;
  }
  return p;
}

// Subgradient vs exact LP on fitted PEV pools.

struct GapRun {
  std::size_t J = 0;
  int seed = 0;
  double value = 0.0, oracle = 0.0, gap = 0.0;
  std::int64_t iterations = 0;
  double subgradient_seconds = 0.0, oracle_seconds = 0.0;
  InvariantReport invariants;
};

struct GapSuite {
  std::vector<GapRun> runs;
  double pool_fit_seconds = 0.0;
  double worst_gap = 0.0;
  std::size_t invariant_violations = 0;
  double worst_sum_error = 0.0;
  double seconds = 0.0;
};

inline constexpr double kSumTolerance = 1e-7;

inline void count_invariants(const InvariantReport& inv, std::size_t& violations, double& worst) {
  worst = std::max(worst, inv.trajectory_sum_error);
  violations += inv.membership_violations + (inv.trajectory_sum_error > kSumTolerance ? 1u : 0u);
}

/// One pool of max(Js) fitted PEVs; run (J, s) uses its first J systems with
/// fresh linear costs and a fresh target per seed.
inline GapSuite run_gap(std::uint64_t seed, int seeds, const std::vector<std::size_t>& Js, unsigned threads,
                        Index N = 24, double t_s = 1.0, const SubgradientParams& params = {}) {
  const auto t0 = Clock::now();
  GapSuite suite;
  const std::size_t pool_size = *std::max_element(Js.begin(), Js.end());
  const auto sc = sample_fleet(pool_size, {}, N, t_s, seed, threads);
  const auto pool = fit_fleet(sc, threads, false);
  suite.pool_fit_seconds = seconds_since(t0);
  for (const std::size_t J : Js)
    for (int s = 0; s < seeds; ++s) {
      const std::vector<Zonotope> zs(pool.zonotopes.begin(), pool.zonotopes.begin() + static_cast<std::ptrdiff_t>(J));
      const std::uint64_t run_seed = derive_seed(seed, (static_cast<std::uint64_t>(J) << 16) | static_cast<unsigned>(s));
      const auto costs = random_linear_costs(zs, run_seed);
      const VectorXd p = sample_target(zs, derive_seed(run_seed, 1));
      const auto ac = merge_aggregate_cost(costs, threads);
      GapRun run;
      run.J = J;
      run.seed = s;
      const auto res = disaggregate(p, zs, ac, params, threads);
      run.value = res.objective;
      run.iterations = res.iterations;
      run.subgradient_seconds = res.subgradient_seconds;
      run.invariants = check_invariants(res, zs, p);
      const auto t1 = Clock::now();
      run.oracle = disaggregate_lp_oracle(p, zs, costs).objective;
      run.oracle_seconds = seconds_since(t1);
      run.gap = relative_gap(run.value, run.oracle, params.eps_div_guard);
      suite.worst_gap = std::max(suite.worst_gap, run.gap);
      count_invariants(run.invariants, suite.invariant_violations, suite.worst_sum_error);
      suite.runs.push_back(run);
    }
  suite.seconds = seconds_since(t0);
  return suite;
}

// Disaggregation timing against fleet size at a long horizon.

struct ScalingRun {
  std::size_t J = 0;
  double subgradient_seconds = 0.0, distribution_seconds = 0.0, setup_seconds = 0.0;
  std::int64_t iterations = 0;
  InvariantReport invariants;
};

struct ScalingSuite {
  std::vector<ScalingRun> runs;
  std::vector<std::size_t> Js;
  std::vector<double> median_subgradient;
  double ratio = 0.0;  // median time at Js.back() over Js.front()
  std::size_t invariant_violations = 0;
  double worst_sum_error = 0.0;
  double seconds = 0.0;
};

/// Synthetic PE-family zonotopes: c ~ U[-1, 1], betabar ~ U[0, 2] (axis) and U[0, 1]
/// (differences), one Philox stream per system.
inline std::vector<Zonotope> synthetic_zonotopes(std::size_t J, Index N, std::uint64_t seed) {
  std::vector<Zonotope> zs;
  zs.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    PhiloxStream rng(seed, j);
    VectorXd c(N), b(num_generators(Family::Pe, N));
    for (Index k = 0; k < N; ++k) c[k] = rng.uniform(-1.0, 1.0);
    for (Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(0.0, i < N ? 2.0 : 1.0);
    zs.emplace_back(Family::Pe, c, b);
  }
  return zs;
}

inline ScalingSuite run_scaling(std::uint64_t seed, const std::vector<std::size_t>& Js, int repeats, unsigned threads,
                                Index N = 96) {
  const auto t0 = Clock::now();
  ScalingSuite suite;
  suite.Js = Js;
  for (const std::size_t J : Js) {
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t run_seed = derive_seed(seed, (static_cast<std::uint64_t>(J) << 16) | static_cast<unsigned>(r));
      const auto t1 = Clock::now();
      const auto zs = synthetic_zonotopes(J, N, run_seed);
      const auto ac = merge_aggregate_cost(random_linear_costs(zs, derive_seed(run_seed, 1)), threads);
      const VectorXd p = sample_target(zs, derive_seed(run_seed, 2));
      ScalingRun run;
      run.J = J;
      run.setup_seconds = seconds_since(t1);
      const auto res = disaggregate(p, zs, ac, {}, threads);
      run.subgradient_seconds = res.subgradient_seconds;
      run.distribution_seconds = res.distribution_seconds;
      run.iterations = res.iterations;
      run.invariants = check_invariants(res, zs, p);
      count_invariants(run.invariants, suite.invariant_violations, suite.worst_sum_error);
      times.push_back(run.subgradient_seconds);
      suite.runs.push_back(run);
    }
    std::sort(times.begin(), times.end());
    suite.median_subgradient.push_back(times[times.size() / 2]);
  }
  suite.ratio = suite.median_subgradient.back() / std::max(suite.median_subgradient.front(), 1e-12);
  suite.seconds = seconds_since(t0);
  return suite;
}

// Baseline cost of polytopes, zonotopes and boxes at common regulation targets.

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct OrderingRow {
  int fleet = 0;
  double fraction = 0.0, r = 0.0;
  double poly = 0.0, zono = 0.0, box = 0.0;
  double zono_exact = 0.0, box_exact = 0.0;  // separable exact minimizers
  double offer = 0.0;
};

struct OrderingSuite {
  std::vector<OrderingRow> rows;
  std::size_t poly_violations = 0, box_violations = 0, offer_violations = 0;
  std::size_t exact_violations = 0;  // same ordering on the exact minimizers
  double worst_zono_excess = 0.0;    // (zono - zono_exact) / |zono_exact|
  double seconds = 0.0;
};

/// One fleet: targets fraction * r_max of the zonotope family; box rows are +inf
/// when the box family cannot reserve the target.
inline std::vector<OrderingRow> compare_families(const FittedFleet& f, const VectorXd& vhat, double t_s,
                                                 const std::vector<double>& fractions, const SubgradientParams& params,
                                                 int fleet_id = 0) {
  auto zero_cost = [](const std::vector<Zonotope>& zs) {
    std::vector<SystemCost> costs;
    for (const auto& z : zs) {
      std::vector<PwlComponent> flex;
      for (Index i = 0; i < z.g(); ++i) flex.push_back(PwlComponent::linear(0.0, z.betabar[i]));
      costs.push_back(flexibility_only(flex));
    }
    return merge_aggregate_cost(costs);
  };
  const AggregateCost acz = zero_cost(f.zonotopes), acb = zero_cost(f.boxes);
  const CapacityResult capz = max_capacity_zono(f.zonotopes), capb = max_capacity_zono(f.boxes);
  std::vector<OrderingRow> rows;
  for (const double frac : fractions) {
    OrderingRow row;
    row.fleet = fleet_id;
    row.fraction = frac;
    row.r = frac * capz.r_max;
    row.poly = baseline_cost_poly_oracle(f.polytopes, {}, vhat, t_s, row.r);
    row.zono = baseline_cost_zono(f.zonotopes, acz, capz, frac, vhat, t_s, params).cost;
    row.zono_exact = baseline_cost_zono_exact(f.zonotopes, acz, capz, frac, vhat, t_s).cost;
    const double eta_b = row.r == 0.0 ? 0.0 : (capb.r_max > 0.0 ? row.r / capb.r_max : kInfeasible);
    row.box = eta_b <= 1.0 ? baseline_cost_zono(f.boxes, acb, capb, eta_b, vhat, t_s, params).cost : kInfeasible;
    row.box_exact = eta_b <= 1.0 ? baseline_cost_zono_exact(f.boxes, acb, capb, eta_b, vhat, t_s).cost : kInfeasible;
    row.offer = row.zono - (rows.empty() ? row.zono : rows.front().zono);
    rows.push_back(row);
  }
  return rows;
}

inline OrderingSuite run_ordering(std::uint64_t seed, const VectorXd& vhat, int fleets, unsigned threads,
                                  std::size_t J = 10, Index N = 6, double t_s = 4.0,
                                  const std::vector<double>& fractions = {0.0, 0.25, 0.5, 0.75}) {
  const auto t0 = Clock::now();
  OrderingSuite suite;
  for (int k = 0; k < fleets; ++k) {
    const auto sc = sample_fleet(J, {}, N, t_s, derive_seed(seed, static_cast<std::uint64_t>(k)), threads);
    const auto rows = compare_families(fit_fleet(sc, threads), vhat, t_s, fractions, {}, k);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      suite.poly_violations += !(rows[i].poly <= rows[i].zono + 1e-6);
      suite.box_violations += !(rows[i].zono <= rows[i].box + 1e-6);
      if (i > 0) suite.offer_violations += rows[i].offer < rows[i - 1].offer - 1e-6;
      suite.exact_violations += !(rows[i].poly <= rows[i].zono_exact + 1e-6 && rows[i].zono_exact <= rows[i].box_exact + 1e-6);
      suite.worst_zono_excess = std::max(suite.worst_zono_excess, (rows[i].zono - rows[i].zono_exact) /
                                                                      std::max(std::abs(rows[i].zono_exact), 1e-9));
      suite.rows.push_back(rows[i]);
    }
  }
  suite.seconds = seconds_since(t0);
  return suite;
}

}  // namespace flexpool::suites
