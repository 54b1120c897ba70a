#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flexpool/regulation.hpp"
#include "flexpool/zonofit.hpp"

using namespace flexpool;

namespace {

HPolytope pev_polytope(std::mt19937_64& rng, Index N, double t_s) {
  std::uniform_real_distribution<double> cap(20.0, 40.0), soc(0.2, 0.8), pmax(2.0, 6.0);
  const double c = cap(rng), pm = pmax(rng);
  PeParams pe;
  pe.N = N;
  pe.t_s = t_s;
  pe.p_lo = VectorXd::Constant(N, -pm);
  pe.p_hi = VectorXd::Constant(N, pm);
  pe.e_lo = VectorXd::Zero(N);
  pe.e_hi = VectorXd::Constant(N, c);
  pe.e0 = soc(rng) * c;
  return build_pe_polytope(pe);
}

std::vector<Zonotope> fit_all(const std::vector<HPolytope>& ps) {
  std::vector<Zonotope> zs;
  for (const auto& P : ps) zs.push_back(fit_zonotope(P, polytope_widths(P)));
  return zs;
}

AggregateCost zero_flex_cost(const std::vector<Zonotope>& zs) {
  std::vector<SystemCost> costs;
  for (const auto& z : zs) {
    std::vector<PwlComponent> flex;
    for (Index i = 0; i < z.g(); ++i) flex.push_back(PwlComponent::linear(0.0, z.betabar[i]));
    costs.push_back(flexibility_only(flex));
  }
  return merge_aggregate_cost(costs);
}

VectorXd random_prices(std::mt19937_64& rng, Index N) {
  std::uniform_real_distribution<double> u(0.02, 0.08);
  VectorXd v(N);
  for (Index k = 0; k < N; ++k) v[k] = u(rng);
  return v;
}

}  // namespace

TEST(Capacity, AxisOnlyZonotopeGivesHalfEdge) {
  const Index N = 4;
  VectorXd bb = VectorXd::Zero(2 * N - 1);
  bb.head(N).setConstant(1.5);
  const Zonotope z(Family::Pe, VectorXd::Constant(N, 7.0), bb);
  EXPECT_NEAR(max_capacity_zono({z}).r_max, 1.5, 1e-9);
  const Zonotope box(Family::Box, VectorXd::Zero(N), VectorXd::Constant(N, 2.0));
  EXPECT_NEAR(max_capacity_zono({box}).r_max, 2.0, 1e-9);
}

TEST(Capacity, ZeroBetabarGivesZero) {
  const Zonotope z = Zonotope::point(Family::Pe, VectorXd::Ones(3));
  const auto cap = max_capacity_zono({z, z});
  EXPECT_NEAR(cap.r_max, 0.0, 1e-12);
  for (const auto& b : cap.beta_max) EXPECT_NEAR(b.norm(), 0.0, 1e-12);
}

TEST(Capacity, CenteredBoxPolytope) {
  const Index N = 3;
  HPolytope P;
  P.N = N;
  P.A.resize(2 * N, N);
  P.A << MatrixXd::Identity(N, N), -MatrixXd::Identity(N, N);
  P.b.resize(2 * N);
  P.b << VectorXd::Constant(N, 2.0), VectorXd::Zero(N);
  EXPECT_NEAR(max_capacity_poly({P}), 1.0, 1e-9);
}

TEST(Capacity, EmptyFlexibilitySystemAddsNothing) {
  const Index N = 3;
  HPolytope P;
  P.N = N;
  P.A.resize(2 * N, N);
  P.A << MatrixXd::Identity(N, N), -MatrixXd::Identity(N, N);
  P.b.resize(2 * N);
  P.b << VectorXd::Constant(N, 2.0), VectorXd::Zero(N);
  HPolytope Q = P;
  Q.b << VectorXd::Constant(N, 1.0), VectorXd::Constant(N, -1.0);
  EXPECT_NEAR(max_capacity_poly({P, Q}), 1.0, 1e-9);
  EXPECT_NEAR(max_capacity_poly({P, P}), 2.0, 1e-9);
}

TEST(Capacity, ZonotopeLpMatchesBoxInPolytopeLp) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<HPolytope> ps;
    for (int j = 0; j < 3; ++j) ps.push_back(pev_polytope(rng, 3, 1.0));
    const auto zs = fit_all(ps);
    std::vector<HPolytope> hz;
    for (const auto& z : zs) hz.push_back(to_hpolytope(z));
    EXPECT_NEAR(max_capacity_zono(zs).r_max, max_capacity_poly(hz), 1e-7) << "seed " << seed;
  }
}

TEST(Capacity, PevTripleMatchesGridSearch) {
  std::mt19937_64 rng(11);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 3; ++j) ps.push_back(pev_polytope(rng, 2, 1.0));
  // Per system, the largest r with a box of half-edge r inside P is an LP of
  // its own; at N=2 the best total is bounded by the sum of those and the LP
  // must reach it because the systems do not interact.
  double total = 0.0;
  for (const auto& P : ps) {
    double best = 0.0;
    const int n = 200;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        VectorXd p(2);
        p << -6.0 + 12.0 * a / n, -6.0 + 12.0 * b / n;
        double lo = 0.0, hi = 6.0;
        if (!contains(P, p)) continue;
        for (int it = 0; it < 40; ++it) {
          const double r = 0.5 * (lo + hi);
          bool ok = true;
          for (int s = 0; s < 4 && ok; ++s) {
            VectorXd q = p;
            q[0] += (s & 1) ? r : -r;
            q[1] += (s & 2) ? r : -r;
            ok = contains(P, q);
          }
          (ok ? lo : hi) = r;
        }
        best = std::max(best, lo);
      }
    total += best;
  }
  EXPECT_NEAR(max_capacity_poly(ps), total, 0.07);
  EXPECT_GE(max_capacity_poly(ps), total - 1e-7);
}

TEST(Capacity, Invariants) {
  std::mt19937_64 rng(3);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 6; ++j) ps.push_back(pev_polytope(rng, 5, 1.0));
  const auto zs = fit_all(ps);
  const auto cap = max_capacity_zono(zs);
  EXPECT_GT(cap.r_max, 0.0);
  const MatrixXd G = zs.front().G();
  VectorXd sum = VectorXd::Zero(zs.front().g());
  for (std::size_t j = 0; j < zs.size(); ++j) {
    EXPECT_GE((G * cap.beta_max[j]).minCoeff(), -1e-9);
    EXPECT_LE((cap.beta_max[j].cwiseAbs() - zs[j].betabar).maxCoeff(), 1e-12);
    sum += cap.beta_max[j];
  }
  EXPECT_GE((G * sum).minCoeff(), cap.r_max - 1e-7);
}

TEST(Capacity, RejectsMixedFamilies) {
  const Zonotope a = Zonotope::point(Family::Pe, VectorXd::Ones(3));
  const Zonotope b = Zonotope::point(Family::Box, VectorXd::Ones(3));
  EXPECT_THROW(max_capacity_zono({a, b}), FamilyMismatch);
  EXPECT_THROW(max_capacity_zono({}), DimensionMismatch);
}

TEST(EnergyPrice, ShiftMatchesDirectEvaluation) {
  std::mt19937_64 rng(5);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 4; ++j) ps.push_back(pev_polytope(rng, 4, 0.5));
  const auto zs = fit_all(ps);
  std::vector<SystemCost> costs;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& z : zs) {
    std::vector<PwlComponent> flex;
    for (Index i = 0; i < z.g(); ++i) flex.push_back(PwlComponent::linear(u(rng), z.betabar[i], u(rng)));
    costs.push_back(flexibility_only(flex));
  }
  const AggregateCost ac = merge_aggregate_cost(costs);
  const Zonotope Zagg = minkowski_sum(zs);
  const VectorXd vhat = random_prices(rng, 4);
  const AggregateCost priced = with_energy_price(ac, Zagg, vhat, 0.5);
  for (int t = 0; t < 200; ++t) {
    VectorXd beta(Zagg.g());
    for (Index i = 0; i < beta.size(); ++i) beta[i] = u(rng) * Zagg.betabar[i];
    const double direct = eval_aggregate(ac, beta) + 0.5 * vhat.dot(realize(Zagg, beta));
    EXPECT_NEAR(eval_aggregate(priced, beta), direct, 1e-9);
  }
  EXPECT_THROW(with_energy_price(ac, Zagg, VectorXd::Zero(3), 0.5), DimensionMismatch);
}

TEST(Baseline, ZeroEtaMatchesPolytopeOracleOnZonotopes) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::vector<HPolytope> ps;
    for (int j = 0; j < 5; ++j) ps.push_back(pev_polytope(rng, 4, 1.0));
    const auto zs = fit_all(ps);
    std::vector<HPolytope> hz;
    for (const auto& z : zs) hz.push_back(to_hpolytope(z));
    const VectorXd vhat = random_prices(rng, 4);
    const auto cap = max_capacity_zono(zs);
    const auto exact = baseline_cost_zono_exact(zs, zero_flex_cost(zs), cap, 0.0, vhat, 1.0);
    EXPECT_NEAR(exact.cost, baseline_cost_poly_oracle(hz, {}, vhat, 1.0, 0.0), 1e-7) << "seed " << seed;
    EXPECT_TRUE(contains_point(minkowski_sum(zs), exact.baseline));
    const auto res = baseline_cost_zono(zs, zero_flex_cost(zs), cap, 0.0, vhat, 1.0);
    EXPECT_GE(res.cost, exact.cost - 1e-9);
    EXPECT_LE(res.cost - exact.cost, 1e-2 * std::abs(exact.cost)) << "seed " << seed;
    EXPECT_TRUE(contains_point(minkowski_sum(zs), res.baseline));
  }
}

TEST(Baseline, FullReservationPinsSaturatedGenerator) {
  const Index N = 3;
  VectorXd bb = VectorXd::Zero(2 * N - 1);
  bb.head(N).setConstant(1.0);
  const Zonotope z(Family::Pe, VectorXd::Zero(N), bb);
  const auto cap = max_capacity_zono({z});
  ASSERT_NEAR(cap.r_max, 1.0, 1e-9);
  const auto res = baseline_cost_zono({z}, zero_flex_cost({z}), cap, 1.0, VectorXd::Ones(N), 1.0);
  EXPECT_NEAR(res.beta_agg.head(N).norm(), 0.0, 1e-12);
  EXPECT_NEAR(res.cost, 0.0, 1e-12);
  const auto free = baseline_cost_zono({z}, zero_flex_cost({z}), cap, 0.0, VectorXd::Ones(N), 1.0);
  EXPECT_NEAR(free.cost, -3.0, 1e-3);
}

TEST(Baseline, RejectsBadEta) {
  const Zonotope z(Family::Box, VectorXd::Zero(2), VectorXd::Ones(2));
  const auto cap = max_capacity_zono({z});
  EXPECT_THROW(baseline_cost_zono({z}, zero_flex_cost({z}), cap, 1.5, VectorXd::Ones(2), 1.0), ConfigError);
  EXPECT_THROW(baseline_cost_zono({z}, zero_flex_cost({z}), cap, -0.1, VectorXd::Ones(2), 1.0), ConfigError);
}

TEST(Baseline, ReservationBoxFitsInsideEachSystem) {
  // The box with semi-edges eta G beta_max^(j) around any baseline realizable
  // from beta_rem^(j) lies inside Z^(j); checked on all box corners.
  for (Index N = 2; N <= 4; ++N) {
    std::mt19937_64 rng(static_cast<unsigned>(200 + N));
    std::vector<HPolytope> ps;
    for (int j = 0; j < 4; ++j) ps.push_back(pev_polytope(rng, N, 1.0));
    const auto zs = fit_all(ps);
    const auto cap = max_capacity_zono(zs);
    const MatrixXd G = zs.front().G();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double eta : {0.25, 0.5, 1.0})
      for (std::size_t j = 0; j < zs.size(); ++j) {
        const VectorXd rem = (zs[j].betabar - eta * cap.beta_max[j].cwiseAbs()).cwiseMax(0.0);
        const VectorXd half = eta * G * cap.beta_max[j];
        for (int t = 0; t < 20; ++t) {
          VectorXd beta(rem.size());
          for (Index i = 0; i < rem.size(); ++i) beta[i] = u(rng) * rem[i];
          const VectorXd p = realize(zs[j], beta);
          for (int s = 0; s < (1 << N); ++s) {
            VectorXd q = p;
            for (Index k = 0; k < N; ++k) q[k] += ((s >> k) & 1) ? half[k] : -half[k];
            EXPECT_TRUE(contains_point(zs[j], q)) << "N " << N << " eta " << eta << " system " << j;
          }
        }
      }
  }
}

TEST(BidCurve, SingleZeroPoint) {
  std::mt19937_64 rng(9);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 3; ++j) ps.push_back(pev_polytope(rng, 4, 1.0));
  const auto zs = fit_all(ps);
  const auto curve = bid_curve(zs, zero_flex_cost(zs), random_prices(rng, 4), 1.0, {0.0});
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_EQ(curve.points[0].offer_cost, 0.0);
  EXPECT_EQ(curve.points[0].r, 0.0);
}

TEST(BidCurve, MonotoneAndThreadIndependent) {
  std::mt19937_64 rng(10);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 8; ++j) ps.push_back(pev_polytope(rng, 6, 1.0));
  const auto zs = fit_all(ps);
  const AggregateCost ac = zero_flex_cost(zs);
  const VectorXd vhat = random_prices(rng, 6);
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.1 * k);
  const auto one = bid_curve(zs, ac, vhat, 1.0, grid, {}, 1);
  const auto four = bid_curve(zs, ac, vhat, 1.0, grid, {}, 4);
  ASSERT_EQ(one.points.size(), grid.size());
  EXPECT_EQ(one.points[0].offer_cost, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_EQ(one.points[k].baseline_cost, four.points[k].baseline_cost);
    EXPECT_NEAR(one.points[k].r, grid[k] * one.r_max, 1e-12);
    if (k > 0) EXPECT_GE(one.points[k].offer_cost, one.points[k - 1].offer_cost - 1e-6);
  }
}

TEST(BidCurve, GridWithoutZeroStillNormalizes) {
  std::mt19937_64 rng(12);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 3; ++j) ps.push_back(pev_polytope(rng, 3, 1.0));
  const auto zs = fit_all(ps);
  const AggregateCost ac = zero_flex_cost(zs);
  const VectorXd vhat = random_prices(rng, 3);
  const auto a = bid_curve(zs, ac, vhat, 1.0, {0.0, 0.5});
  const auto b = bid_curve(zs, ac, vhat, 1.0, {0.5});
  ASSERT_EQ(b.points.size(), 1u);
  EXPECT_NEAR(b.points[0].offer_cost, a.points[1].offer_cost, 1e-12);
  EXPECT_THROW(bid_curve(zs, ac, vhat, 1.0, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(bid_curve(zs, ac, vhat, 1.0, {}), ConfigError);
}

TEST(PolyOracle, ReservationRaisesCost) {
  std::mt19937_64 rng(13);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 4; ++j) ps.push_back(pev_polytope(rng, 4, 1.0));
  const VectorXd vhat = random_prices(rng, 4);
  const double rmax = max_capacity_poly(ps);
  double prev = -optim::kInf;
  for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double c = baseline_cost_poly_oracle(ps, {}, vhat, 1.0, f * rmax);
    EXPECT_GE(c, prev - 1e-9);
    prev = c;
  }
  EXPECT_THROW(baseline_cost_poly_oracle(ps, {}, vhat, 1.0, 1.01 * rmax + 1e-3), InfeasibleError);
}

TEST(Baseline, SubgradientTracksExactWithPiecewiseCosts) {
  std::mt19937_64 rng(21);
  std::vector<HPolytope> ps;
  for (int j = 0; j < 6; ++j) ps.push_back(pev_polytope(rng, 5, 1.0));
  const auto zs = fit_all(ps);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<SystemCost> costs;
  for (const auto& z : zs) {
    std::vector<PwlComponent> flex;
    for (Index i = 0; i < z.g(); ++i) {
      if (z.betabar[i] == 0.0) {
        flex.push_back(PwlComponent::linear(0.0, 0.0));
        continue;
      }
      PwlComponent c;
      const double s0 = u(rng), s1 = s0 + std::abs(u(rng));
      c.lengths = {z.betabar[i], z.betabar[i]};
      c.slopes = {s0, s1};
      c.betabar = z.betabar[i];
      flex.push_back(c);
    }
    costs.push_back(flexibility_only(flex));
  }
  const AggregateCost ac = merge_aggregate_cost(costs);
  const VectorXd vhat = random_prices(rng, 5);
  const auto cap = max_capacity_zono(zs);
  for (double eta : {0.0, 0.5, 1.0}) {
    const auto exact = baseline_cost_zono_exact(zs, ac, cap, eta, vhat, 1.0);
    const double scale = std::max(1.0, std::abs(exact.cost));
    const auto res = baseline_cost_zono(zs, ac, cap, eta, vhat, 1.0);
    EXPECT_GE(res.cost, exact.cost - 1e-9);
    EXPECT_LE(res.cost - exact.cost, 5e-2 * scale) << "eta " << eta;
    SubgradientParams tight;
    tight.eps = 1e-9;
    tight.h = 50;
    tight.max_iters = 20000;
    const auto fine = baseline_cost_zono(zs, ac, cap, eta, vhat, 1.0, tight);
    EXPECT_LE(fine.cost, res.cost + 1e-12);
    EXPECT_LE(fine.cost - exact.cost, 5e-3 * scale) << "eta " << eta;
  }
}
