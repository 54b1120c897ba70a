#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flexpool/polytope.hpp"
#include "support/polytope_oracles.hpp"

using namespace flexpool;
using optim::kInf;

namespace {

PeParams constant_pe(Index N, double t_s, double p_lo, double p_hi, double e_lo, double e_hi, double e0) {
  PeParams pe;
  pe.N = N;
  pe.t_s = t_s;
  pe.p_lo = VectorXd::Constant(N, p_lo);
  pe.p_hi = VectorXd::Constant(N, p_hi);
  pe.e_lo = VectorXd::Constant(N, e_lo);
  pe.e_hi = VectorXd::Constant(N, e_hi);
  pe.e0 = e0;
  return pe;
}

PeParams random_pev(std::mt19937_64& rng, Index N, double t_s) {
  std::uniform_real_distribution<double> cap(20.0, 40.0), soc(0.2, 0.8);
  const double c = cap(rng);
  return constant_pe(N, t_s, -3.0, 3.0, 0.0, c, soc(rng) * c);
}

HPolytope box_polytope(const VectorXd& lo, const VectorXd& hi) {
  const Index N = lo.size();
  HPolytope P;
  P.N = N;
  P.A.resize(2 * N, N);
  P.A << MatrixXd::Identity(N, N), -MatrixXd::Identity(N, N);
  P.b.resize(2 * N);
  P.b << hi, -lo;
  return P;
}

HPolytope pentagon() {
  HPolytope P;
  P.N = 2;
  P.A.resize(5, 2);
  P.A << 1, 0, 0, 1, -1, 0, 0, -1, -1, -1;
  P.b.resize(5);
  P.b << 5, 4, 0, 0, -1;
  return P;
}

// Points of P obtained as LP optima along random directions.
std::vector<VectorXd> extreme_samples(const HPolytope& P, std::mt19937_64& rng, int count) {
  std::normal_distribution<double> nd;
  std::vector<VectorXd> out;
  for (int s = 0; s < count; ++s) {
    optim::LpBuilder lp;
    for (Index k = 0; k < P.N; ++k) lp.add_variable(-kInf, kInf, nd(rng));
    for (Index r = 0; r < P.rows(); ++r) {
      optim::LpBuilder::Row row;
      for (Index k = 0; k < P.N; ++k) row.emplace_back(k, P.A(r, k));
      lp.add_le(row, P.b[r]);
    }
    const auto sol = optim::solve_lp(lp.build());
    if (sol.optimal()) out.push_back(sol.x);
  }
  return out;
}

double lp_extreme(const HPolytope& P, const VectorXd& c) {
  optim::LpBuilder lp;
  for (Index k = 0; k < P.N; ++k) lp.add_variable(-kInf, kInf, c[k]);
  for (Index r = 0; r < P.rows(); ++r) {
    optim::LpBuilder::Row row;
    for (Index k = 0; k < P.N; ++k) row.emplace_back(k, P.A(r, k));
    lp.add_le(row, P.b[r]);
  }
  const auto sol = optim::solve_lp(lp.build());
  EXPECT_TRUE(sol.optimal());
  return sol.objective;
}

}  // namespace

TEST(BuildPePolytope, TwoStepRows) {
  const HPolytope P = build_pe_polytope(constant_pe(2, 1.0, -3.0, 3.0, 0.0, 20.0, 10.0));
  ASSERT_EQ(P.rows(), 8);
  MatrixXd A(8, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1, 1, 0, -1, 0, 1, 1, -1, -1;
  VectorXd b(8);
  b << 3, 3, 3, 3, 10, 10, 10, 10;
  EXPECT_EQ(P.A, A);
  EXPECT_EQ(P.b, b);
}

TEST(BuildPePolytope, KeepsFinalEnergyPair) {
  EXPECT_EQ(build_pe_polytope(constant_pe(7, 2.0, -3.0, 3.0, 0.0, 30.0, 12.0)).rows(), 28);
}

TEST(BuildPePolytope, InfiniteBoundsDropRows) {
  auto pe = constant_pe(3, 1.0, -1.0, 1.0, -kInf, kInf, 0.0);
  EXPECT_EQ(build_pe_polytope(pe).rows(), 6);
}

TEST(BuildPePolytope, LooseEnergyGivesPowerBox) {
  for (Index N : {2, 3}) {
    auto pe = constant_pe(N, 1.0, -2.0, 1.0, -100.0, 100.0, 0.0);
    pe.p_hi[0] = 4.0;
    const auto verts = oracle::enumerate_vertices(build_pe_polytope(pe));
    ASSERT_EQ(verts.size(), std::size_t{1} << N);
    for (const auto& v : verts)
      for (Index k = 0; k < N; ++k)
        EXPECT_TRUE(v[k] == pe.p_lo[k] || std::abs(v[k] - pe.p_hi[k]) < 1e-12);
  }
}

TEST(BuildPePolytope, DetectsEmptySet) {
  // Must gain 30 kWh in two hours at 3 kW.
  auto pe = constant_pe(2, 1.0, -3.0, 3.0, 0.0, 40.0, 5.0);
  pe.e_lo[1] = 35.0;
  EXPECT_THROW(build_pe_polytope(pe), EmptyPolytope);
  auto bad = constant_pe(2, 1.0, 3.0, -3.0, 0.0, 40.0, 5.0);
  EXPECT_THROW(build_pe_polytope(bad), EmptyPolytope);
}

TEST(BuildPePolytope, MembershipMatchesDirectEvaluation) {
  std::mt19937_64 rng(17);
  const PeParams pe = random_pev(rng, 12, 2.0);
  const HPolytope P = build_pe_polytope(pe);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int inside = 0;
  for (int s = 0; s < 10000; ++s) {
    VectorXd p(12);
    // Shrink toward zero so that a useful share of the samples is feasible.
    const double shrink = (s % 4 + 1) / 4.0;
    for (Index k = 0; k < 12; ++k) p[k] = shrink * u(rng);
    const bool direct = oracle::satisfies_pe(pe, p, 0.0);
    inside += direct;
    ASSERT_EQ(contains(P, p), direct) << "sample " << s;
  }
  EXPECT_GT(inside, 500);
  EXPECT_LT(inside, 9500);
  for (const auto& p : extreme_samples(P, rng, 200)) EXPECT_TRUE(oracle::satisfies_pe(pe, p, 1e-7));
}

TEST(BuildPePolytope, SampledTrajectoriesAreContained) {
  std::mt19937_64 rng(23);
  for (int sys = 0; sys < 10; ++sys) {
    const PeParams pe = random_pev(rng, 12, 2.0);
    const HPolytope P = build_pe_polytope(pe);
    const oracle::PeTrajectorySampler sampler(pe);
    for (int s = 0; s < 1000; ++s) {
      const VectorXd p = sampler.sample(rng);
      ASSERT_TRUE(oracle::satisfies_pe(pe, p, 1e-9));
      ASSERT_TRUE(contains(P, p));
    }
  }
}

TEST(AddRampConstraints, ZeroRampForcesConstantPower) {
  const HPolytope P = build_pe_polytope(constant_pe(4, 1.0, -3.0, 3.0, -50.0, 50.0, 0.0));
  RampParams ramp{VectorXd::Zero(3), VectorXd::Zero(3)};
  const HPolytope R = add_ramp_constraints(P, ramp, 1.0);
  for (Index k = 1; k < 4; ++k) {
    VectorXd c = VectorXd::Zero(4);
    c[k] = 1.0;
    c[0] = -1.0;
    EXPECT_NEAR(lp_extreme(R, c), 0.0, 1e-12);
    EXPECT_NEAR(lp_extreme(R, -c), 0.0, 1e-12);
  }
}

TEST(AddRampConstraints, InfiniteRampLeavesPolytope) {
  const HPolytope P = build_pe_polytope(constant_pe(3, 1.0, -3.0, 3.0, -50.0, 50.0, 0.0));
  RampParams ramp{VectorXd::Constant(2, -kInf), VectorXd::Constant(2, kInf)};
  const HPolytope R = add_ramp_constraints(P, ramp, 1.0);
  EXPECT_EQ(R.A, P.A);
  EXPECT_EQ(R.b, P.b);
}

TEST(AddRampConstraints, TwoStepReach) {
  HPolytope P = box_polytope(VectorXd::Zero(3), VectorXd::Constant(3, 10.0));
  const HPolytope R = add_ramp_constraints(P, {VectorXd::Constant(2, -2.0), VectorXd::Constant(2, 2.0)}, 1.0);
  HPolytope pinned = R;
  pinned.A.conservativeResize(R.rows() + 1, 3);
  pinned.b.conservativeResize(R.rows() + 1);
  pinned.A.row(R.rows()) << 1, 0, 0;
  pinned.b[R.rows()] = 0.0;
  EXPECT_NEAR(-lp_extreme(pinned, Eigen::Vector3d(0, 0, -1)), 4.0, 1e-12);
}

TEST(AddRampConstraints, NeverEnlarges) {
  std::mt19937_64 rng(5);
  const HPolytope P = build_pe_polytope(random_pev(rng, 6, 1.0));
  const HPolytope R = add_ramp_constraints(P, {VectorXd::Constant(5, -1.0), VectorXd::Constant(5, 0.5)}, 1.0);
  for (const auto& p : extreme_samples(R, rng, 100)) EXPECT_TRUE(contains(P, p));
}

TEST(AddStateConstraints, IntegratorReproducesEnergyRows) {
  const Index N = 5;
  const double t_s = 0.5;
  const auto pe = constant_pe(N, t_s, -3.0, 3.0, 2.0, 9.0, 4.0);
  const HPolytope full = build_pe_polytope(pe);
  auto power_only = pe;
  power_only.e_lo.setConstant(-kInf);
  power_only.e_hi.setConstant(kInf);
  StateModel m;
  m.x1 = VectorXd::Constant(1, pe.e0);
  for (Index k = 0; k < N; ++k) {
    m.A.push_back(MatrixXd::Ones(1, 1));
    m.C.push_back(MatrixXd::Constant(1, 1, t_s));
    m.x_lo.push_back(VectorXd::Constant(1, 2.0));
    m.x_hi.push_back(VectorXd::Constant(1, 9.0));
  }
  const HPolytope S = add_state_constraints(build_pe_polytope(power_only), m);
  ASSERT_EQ(S.rows(), full.rows());
  EXPECT_LE((S.A - full.A).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((S.b - full.b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AddStateConstraints, MemorylessDynamics) {
  const Index N = 3;
  const HPolytope P = box_polytope(VectorXd::Constant(N, -10.0), VectorXd::Constant(N, 10.0));
  StateModel m;
  m.x1 = VectorXd::Zero(1);
  for (Index k = 0; k < N; ++k) {
    m.A.push_back(MatrixXd::Zero(1, 1));
    m.B.push_back(MatrixXd::Ones(1, 1));
    m.u.push_back(VectorXd::Constant(1, 1.0 + k));
    m.C.push_back(MatrixXd::Constant(1, 1, 2.0));
    m.x_lo.push_back(VectorXd::Constant(1, 0.0));
    m.x_hi.push_back(VectorXd::Constant(1, 5.0));
  }
  const HPolytope S = add_state_constraints(P, m);
  // 0 <= (1 + k) + 2 p_k <= 5
  for (Index k = 0; k < N; ++k) {
    const VectorXd e = VectorXd::Unit(N, k);
    EXPECT_NEAR(-lp_extreme(S, -e), (4.0 - k) / 2.0, 1e-12);
    EXPECT_NEAR(lp_extreme(S, e), -(1.0 + k) / 2.0, 1e-12);
  }
}

TEST(AddStateConstraints, ThermalModelMatchesRollout) {
  const Index N = 4;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StateModel m;
  m.x1 = VectorXd::Constant(1, 20.0);
  for (Index k = 0; k < N; ++k) {
    m.A.push_back(MatrixXd::Constant(1, 1, 0.9));
    m.B.push_back(MatrixXd::Constant(1, 1, 0.1));
    m.u.push_back(VectorXd::Constant(1, 5.0 + 10.0 * u(rng)));
    m.C.push_back(MatrixXd::Constant(1, 1, 0.5));
    m.x_lo.push_back(VectorXd::Constant(1, 17.0 + u(rng)));
    m.x_hi.push_back(VectorXd::Constant(1, 21.0 + 2.0 * u(rng)));
  }
  const HPolytope P = box_polytope(VectorXd::Constant(N, -6.0), VectorXd::Constant(N, 6.0));
  const HPolytope S = add_state_constraints(P, m);
  std::uniform_real_distribution<double> pu(-6.0, 6.0);
  int inside = 0;
  for (int s = 0; s < 1000; ++s) {
    VectorXd p(N);
    for (Index k = 0; k < N; ++k) p[k] = pu(rng);
    double x = m.x1[0];
    bool ok = true;
    for (Index k = 0; k < N; ++k) {
      x = 0.9 * x + 0.1 * m.u[static_cast<std::size_t>(k)][0] + 0.5 * p[k];
      ok = ok && x >= m.x_lo[static_cast<std::size_t>(k)][0] && x <= m.x_hi[static_cast<std::size_t>(k)][0];
    }
    inside += ok;
    EXPECT_EQ(contains(S, p), ok) << "sample " << s;
  }
  EXPECT_GT(inside, 10);
}

TEST(AddStateConstraints, RejectsBadShapes) {
  const HPolytope P = box_polytope(VectorXd::Zero(2), VectorXd::Ones(2));
  StateModel m;
  m.x1 = VectorXd::Zero(2);
  m.A.push_back(MatrixXd::Identity(1, 1));
  m.C.push_back(MatrixXd::Ones(2, 1));
  m.x_lo.push_back(VectorXd::Zero(2));
  m.x_hi.push_back(VectorXd::Ones(2));
  EXPECT_THROW(add_state_constraints(P, m), DimensionMismatch);
}

TEST(Contains, BasicCases) {
  const HPolytope P = box_polytope(Eigen::Vector2d(0, 0), Eigen::Vector2d(5, 4));
  EXPECT_TRUE(contains(P, Eigen::Vector2d(2.5, 2)));
  EXPECT_FALSE(contains(P, Eigen::Vector2d(6, 2)));
  const Cube cube = max_inscribed_cube(pentagon());
  EXPECT_TRUE(contains(pentagon(), cube.center));
}

TEST(SupportWidth, BoxAndPentagon) {
  const HPolytope box = box_polytope(Eigen::Vector2d(0, 0), Eigen::Vector2d(5, 4));
  const Eigen::Vector2d diag = Eigen::Vector2d(1, 1) / std::sqrt(2.0);
  EXPECT_NEAR(support_width(box, Eigen::Vector2d(1, 0)), 5.0, 1e-12);
  EXPECT_NEAR(support_width(box, diag), 9.0 / std::sqrt(2.0), 1e-12);
  double vmax = -kInf, vmin = kInf;
  for (const auto& v : oracle::enumerate_vertices(pentagon())) {
    vmax = std::max(vmax, diag.dot(v));
    vmin = std::min(vmin, diag.dot(v));
  }
  EXPECT_NEAR(support_width(pentagon(), diag), vmax - vmin, 1e-12);
  EXPECT_NEAR(support_width(pentagon(), diag), 8.0 / std::sqrt(2.0), 1e-12);
}

TEST(SupportWidth, SymmetricInDirection) {
  std::mt19937_64 rng(2);
  const HPolytope P = build_pe_polytope(random_pev(rng, 8, 2.0));
  std::normal_distribution<double> nd;
  for (int s = 0; s < 20; ++s) {
    VectorXd f(8);
    for (Index k = 0; k < 8; ++k) f[k] = nd(rng);
    f.normalize();
    EXPECT_EQ(support_width(P, f), support_width(P, -f));
  }
}

TEST(SupportWidth, UnboundedDirection) {
  HPolytope P;
  P.N = 2;
  P.A = Eigen::RowVector2d(1, 0);
  P.b = VectorXd::Ones(1);
  EXPECT_THROW(support_width(P, Eigen::Vector2d(0, 1)), UnboundedError);
}

TEST(SupportWidth, MatchesSeparateExtremes) {
  std::mt19937_64 rng(4);
  const HPolytope P = build_pe_polytope(random_pev(rng, 10, 2.4));
  std::normal_distribution<double> nd;
  for (int s = 0; s < 20; ++s) {
    VectorXd f(10);
    for (Index k = 0; k < 10; ++k) f[k] = nd(rng);
    f.normalize();
    EXPECT_NEAR(support_width(P, f), -lp_extreme(P, -f) - lp_extreme(P, f), 1e-9);
  }
}

TEST(SupportWidth, ConflictingSingletonRows) {
  HPolytope P = box_polytope(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  P.b[2] = -2.0;  // x >= 2 against x <= 1
  EXPECT_THROW(support_width(P, Eigen::Vector2d(0, 1)), EmptyPolytope);
}

TEST(MaxInscribedCube, BoxAndPoint) {
  const Cube c = max_inscribed_cube(box_polytope(Eigen::Vector2d(-2, -3), Eigen::Vector2d(2, 3)));
  EXPECT_NEAR(c.half_edge, 2.0, 1e-12);
  const Cube p = max_inscribed_cube(box_polytope(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)));
  EXPECT_NEAR(p.half_edge, 0.0, 1e-12);
  EXPECT_NEAR((p.center - Eigen::Vector2d(1, 1)).norm(), 0.0, 1e-12);
  const Cube h = max_inscribed_cube(box_polytope(VectorXd::Zero(4), Eigen::Vector4d(3, 1.5, 2, 7)));
  EXPECT_NEAR(h.half_edge, 0.75, 1e-12);
}

TEST(MaxInscribedCube, PentagonMatchesGridSearch) {
  const HPolytope P = pentagon();
  double best = 0.0;
  for (int i = 0; i <= 500; ++i)
    for (int j = 0; j <= 400; ++j) {
      const Eigen::Vector2d c(0.01 * i, 0.01 * j);
      double r = kInf;
      for (Index row = 0; row < P.rows(); ++row) {
        // Largest r with all four corners inside this halfspace.
        double worst = -kInf;
        for (int sx : {-1, 1})
          for (int sy : {-1, 1}) worst = std::max(worst, P.A(row, 0) * sx + P.A(row, 1) * sy);
        if (worst > 0.0) r = std::min(r, (P.b[row] - P.A.row(row).dot(c)) / worst);
      }
      best = std::max(best, r);
    }
  EXPECT_NEAR(max_inscribed_cube(P).half_edge, best, 1e-3);
}

TEST(MaxInscribedBox, BoxIsItself) {
  const HPolytope P = box_polytope(Eigen::Vector3d(-1, 0, 2), Eigen::Vector3d(3, 1, 6));
  const Box b = max_inscribed_box(P, max_inscribed_cube(P));
  EXPECT_LE((b.lo - Eigen::Vector3d(-1, 0, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((b.hi - Eigen::Vector3d(3, 1, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MaxInscribedBox, PointStaysPoint) {
  const HPolytope P = box_polytope(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2));
  const Box b = max_inscribed_box(P, max_inscribed_cube(P));
  EXPECT_LE((b.hi - b.lo).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MaxInscribedBox, PentagonMatchesGridSearch) {
  const HPolytope P = pentagon();
  const Cube cube = max_inscribed_cube(P);
  const Box box = max_inscribed_box(P, cube);
  const Eigen::Vector2d clo = cube.center.array() - cube.half_edge;
  const Eigen::Vector2d chi = cube.center.array() + cube.half_edge;
  EXPECT_TRUE((box.lo.array() <= clo.array() + 1e-12).all());
  EXPECT_TRUE((box.hi.array() >= chi.array() - 1e-12).all());
  // Every box on a 0.1 grid that contains the cube and has all corners in P.
  double best = 0.0;
  const double h = 0.1;
  for (int a = 0; a <= 50; ++a)
    for (int b = 0; b <= 40; ++b)
      for (int c = a; c <= 50; ++c)
        for (int d = b; d <= 40; ++d) {
          const Eigen::Vector2d lo(a * h, b * h), hi(c * h, d * h);
          if ((lo.array() > clo.array() + 1e-9).any() || (hi.array() < chi.array() - 1e-9).any()) continue;
          bool ok = true;
          for (int sx : {0, 1})
            for (int sy : {0, 1}) ok = ok && contains(P, Eigen::Vector2d(sx ? hi[0] : lo[0], sy ? hi[1] : lo[1]));
          if (ok) best = std::max(best, (hi - lo).sum());
        }
  EXPECT_NEAR((box.hi - box.lo).sum(), best, 1e-3);
  for (int sx : {0, 1})
    for (int sy : {0, 1})
      EXPECT_TRUE(contains(P, Eigen::Vector2d(sx ? box.hi[0] : box.lo[0], sy ? box.hi[1] : box.lo[1])));
}
