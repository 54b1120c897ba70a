#pragma once

// Zonotopes Z(G, c, betabar) = { c + G beta : |beta| <= betabar } over two
// generator families: the PE family (N axis generators followed by N-1
// normalized consecutive differences) and the plain box family (G = I).

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"
#include "flexpool/optim/projection.hpp"
#include "flexpool/polytope.hpp"

namespace flexpool {

enum class Family { Pe, Box };

inline const char* to_string(Family f) { return f == Family::Pe ? "pe" : "box"; }

inline Family family_from_string(const std::string& s) {
  if (s == "pe") return Family::Pe;
  if (s == "box") return Family::Box;
  throw FamilyMismatch("unknown generator family '" + s + "'");
}

inline Index num_generators(Family f, Index N) { return f == Family::Pe ? 2 * N - 1 : N; }

/// N x (2N-1): e_1..e_N, then (e_{j+1} - e_j)/sqrt(2) for j = 1..N-1.
inline MatrixXd pe_generators(Index N) {
  if (N < 1) throw DimensionMismatch("pe_generators: N must be positive");
  MatrixXd G = MatrixXd::Zero(N, 2 * N - 1);
  const double s = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < N; ++i) G(i, i) = 1.0;
  for (Index j = 0; j + 1 < N; ++j) {
    G(j, N + j) = -s;
    G(j + 1, N + j) = s;
  }
  return G;
}

/// N x N(N+1)/2: columns (e_j + ... + e_k)/sqrt(k-j+1), 1 <= j <= k <= N, in
/// lexicographic (j, k) order.
inline MatrixXd facet_normals(Index N) {
  if (N < 1) throw DimensionMismatch("facet_normals: N must be positive");
  MatrixXd F = MatrixXd::Zero(N, N * (N + 1) / 2);
  Index col = 0;
  for (Index j = 0; j < N; ++j)
    for (Index k = j; k < N; ++k, ++col) F.col(col).segment(j, k - j + 1).setConstant(1.0 / std::sqrt(double(k - j + 1)));
  return F;
}

/// Immutable per-(family, N) data: generators, membership normals, |F'G| and
/// the affine/box projector for G.
struct FamilyData {
  Family family;
  Index N;
  MatrixXd G;
  MatrixXd F;      // normals used by the membership test
  MatrixXd absFG;  // |F' G|
  optim::AffineBoxProjector projector;

  FamilyData(Family fam, Index n)
      : family(fam),
        N(n),
        G(fam == Family::Pe ? pe_generators(n) : MatrixXd::Identity(n, n)),
        F(fam == Family::Pe ? facet_normals(n) : MatrixXd::Identity(n, n)),
        absFG((F.transpose() * G).cwiseAbs()),
        projector(G) {}
};

/// Write-once cache shared across threads.
inline std::shared_ptr<const FamilyData> family_data(Family family, Index N) {
  static std::mutex mu;
  static std::map<std::pair<int, Index>, std::shared_ptr<const FamilyData>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{static_cast<int>(family), N}];
  if (!slot) slot = std::make_shared<const FamilyData>(family, N);
  return slot;
}

struct Zonotope {
  Family family = Family::Pe;
  VectorXd c;
  VectorXd betabar;

  Zonotope() = default;
  Zonotope(Family fam, VectorXd center, VectorXd bounds) : family(fam), c(std::move(center)), betabar(std::move(bounds)) {
    validate();
  }

  Index N() const { return c.size(); }
  Index g() const { return betabar.size(); }
  MatrixXd G() const { return data()->G; }
  /// Shared family data; hold on to the pointer in hot loops.
  std::shared_ptr<const FamilyData> data() const { return family_data(family, N()); }

  void validate() const {
    if (c.size() < 1) throw DimensionMismatch("Zonotope: empty center");
    if (betabar.size() != num_generators(family, c.size()))
      throw DimensionMismatch("Zonotope: betabar length does not match the generator family");
    if (!c.allFinite() || !betabar.allFinite()) throw DimensionMismatch("Zonotope: non-finite entries");
    if ((betabar.array() < 0.0).any()) throw NegativeBeta("Zonotope: negative betabar entry");
  }

  static Zonotope point(Family fam, const VectorXd& c) {
    return Zonotope(fam, c, VectorXd::Zero(num_generators(fam, c.size())));
  }
};

/// Index of the first facet-normal direction i with |f_i'(p-c)| > |f_i'G| betabar.
inline std::optional<Index> first_violated_facet(const Zonotope& Z, const MatrixXd& F, const MatrixXd& absFG,
                                                 const VectorXd& p) {
  if (p.size() != Z.N() || F.rows() != Z.N() || absFG.cols() != Z.g() || absFG.rows() != F.cols())
    throw DimensionMismatch("contains_point: dimension mismatch");
  const VectorXd lhs = (F.transpose() * (p - Z.c)).cwiseAbs();
  const VectorXd rhs = absFG * Z.betabar;
  for (Index i = 0; i < lhs.size(); ++i)
    if (lhs[i] > rhs[i] + detail::scaled_tol(rhs[i])) return i;
  return std::nullopt;
}

inline std::optional<Index> first_violated_facet(const Zonotope& Z, const VectorXd& p) {
  const auto d = Z.data();
  return first_violated_facet(Z, d->F, d->absFG, p);
}

/// The q-inequality test |F'(p-c)| <= |F'G| betabar. F must match the family.
inline bool contains_point(const Zonotope& Z, const MatrixXd& F, const VectorXd& p) {
  const MatrixXd absFG = (F.transpose() * Z.data()->G).cwiseAbs();
  return !first_violated_facet(Z, F, absFG, p).has_value();
}

inline bool contains_point(const Zonotope& Z, const VectorXd& p) { return !first_violated_facet(Z, p).has_value(); }

/// A c + |A G| betabar <= b.
inline bool is_inside_polytope(const Zonotope& Z, const HPolytope& P) {
  if (P.N != Z.N()) throw DimensionMismatch("is_inside_polytope: dimension mismatch");
  const auto d = Z.data();
  const VectorXd lhs = P.A * Z.c + (P.A * d->G).cwiseAbs() * Z.betabar;
  for (Index r = 0; r < P.rows(); ++r)
    if (lhs[r] > P.b[r] + detail::scaled_tol(P.b[r])) return false;
  return true;
}

inline Zonotope minkowski_sum(const std::vector<Zonotope>& zs) {
  if (zs.empty()) throw DimensionMismatch("minkowski_sum: empty list");
  Zonotope out = zs.front();
  for (std::size_t j = 1; j < zs.size(); ++j) {
    if (zs[j].family != out.family || zs[j].N() != out.N())
      throw FamilyMismatch("minkowski_sum: members differ in family or horizon");
    out.c += zs[j].c;
    out.betabar += zs[j].betabar;
  }
  return out;
}

/// Zagg + sum(add) - sum(remove). The net change is formed first, so adding and
/// removing the same members in one call leaves Zagg bit-identical.
inline Zonotope update_aggregate(const Zonotope& Zagg, const std::vector<Zonotope>& add,
                                 const std::vector<Zonotope>& remove) {
  VectorXd dc = VectorXd::Zero(Zagg.N());
  VectorXd db = VectorXd::Zero(Zagg.g());
  auto check = [&](const Zonotope& z) {
    if (z.family != Zagg.family || z.N() != Zagg.N())
      throw FamilyMismatch("update_aggregate: member differs in family or horizon");
  };
  for (const auto& z : add) {
    check(z);
    dc += z.c;
    db += z.betabar;
  }
  for (const auto& z : remove) {
    check(z);
    dc -= z.c;
    db -= z.betabar;
  }
  Zonotope out = Zagg;
  out.c += dc;
  out.betabar += db;
  for (Index i = 0; i < out.g(); ++i) {
    if (out.betabar[i] < -optim::kTolFeas * std::max(1.0, Zagg.betabar[i]))
      throw NegativeBeta("update_aggregate: removal drives betabar[" + std::to_string(i) + "] negative");
    if (out.betabar[i] < 0.0) out.betabar[i] = 0.0;
  }
  return out;
}

/// c + G beta.
inline VectorXd realize(const Zonotope& Z, const VectorXd& beta) {
  if (beta.size() != Z.g()) throw DimensionMismatch("realize: beta length does not match generators");
  for (Index i = 0; i < beta.size(); ++i)
    if (std::abs(beta[i]) > Z.betabar[i] + detail::scaled_tol(Z.betabar[i]))
      throw BetaOutOfRange("realize: |beta[" + std::to_string(i) + "]| exceeds betabar");
  return Z.c + Z.data()->G * beta;
}

/// Halfspace form of Z: +-f_i'p <= +-f_i'c + |f_i'G| betabar over the family normals.
inline HPolytope to_hpolytope(const Zonotope& Z) {
  const auto data = Z.data();
  const FamilyData& d = *data;
  const Index q = d.F.cols();
  HPolytope P;
  P.N = Z.N();
  P.A.resize(2 * q, P.N);
  P.b.resize(2 * q);
  const VectorXd Fc = d.F.transpose() * Z.c;
  const VectorXd w = d.absFG * Z.betabar;
  P.A.topRows(q) = d.F.transpose();
  P.A.bottomRows(q) = -d.F.transpose();
  P.b.head(q) = Fc + w;
  P.b.tail(q) = -Fc + w;
  return P;
}

}  // namespace flexpool
