#pragma once

// Inner approximation of a polytope by a zonotope of a fixed generator family:
// maximize w' betabar subject to A c + |A G| betabar <= b, betabar >= 0, where
// w = (2/q') sum_i |f_i' G| / Delta_P,i weights the facet-distance ratios.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "flexpool/errors.hpp"
#include "flexpool/optim/lp.hpp"
#include "flexpool/polytope.hpp"
#include "flexpool/zonotope.hpp"

namespace flexpool {

/// Polytope extent Delta_P,i along every column of F.
struct WidthProfile {
  VectorXd deltas;
  MatrixXd F;
};

struct FitOptions {
  bool guard_degeneracy = true;
  double weight_floor = 1e-9;
};

inline WidthProfile polytope_widths(const HPolytope& P, const MatrixXd& F) {
  if (F.rows() != P.N) throw DimensionMismatch("polytope_widths: F rows must equal N");
  WidthProfile w{VectorXd(F.cols()), F};
  auto session = detail::support_session(P);
  for (Index i = 0; i < F.cols(); ++i) w.deltas[i] = detail::support_width(session, F.col(i));
  return w;
}

inline WidthProfile polytope_widths(const HPolytope& P) { return polytope_widths(P, facet_normals(P.N)); }

namespace detail {

// Row vector w over the generators; dropped directions contribute nothing.
inline VectorXd fit_weights(const MatrixXd& G, const WidthProfile& widths, double floor) {
  VectorXd w = VectorXd::Zero(G.cols());
  Index kept = 0;
  for (Index i = 0; i < widths.deltas.size(); ++i) {
    if (widths.deltas[i] <= floor) continue;
    ++kept;
    w += (widths.F.col(i).transpose() * G).cwiseAbs().transpose() / widths.deltas[i];
  }
  if (kept > 0) w *= 2.0 / static_cast<double>(kept);
  return w;
}

}  // namespace detail

inline Zonotope fit_zonotope(const HPolytope& P, Family family, const WidthProfile& widths,
                             const FitOptions& opts = {}) {
  const Index N = P.N;
  if (widths.F.rows() != N || widths.deltas.size() != widths.F.cols())
    throw DimensionMismatch("fit_zonotope: width profile does not match the polytope");
  if (!(opts.weight_floor > 0.0)) throw DimensionMismatch("fit_zonotope: weight_floor must be positive");
  const auto fam = family_data(family, N);
  const MatrixXd& G = fam->G;
  const Index g = G.cols();
  const VectorXd w = detail::fit_weights(G, widths, opts.weight_floor);

  optim::LpBuilder lp;
  lp.add_variables(N, -optim::kInf, optim::kInf);
  for (Index i = 0; i < g; ++i) lp.add_variable(0.0, optim::kInf, -w[i]);
  const MatrixXd absAG = (P.A * G).cwiseAbs();
  for (Index r = 0; r < P.rows(); ++r) {
    optim::LpBuilder::Row row;
    for (Index k = 0; k < N; ++k)
      if (P.A(r, k) != 0.0) row.emplace_back(k, P.A(r, k));
    for (Index i = 0; i < g; ++i)
      if (absAG(r, i) != 0.0) row.emplace_back(N + i, absAG(r, i));
    lp.add_le(row, P.b[r]);
  }
  if (opts.guard_degeneracy) {
    // B_max inside the axis-generator core box [c - betabar_axis, c + betabar_axis].
    const Box bmax = max_inscribed_box(P, max_inscribed_cube(P));
    for (Index k = 0; k < N; ++k) {
      lp.add_le({{k, 1.0}, {N + k, -1.0}}, bmax.lo[k]);
      lp.add_ge({{k, 1.0}, {N + k, 1.0}}, bmax.hi[k]);
    }
  }
  const auto sol = optim::solve_lp(lp.build());
  if (sol.status == optim::LpStatus::Infeasible) throw EmptyPolytope("fit_zonotope: fitting problem infeasible");
  if (sol.status == optim::LpStatus::Unbounded) throw UnboundedError("fit_zonotope: polytope is unbounded");
  Zonotope Z(family, sol.x.head(N), sol.x.tail(g).cwiseMax(0.0));
  if (!is_inside_polytope(Z, P)) throw NumericalFailure("fit_zonotope: fitted zonotope leaves the polytope");
  return Z;
}

inline Zonotope fit_zonotope(const HPolytope& P, const WidthProfile& widths, const FitOptions& opts = {}) {
  return fit_zonotope(P, Family::Pe, widths, opts);
}

/// Same fit with G = I; the objective still scores all facet-normal directions.
inline Zonotope fit_box(const HPolytope& P, const WidthProfile& widths, const FitOptions& opts = {}) {
  return fit_zonotope(P, Family::Box, widths, opts);
}

/// Mean of Delta_Z,i / Delta_P,i over directions with Delta_P,i > floor, Delta_Z = 2|F'G| betabar.
inline double approximation_quality(const Zonotope& Z, const WidthProfile& widths, double floor = 1e-9) {
  if (widths.F.rows() != Z.N()) throw DimensionMismatch("approximation_quality: dimension mismatch");
  const VectorXd dz = 2.0 * (widths.F.transpose() * Z.data()->G).cwiseAbs() * Z.betabar;
  double sum = 0.0;
  Index kept = 0;
  for (Index i = 0; i < dz.size(); ++i) {
    if (widths.deltas[i] <= floor) continue;
    sum += dz[i] / widths.deltas[i];
    ++kept;
  }
  return kept == 0 ? 1.0 : sum / static_cast<double>(kept);
}

}  // namespace flexpool
