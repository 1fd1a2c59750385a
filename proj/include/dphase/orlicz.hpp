/*******************************************************************************
* Copyright 2026 The dphase Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#pragma once

#include <dphase/grid.hpp>
#include <dphase/nfunc.hpp>

#include <boost/math/tools/toms748_solve.hpp>

#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

namespace dphase {

// ---------------------------------------------------------------------------
// Cell models: an N-function frozen on a grid, evaluated per cell.
//
// A model provides value(cell, t) and indices() = (lower, upper) exponents
// with min{s^lo, s^hi} m(c, t) <= m(c, s t) <= max{s^lo, s^hi} m(c, t).

template <class M>
concept CellModel = requires(const M& m, std::size_t c, double t) {
  { m.value(c, t) } -> std::convertible_to<double>;
  { m.indices() } -> std::convertible_to<std::pair<double, double>>;
};

struct DoublePhaseCells {
  double p = 2.0, q = 3.0;
  std::vector<double> a;  // per-cell coefficient samples

  double value(std::size_t c, double t) const { return phi_value(p, q, a[c], t); }
  double derivative(std::size_t c, double t) const {
    return phi_derivative(p, q, a[c], t);
  }
  std::pair<double, double> indices() const { return {p, q}; }
};

inline DoublePhaseCells bind(const NFunction& nf, const GridGeometry& g) {
  return {nf.p, nf.q, sample_weight(nf.coeff, g)};
}

/// Conjugate of a double phase model, closed form or brute force.
struct ConjugateCells {
  double p = 2.0, q = 3.0;
  std::vector<double> a;
  ConjugateMode mode;

  double value(std::size_t c, double s) const {
    return conjugate_value(p, q, a[c], s, mode);
  }
  std::pair<double, double> indices() const {
    return {conjugate_exponent(q), conjugate_exponent(p)};
  }
};

inline ConjugateCells bind_conjugate(const NFunction& nf, const GridGeometry& g,
                                     ConjugateMode mode = {}) {
  return {nf.p, nf.q, sample_weight(nf.coeff, g), mode};
}

inline ConjugateCells conjugate_of(const DoublePhaseCells& m,
                                   ConjugateMode mode = {}) {
  return {m.p, m.q, m.a, mode};
}

/// Brute-force Legendre transform of an arbitrary model in t.
template <CellModel Base>
struct LegendreCells {
  Base base;
  LegendreOptions options;

  double value(std::size_t c, double s) const {
    return legendre_sup([&](double t) { return base.value(c, t); }, s, options);
  }
  std::pair<double, double> indices() const {
    const auto [lo, hi] = base.indices();
    return {conjugate_exponent(hi), conjugate_exponent(lo)};
  }
};

/// t -> m(c, t^theta).
template <CellModel Base>
struct PowerComposedCells {
  Base base;
  double theta = 1.0;

  double value(std::size_t c, double t) const {
    return base.value(c, std::pow(t, theta));
  }
  std::pair<double, double> indices() const {
    const auto [lo, hi] = base.indices();
    return {lo * theta, hi * theta};
  }
};

template <CellModel A, CellModel B>
struct SumCells {
  A first;
  B second;

  double value(std::size_t c, double t) const {
    return first.value(c, t) + second.value(c, t);
  }
  std::pair<double, double> indices() const {
    const auto [l1, h1] = first.indices();
    const auto [l2, h2] = second.indices();
    return {std::min(l1, l2), std::max(h1, h2)};
  }
};

// ---------------------------------------------------------------------------
// Modular and Luxemburg norm.

namespace detail {
inline void check_domain(const GridField& f, const std::vector<std::size_t>& cells) {
  for (std::size_t c : cells)
    if (c >= f.size()) throw InputError("domain cell outside the field");
}
}  // namespace detail

/// sum over cells of m(c, |f_c| / lambda) h^n.
template <CellModel M>
double modular(const M& m, const GridField& f,
               const std::vector<std::size_t>& cells, double lambda = 1.0) {
  double s = 0.0;
  for (std::size_t c : cells) {
    const double v = std::abs(f[c]);
    if (v != 0.0) s += m.value(c, v / lambda);
  }
  return s * f.geometry().cell_volume();
}

template <CellModel M>
double modular(const M& m, const GridField& f, const Domain& d) {
  require_grid(f, d.geometry());
  return modular(m, f, d.cells());
}

inline double modular(const NFunction& nf, const GridField& f, const Domain& d) {
  return modular(bind(nf, f.geometry()), f, d);
}

/// inf{lambda > 0 : rho(f / lambda) <= 1}. The root is bracketed through the
/// index sandwich and refined with TOMS 748; iteration stops once the modular
/// residual is below 1e-14 or the bracket is narrower than 1e-12 lambda.
template <CellModel M>
double luxemburg_norm(const M& m, const GridField& f,
                      const std::vector<std::size_t>& cells) {
  detail::check_domain(f, cells);
  const double R = modular(m, f, cells);
  if (R == 0.0) return 0.0;
  if (!std::isfinite(R)) throw InputError("modular is not finite");
  if (R == 1.0) return 1.0;
  const auto [lo, hi] = m.indices();
  double a = std::min(std::pow(R, 1.0 / lo), std::pow(R, 1.0 / hi));
  double b = std::max(std::pow(R, 1.0 / lo), std::pow(R, 1.0 / hi));
  auto F = [&](double lambda) {
    const double r = modular(m, f, cells, lambda) - 1.0;
    return std::abs(r) <= 1e-14 ? 0.0 : r;
  };
  // Guard against index bounds that are only approximate (tabulated models).
  double Fa = F(a), Fb = F(b);
  for (int k = 0; Fa < 0.0 && k < 200; ++k) Fa = F(a *= 0.5);
  for (int k = 0; Fb > 0.0 && k < 200; ++k) Fb = F(b *= 2.0);
  if (Fa == 0.0) return a;
  if (Fb == 0.0) return b;
  if (Fa < 0.0 || Fb > 0.0) throw BracketError("Luxemburg norm not bracketed");
  std::uintmax_t iters = 200;
  auto tol = [](double x, double y) {
    return std::abs(y - x) <= 1e-12 * std::min(std::abs(x), std::abs(y));
  };
  auto r = boost::math::tools::toms748_solve(F, a, b, Fa, Fb, tol, iters);
  // Pick the endpoint with the smaller residual.
  const double ra = std::abs(modular(m, f, cells, r.first) - 1.0);
  const double rb = std::abs(modular(m, f, cells, r.second) - 1.0);
  return ra <= rb ? r.first : r.second;
}

template <CellModel M>
double luxemburg_norm(const M& m, const GridField& f, const Domain& d) {
  require_grid(f, d.geometry());
  return luxemburg_norm(m, f, d.cells());
}

inline double luxemburg_norm(const NFunction& nf, const GridField& f,
                             const Domain& d) {
  return luxemburg_norm(bind(nf, f.geometry()), f, d);
}

/// Dual norm ||g||_{phi*}, brute-force Legendre conjugate by default.
inline double dual_norm(const NFunction& nf, const GridField& g, const Domain& d,
                        ConjugateMode mode = {}) {
  return luxemburg_norm(bind_conjugate(nf, g.geometry(), mode), g, d);
}

// ---------------------------------------------------------------------------
// Hoelder pairing.

inline double holder_pairing(const GridField& f, const GridField& g,
                             const std::vector<std::size_t>& cells) {
  require_same_grid(f, g);
  detail::check_domain(f, cells);
  double s = 0.0;
  for (std::size_t c : cells) s += std::abs(f[c]) * std::abs(g[c]);
  return s * f.geometry().cell_volume();
}

inline double holder_pairing(const NFunction&, const GridField& f,
                             const GridField& g, const Domain& d) {
  require_grid(f, d.geometry());
  return holder_pairing(f, g, d.cells());
}

struct HolderCheck {
  double pairing = 0.0;
  double norm = 0.0;       // ||f||_phi
  double dual = 0.0;       // ||g||_phi*
  double bound = 0.0;      // 2 ||f|| ||g||
  bool holds = true;
};

template <CellModel M, CellModel MStar>
HolderCheck holder_check(const M& m, const MStar& mstar, const GridField& f,
                         const GridField& g,
                         const std::vector<std::size_t>& cells,
                         double rel_tol = 1e-8) {
  HolderCheck h;
  h.pairing = holder_pairing(f, g, cells);
  h.norm = luxemburg_norm(m, f, cells);
  h.dual = luxemburg_norm(mstar, g, cells);
  h.bound = 2.0 * h.norm * h.dual;
  h.holds = h.pairing <= h.bound * (1.0 + rel_tol) + 1e-300;
  return h;
}

inline HolderCheck holder_check(const NFunction& nf, const GridField& f,
                                const GridField& g, const Domain& d,
                                ConjugateMode mode = {}) {
  require_same_grid(f, g);
  return holder_check(bind(nf, f.geometry()),
                      bind_conjugate(nf, f.geometry(), mode), f, g, d.cells());
}

// ---------------------------------------------------------------------------
// Discrete gradient: central differences inside, one-sided on the boundary.

struct Gradient {
  GridField dx, dy, magnitude;
};

inline Gradient discrete_gradient(const GridField& u) {
  const auto& g = u.geometry();
  for (int a = 0; a < g.n; ++a)
    if (g.dims[a] < 2) throw InputError("gradient needs >= 2 cells per axis");
  std::vector<double> gx(u.size()), gy(u.size(), 0.0), mag(u.size());
  const double h = g.spacing;
  auto diff = [&](std::size_t k, std::size_t n, auto at) {
    if (k == 0) return (at(1) - at(0)) / h;
    if (k + 1 == n) return (at(n - 1) - at(n - 2)) / h;
    return (at(k + 1) - at(k - 1)) / (2.0 * h);
  };
  for (std::size_t c = 0; c < u.size(); ++c) {
    const std::size_t i = g.ix(c), j = g.iy(c);
    gx[c] = diff(i, g.dims[0], [&](std::size_t k) { return u[g.index(k, j)]; });
    if (g.n == 2)
      gy[c] = diff(j, g.dims[1], [&](std::size_t k) { return u[g.index(i, k)]; });
    mag[c] = std::hypot(gx[c], gy[c]);
  }
  return {GridField(g, std::move(gx)), GridField(g, std::move(gy)),
          GridField(g, std::move(mag))};
}

}  // namespace dphase
