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

#include <dphase/cubes.hpp>
#include <dphase/grid.hpp>
#include <dphase/weights.hpp>

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace dphase {

/// phi(x, t) = t^p / p + a(x) t^q / q with 1 < p < q.
struct NFunction {
  double p = 2.0;
  double q = 3.0;
  WeightSpec coeff;

  NFunction() = default;
  NFunction(double p_, double q_, WeightSpec a = WeightSpec::zero())
      : p(p_), q(q_), coeff(std::move(a)) {
    if (!(p > 1.0) || !(q > p) || !std::isfinite(q))
      throw InputError("exponents must satisfy 1 < p < q < inf");
  }

  double a(const Point& x) const { return eval_weight(coeff, x); }
};

// Scalar kernels with the coefficient already evaluated.

inline double phi_value(double p, double q, double a, double t) {
  if (t == 0.0) return 0.0;
  double v = std::pow(t, p) / p;
  if (a != 0.0) v += a * std::pow(t, q) / q;
  return v;
}

inline double phi_derivative(double p, double q, double a, double t) {
  if (t == 0.0) return 0.0;
  double v = std::pow(t, p - 1.0);
  if (a != 0.0) v += a * std::pow(t, q - 1.0);
  return v;
}

inline double phi_second_derivative(double p, double q, double a, double t) {
  if (t == 0.0)
    return p < 2.0 ? std::numeric_limits<double>::infinity()
                   : (p == 2.0 ? 1.0 : 0.0);
  double v = (p - 1.0) * std::pow(t, p - 2.0);
  if (a != 0.0) v += a * (q - 1.0) * std::pow(t, q - 2.0);
  return v;
}

/// min{s^p'/p', a^(1-q') s^q'} with 0^(1-q') = inf.
inline double conjugate_closed(double p, double q, double a, double s) {
  if (s == 0.0) return 0.0;
  const double pc = conjugate_exponent(p);
  const double first = std::pow(s, pc) / pc;
  if (a == 0.0) return first;
  const double qc = conjugate_exponent(q);
  return std::min(first, std::pow(a, 1.0 - qc) * std::pow(s, qc));
}

namespace detail {
inline void check_t(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw InputError("argument must be a finite nonnegative number");
}
inline double coefficient_at(const NFunction& nf, const Point& x) {
  const double a = nf.a(x);
  if (std::isnan(a) || a < 0.0) throw DomainError("coefficient undefined here");
  return a;
}
}  // namespace detail

inline double eval_phi(const NFunction& nf, const Point& x, double t) {
  detail::check_t(t);
  const double a = detail::coefficient_at(nf, x);
  return phi_value(nf.p, nf.q, a, t);
}

inline double eval_phi_prime(const NFunction& nf, const Point& x, double t) {
  detail::check_t(t);
  const double a = detail::coefficient_at(nf, x);
  return phi_derivative(nf.p, nf.q, a, t);
}

// ---------------------------------------------------------------------------
// Conjugates.

struct LegendreOptions {
  std::size_t nodes = 2048;
  double t_min = 1e-8;
  double t_max = 16.0;
  bool auto_expand = true;  // double t_max while the argmax is the last node
  bool polish = true;       // refine the grid argmax with Brent's method
};

enum class ConjugateKind { ClosedFormEquivalent, BruteForceLegendre };

struct ConjugateMode {
  ConjugateKind kind = ConjugateKind::BruteForceLegendre;
  LegendreOptions legendre;

  static ConjugateMode closed_form() {
    return {ConjugateKind::ClosedFormEquivalent, {}};
  }
  static ConjugateMode brute_force(LegendreOptions o = {}) {
    if (o.nodes < 3 || !(o.t_min > 0.0) || !(o.t_max > o.t_min))
      throw InputError("Legendre grid needs >= 3 nodes and 0 < t_min < t_max");
    return {ConjugateKind::BruteForceLegendre, o};
  }
};

/// sup_{t >= 0} (s t - f(t)) for convex f with f(0) = 0, clamped at 0.
/// The sup is searched over the geometric grid t_i in [t_min, t_max];
/// s t - f(t) is unimodal along the grid, so the argmax is located by
/// bisection on the discrete slope, then optionally polished.
template <class F>
double legendre_sup(F&& f, double s, const LegendreOptions& o = {}) {
  if (!(s >= 0.0) || !std::isfinite(s))
    throw InputError("conjugate argument must be finite and >= 0");
  if (s == 0.0) return 0.0;
  double t_lo = o.t_min, t_hi = o.t_max;
  const std::size_t N = o.nodes;
  auto g = [&](double t) { return s * t - f(t); };
  for (int attempt = 0;; ++attempt) {
    const double ratio = std::log(t_hi / t_lo) / static_cast<double>(N - 1);
    auto node = [&](std::size_t i) {
      return i + 1 == N ? t_hi : t_lo * std::exp(ratio * static_cast<double>(i));
    };
    std::size_t lo = 0, hi = N - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (g(node(mid)) < g(node(mid + 1)))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo + 1 == N) {
      if (!o.auto_expand)
        throw BracketError("Legendre cutoff " + std::to_string(o.t_max) +
                           " too small: maximiser on the last grid node");
      if (t_hi > 1e300 || attempt > 4000)
        throw BracketError("Legendre search did not bracket the maximiser");
      t_hi *= 2.0;
      continue;
    }
    if (lo == 0 && t_lo > 1e-300 && attempt < 4000) {
      t_lo *= 1e-4;
      continue;
    }
    double best = g(node(lo));
    if (o.polish) {
      // Brent in log t keeps the tolerance relative for tiny maximisers.
      const double a = std::log(lo == 0 ? 0.5 * node(0) : node(lo - 1));
      const double b = std::log(node(lo + 1));
      auto r = boost::math::tools::brent_find_minima(
          [&](double u) { return -g(std::exp(u)); }, a, b,
          std::numeric_limits<double>::digits / 2 + 4);
      best = std::max(best, -r.second);
    }
    return std::max(best, 0.0);
  }
}

inline double conjugate_value(double p, double q, double a, double s,
                              const ConjugateMode& mode) {
  if (mode.kind == ConjugateKind::ClosedFormEquivalent)
    return conjugate_closed(p, q, a, s);
  return legendre_sup([&](double t) { return phi_value(p, q, a, t); }, s,
                      mode.legendre);
}

inline double conjugate(const NFunction& nf, const ConjugateMode& mode,
                        const Point& x, double s) {
  detail::check_t(s);
  return conjugate_value(nf.p, nf.q, detail::coefficient_at(nf, x), s, mode);
}

// ---------------------------------------------------------------------------
// Averaged N-function t -> mean_Q phi(., t) = t^p/p + abar t^q/q, tabulated.

class TabulatedNFunction {
 public:
  TabulatedNFunction(double p, double q, double abar, std::size_t nodes = 512,
                     double t_lo = 1e-6, double t_hi = 1e6)
      : p_(p), q_(q), abar_(abar) {
    if (nodes < 2 || !(t_lo > 0.0) || !(t_hi > t_lo))
      throw InputError("bad tabulation range");
    lt_.resize(nodes);
    lv_.resize(nodes);
    const double a = std::log(t_lo), b = std::log(t_hi);
    for (std::size_t i = 0; i < nodes; ++i) {
      lt_[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(nodes - 1);
      lv_[i] = std::log(phi_value(p, q, abar, std::exp(lt_[i])));
    }
  }

  double mean_coefficient() const { return abar_; }
  double p() const { return p_; }
  double q() const { return q_; }

  /// Log-log linear interpolation; linear extrapolation in log-log space.
  double operator()(double t) const {
    detail::check_t(t);
    if (t == 0.0) return 0.0;
    const double x = std::log(t);
    const std::size_t k = segment(lt_, x);
    const double w = (x - lt_[k]) / (lt_[k + 1] - lt_[k]);
    return std::exp(lv_[k] + w * (lv_[k + 1] - lv_[k]));
  }

  /// Inverse of operator(), located by bisection over the monotone table.
  double inverse(double v) const {
    detail::check_t(v);
    if (v == 0.0) return 0.0;
    const double y = std::log(v);
    const std::size_t k = segment(lv_, y);
    const double w = (y - lv_[k]) / (lv_[k + 1] - lv_[k]);
    return std::exp(lt_[k] + w * (lt_[k + 1] - lt_[k]));
  }

  /// Exact value of the averaged function (no tabulation).
  double exact(double t) const { return phi_value(p_, q_, abar_, t); }

 private:
  static std::size_t segment(const std::vector<double>& xs, double x) {
    std::size_t lo = 0, hi = xs.size() - 1;
    if (x <= xs[1]) return 0;
    if (x >= xs[hi - 1]) return hi - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (xs[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  double p_, q_, abar_;
  std::vector<double> lt_, lv_;
};

inline TabulatedNFunction averaged_nfunction(const NFunction& nf,
                                             const std::vector<std::size_t>& cells,
                                             const GridGeometry& g) {
  if (cells.empty()) throw DomainError("cannot average over an empty set");
  double s = 0.0;
  for (std::size_t c : cells) s += detail::coefficient_at(nf, g.center(c));
  return TabulatedNFunction(nf.p, nf.q, s / static_cast<double>(cells.size()));
}

inline TabulatedNFunction averaged_nfunction(const NFunction& nf, const Cube& Q,
                                             const GridGeometry& g) {
  if (Q.side <= 0) throw DomainError("empty cube");
  if (!cube_inside(Q, g)) throw DomainError("cube leaves the coefficient grid");
  return averaged_nfunction(nf, cube_cells(Q, g), g);
}

inline TabulatedNFunction averaged_nfunction(const NFunction& nf,
                                             const Domain& d) {
  return averaged_nfunction(nf, d.cells(), d.geometry());
}

// ---------------------------------------------------------------------------
// psi(x, t) = phi(x, t^theta).

struct PowerComposed {
  NFunction nf;
  double theta = 1.0;

  /// Convex (and an N-function) iff p theta > 1.
  bool convex() const { return nf.p * theta > 1.0; }

  double operator()(const Point& x, double t) const {
    detail::check_t(t);
    return phi_value(nf.p, nf.q, detail::coefficient_at(nf, x),
                     std::pow(t, theta));
  }
};

inline PowerComposed power_compose(const NFunction& nf, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw InputError("theta must be positive");
  return {nf, theta};
}

}  // namespace dphase
