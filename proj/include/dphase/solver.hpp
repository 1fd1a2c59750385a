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
#include <dphase/muckenhoupt.hpp>
#include <dphase/nfunc.hpp>
#include <dphase/orlicz.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dphase {

// ---------------------------------------------------------------------------
// Node lattice.
//
// Unknowns live on the nodes of a uniform lattice over the box. A lattice is
// stored as a GridGeometry whose cell centres are the nodes, so the outer
// ring of "cells" sits on the boundary and carries the Dirichlet data.

/// Lattice with `intervals` intervals of length `length / intervals` per
/// axis, first node at `lower`.
inline GridGeometry node_lattice(int n, std::size_t intervals, double lower, double length) {
  if (intervals < 2) throw InputError("lattice needs >= 2 intervals per axis");
  const double h = length / static_cast<double>(intervals);
  return GridGeometry(n, {intervals + 1, n == 2 ? intervals + 1 : 1},
                      {lower - 0.5 * h, n == 2 ? lower - 0.5 * h : 0.0}, h);
}

inline bool is_boundary_node(const GridGeometry& g, std::size_t c) {
  const std::size_t i = g.ix(c), j = g.iy(c);
  if (i == 0 || i + 1 == g.dims[0]) return true;
  return g.n == 2 && (j == 0 || j + 1 == g.dims[1]);
}

enum class Optimizer { GradientDescentArmijo, NonlinearCG, DampedNewton };

inline std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::GradientDescentArmijo: return "gradient_descent";
    case Optimizer::NonlinearCG: return "nonlinear_cg";
    case Optimizer::DampedNewton: return "damped_newton";
  }
  return "?";
}

struct SolveConfig {
  GridGeometry grid;            // node lattice, see node_lattice
  NFunction nf;
  GridField boundary;           // Dirichlet data; only boundary nodes are read
  std::optional<GridField> initial;  // interior initial guess (default 0)
  std::vector<double> eps_schedule{1e-2, 1e-4, 1e-6, 1e-8};
  Optimizer optimizer = Optimizer::NonlinearCG;
  double energy_tol = 1e-12;    // relative energy decrease per step
  double residual_tol = 1e-6;   // max normalised hat residual
  std::size_t max_iterations = 20000;  // over all continuation levels

  double eps_floor() const { return eps_schedule.back(); }

  void validate() const {
    if (grid.dims[0] < 3 || (grid.n == 2 && grid.dims[1] < 3))
      throw InputError("lattice needs an interior node");
    require_grid(boundary, grid);
    if (initial) require_grid(*initial, grid);
    if (!(energy_tol > 0.0) || !(residual_tol > 0.0))
      throw InputError("solver tolerances must be positive");
    if (eps_schedule.empty()) throw InputError("empty regularisation schedule");
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
      if (!(eps_schedule[k] >= 0.0) || !std::isfinite(eps_schedule[k]))
        throw InputError("regularisation must be finite and >= 0");
      if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1]))
        throw InputError("regularisation schedule must strictly decrease");
    }
    if (max_iterations == 0) throw InputError("max_iterations must be positive");
  }
};

// ---------------------------------------------------------------------------
// P1 energy on the lattice.

namespace detail {

inline double ipow(double x, double e) {
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  if (e == 0.0) return 1.0;
  return std::pow(x, e);
}

/// phi'(rho) / (rho + eps) and its companion (phi''(rho)(rho+eps) - phi'(rho)) / (rho+eps)^3
/// for the regularised integrand r -> phi(sqrt(r^2 + eps^2) - eps).
struct Weights {
  double w = 0.0;
  double beta = 0.0;
};

inline double power_ratio(double rho, double e) {  // rho^e at rho = 0 conventions
  if (rho > 0.0) return ipow(rho, e);
  return e == 0.0 ? 1.0 : (e > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
}

/// (rho + drho)^e - rho^e without cancellation.
inline double power_difference(double rho, double drho, double e) {
  if (drho == 0.0) return 0.0;
  if (rho == 0.0) return std::pow(std::max(drho, 0.0), e);
  return std::pow(rho, e) * std::expm1(e * std::log1p(std::max(drho / rho, -1.0)));
}

inline Weights integrand_weights(double p, double q, double a, double r, double eps) {
  Weights out;
  const double rho = eps > 0.0 ? std::sqrt(r * r + eps * eps) - eps : r;
  const double d = rho + eps;
  if (d == 0.0) {
    out.w = power_ratio(0.0, p - 2.0) + (a != 0.0 ? a * power_ratio(0.0, q - 2.0) : 0.0);
    out.beta = 0.0;
    return out;
  }
  const double d1 = ipow(rho, p - 1.0) + (a != 0.0 ? a * ipow(rho, q - 1.0) : 0.0);
  out.w = d1 / d;
  if (rho == 0.0) {
    out.beta = 0.0;
    return out;
  }
  // phi''(rho) d - phi'(rho) expanded to avoid cancellation
  double num = (p - 2.0) * ipow(rho, p - 1.0) + (p - 1.0) * eps * ipow(rho, p - 2.0);
  if (a != 0.0)
    num += a * ((q - 2.0) * ipow(rho, q - 1.0) + (q - 1.0) * eps * ipow(rho, q - 2.0));
  out.beta = num / (d * d * d);
  return out;
}

}  // namespace detail

class LatticeEnergy {
 public:
  struct Element {
    std::array<std::size_t, 3> node{};
    std::array<Point, 3> c{};  // gradient = sum_k c_k u[node_k]
    int count = 0;
    double area = 0.0;
    double a = 0.0;
    Point centroid{0.0, 0.0};
  };

  LatticeEnergy(const GridGeometry& g, const NFunction& nf) : g_(g), p_(nf.p), q_(nf.q) {
    const double h = g.spacing;
    auto node_point = [&](std::size_t c) { return g.center(c); };
    auto coeff = [&](const Point& x) {
      const double a = nf.a(x);
      if (!std::isfinite(a) || a < 0.0)
        throw DomainError("coefficient not finite at an element centroid");
      return a;
    };
    if (g.n == 1) {
      for (std::size_t i = 0; i + 1 < g.dims[0]; ++i) {
        Element e;
        e.count = 2;
        e.node = {i, i + 1, 0};
        e.c[0] = {-1.0 / h, 0.0};
        e.c[1] = {1.0 / h, 0.0};
        e.area = h;
        e.centroid = {0.5 * (node_point(i)[0] + node_point(i + 1)[0]), 0.0};
        e.a = coeff(e.centroid);
        elems_.push_back(e);
      }
    } else {
      for (std::size_t j = 0; j + 1 < g.dims[1]; ++j)
        for (std::size_t i = 0; i + 1 < g.dims[0]; ++i) {
          const std::size_t A = g.index(i, j), B = g.index(i + 1, j),
                            C = g.index(i + 1, j + 1), D = g.index(i, j + 1);
          Element t1;
          t1.count = 3;
          t1.node = {A, B, C};
          t1.c = {Point{-1.0 / h, 0.0}, Point{1.0 / h, -1.0 / h}, Point{0.0, 1.0 / h}};
          Element t2;
          t2.count = 3;
          t2.node = {A, C, D};
          t2.c = {Point{0.0, -1.0 / h}, Point{1.0 / h, 0.0}, Point{-1.0 / h, 1.0 / h}};
          for (Element* e : {&t1, &t2}) {
            e->area = 0.5 * h * h;
            Point m{0.0, 0.0};
            for (int k = 0; k < 3; ++k) {
              m[0] += node_point(e->node[k])[0] / 3.0;
              m[1] += node_point(e->node[k])[1] / 3.0;
            }
            e->centroid = m;
            e->a = coeff(m);
            elems_.push_back(*e);
          }
        }
    }
    // node -> (element, local) adjacency for gathers
    start_.assign(g.size() + 1, 0);
    for (const auto& e : elems_)
      for (int k = 0; k < e.count; ++k) ++start_[e.node[k] + 1];
    for (std::size_t c = 0; c < g.size(); ++c) start_[c + 1] += start_[c];
    adj_.resize(start_.back());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t e = 0; e < elems_.size(); ++e)
      for (int k = 0; k < elems_[e].count; ++k)
        adj_[fill[elems_[e].node[k]]++] = {e, k};
    boundary_.resize(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) boundary_[c] = is_boundary_node(g, c);
  }

  const GridGeometry& geometry() const { return g_; }
  const std::vector<Element>& elements() const { return elems_; }
  bool boundary(std::size_t c) const { return boundary_[c] != 0; }
  double p() const { return p_; }
  double q() const { return q_; }
  /// Integral of one hat function (h^n).
  double hat_mass() const { return g_.cell_volume(); }

  Point element_gradient(const Element& e, const std::vector<double>& u) const {
    Point gr{0.0, 0.0};
    for (int k = 0; k < e.count; ++k) {
      gr[0] += e.c[k][0] * u[e.node[k]];
      gr[1] += e.c[k][1] * u[e.node[k]];
    }
    return gr;
  }

  double integrand(const Element& e, double r, double eps) const {
    const double rho = eps > 0.0 ? std::sqrt(r * r + eps * eps) - eps : r;
    return phi_value(p_, q_, e.a, rho);
  }

  double value(const std::vector<double>& u, double eps) const {
    std::vector<double> part(blocks(), 0.0);
    parallel_for(part.size(), [&](std::size_t b) {
      double s = 0.0;
      for (std::size_t e = b * kBlock; e < std::min(elems_.size(), (b + 1) * kBlock); ++e)
        s += elems_[e].area * integrand(elems_[e], norm(element_gradient(elems_[e], u)), eps);
      part[b] = s;
    });
    double s = 0.0;
    for (double x : part) s += x;
    return s;
  }

  /// E(u + alpha d) - E(u), summed per element without cancellation so that
  /// decreases far below the rounding level of E itself stay visible.
  double difference(const std::vector<double>& u, const std::vector<double>& d,
                    double alpha, double eps) const {
    std::vector<double> part(blocks(), 0.0);
    parallel_for(part.size(), [&](std::size_t b) {
      double s = 0.0;
      for (std::size_t e = b * kBlock; e < std::min(elems_.size(), (b + 1) * kBlock); ++e) {
        const auto& el = elems_[e];
        const Point g0 = element_gradient(el, u), dg = element_gradient(el, d);
        const Point g1{g0[0] + alpha * dg[0], g0[1] + alpha * dg[1]};
        const double r0 = norm(g0), r1 = norm(g1);
        // r1^2 - r0^2 = alpha dg . (2 g0 + alpha dg)
        const double dsq = alpha * (dg[0] * (2.0 * g0[0] + alpha * dg[0]) +
                                    dg[1] * (2.0 * g0[1] + alpha * dg[1]));
        double rho0 = r0, drho;
        if (eps > 0.0) {
          const double s0 = std::hypot(r0, eps), s1 = std::hypot(r1, eps);
          rho0 = s0 - eps;
          drho = dsq / (s0 + s1);
        } else {
          drho = r0 + r1 > 0.0 ? dsq / (r0 + r1) : 0.0;
        }
        s += el.area * (detail::power_difference(rho0, drho, p_) / p_ +
                        (el.a != 0.0 ? el.a * detail::power_difference(rho0, drho, q_) / q_ : 0.0));
      }
      part[b] = s;
    });
    double s = 0.0;
    for (double x : part) s += x;
    return s;
  }

  /// dE/du on every node, zero on the boundary.
  std::vector<double> gradient(const std::vector<double>& u, double eps) const {
    std::vector<Point> flux(elems_.size());
    parallel_for(blocks(), [&](std::size_t b) {
      for (std::size_t e = b * kBlock; e < std::min(elems_.size(), (b + 1) * kBlock); ++e) {
        const Point gr = element_gradient(elems_[e], u);
        const double r = norm(gr);
        const double w = r == 0.0 && eps == 0.0
                             ? 0.0
                             : detail::integrand_weights(p_, q_, elems_[e].a, r, eps).w;
        flux[e] = {elems_[e].area * w * gr[0], elems_[e].area * w * gr[1]};
      }
    });
    return gather(flux);
  }

  /// Per-element data for Hessian-vector products at u.
  struct Hessian {
    std::vector<Point> grad;
    std::vector<double> w, beta;
  };

  Hessian hessian(const std::vector<double>& u, double eps) const {
    Hessian H;
    H.grad.resize(elems_.size());
    H.w.resize(elems_.size());
    H.beta.resize(elems_.size());
    parallel_for(blocks(), [&](std::size_t b) {
      for (std::size_t e = b * kBlock; e < std::min(elems_.size(), (b + 1) * kBlock); ++e) {
        H.grad[e] = element_gradient(elems_[e], u);
        const auto wt = detail::integrand_weights(p_, q_, elems_[e].a, norm(H.grad[e]), eps);
        H.w[e] = std::isfinite(wt.w) ? wt.w : 1e300;
        H.beta[e] = std::isfinite(wt.beta) ? wt.beta : 0.0;
      }
    });
    return H;
  }

  std::vector<double> hess_vec(const Hessian& H, const std::vector<double>& v) const {
    std::vector<Point> flux(elems_.size());
    parallel_for(blocks(), [&](std::size_t b) {
      for (std::size_t e = b * kBlock; e < std::min(elems_.size(), (b + 1) * kBlock); ++e) {
        const Point dg = element_gradient(elems_[e], v);
        const Point& gr = H.grad[e];
        const double gd = gr[0] * dg[0] + gr[1] * dg[1];
        const double A = elems_[e].area;
        flux[e] = {A * (H.w[e] * dg[0] + H.beta[e] * gd * gr[0]),
                   A * (H.w[e] * dg[1] + H.beta[e] * gd * gr[1])};
      }
    });
    return gather(flux);
  }

  std::vector<double> hess_diag(const Hessian& H) const {
    std::vector<double> d(g_.size(), 0.0);
    for (std::size_t c = 0; c < g_.size(); ++c) {
      if (boundary_[c]) continue;
      double s = 0.0;
      for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
        const auto [e, l] = adj_[k];
        const Point& cl = elems_[e].c[static_cast<std::size_t>(l)];
        const double gc = H.grad[e][0] * cl[0] + H.grad[e][1] * cl[1];
        s += elems_[e].area * (H.w[e] * (cl[0] * cl[0] + cl[1] * cl[1]) + H.beta[e] * gc * gc);
      }
      d[c] = s;
    }
    return d;
  }

  /// Weak-form pairing sum_T |T| A(grad v) . grad psi with the unregularised flux.
  double pairing(const std::vector<double>& v, const std::vector<double>& psi) const {
    double s = 0.0;
    for (const auto& e : elems_) {
      const Point gv = element_gradient(e, v), gp = element_gradient(e, psi);
      const double r = norm(gv);
      if (r == 0.0) continue;
      const double w = detail::integrand_weights(p_, q_, e.a, r, 0.0).w;
      s += e.area * w * (gv[0] * gp[0] + gv[1] * gp[1]);
    }
    return s;
  }

  /// max over interior nodes of |dE/du_i| / (integral of the hat).
  double residual(const std::vector<double>& u, double eps) const {
    const auto gr = gradient(u, eps);
    double m = 0.0;
    for (double x : gr) m = std::max(m, std::abs(x));
    return m / hat_mass();
  }

 private:
  static constexpr std::size_t kBlock = 4096;
  std::size_t blocks() const { return (elems_.size() + kBlock - 1) / kBlock; }

  std::vector<double> gather(const std::vector<Point>& flux) const {
    std::vector<double> out(g_.size(), 0.0);
    const std::size_t nb = (g_.size() + kBlock - 1) / kBlock;
    parallel_for(nb, [&](std::size_t b) {
      for (std::size_t c = b * kBlock; c < std::min(g_.size(), (b + 1) * kBlock); ++c) {
        if (boundary_[c]) continue;
        double s = 0.0;
        for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
          const auto [e, l] = adj_[k];
          const Point& cl = elems_[e].c[static_cast<std::size_t>(l)];
          s += flux[e][0] * cl[0] + flux[e][1] * cl[1];
        }
        out[c] = s;
      }
    });
    return out;
  }

  GridGeometry g_;
  double p_, q_;
  std::vector<Element> elems_;
  std::vector<std::size_t> start_;
  std::vector<std::pair<std::size_t, int>> adj_;
  std::vector<char> boundary_;
};

namespace detail {
inline void require_boundary_match(const SolveConfig& cfg, const GridField& v) {
  require_grid(v, cfg.grid);
  for (std::size_t c = 0; c < v.size(); ++c)
    if (is_boundary_node(cfg.grid, c) && v[c] != cfg.boundary[c])
      throw PreconditionError("field does not match the Dirichlet data");
}
}  // namespace detail

/// Discrete energy at the floor of the regularisation schedule.
inline double energy(const SolveConfig& cfg, const GridField& v) {
  cfg.validate();
  detail::require_boundary_match(cfg, v);
  return LatticeEnergy(cfg.grid, cfg.nf).value(v.values(), cfg.eps_floor());
}

/// Gradient of energy(cfg, .) with respect to the interior nodal values.
inline GridField energy_gradient(const SolveConfig& cfg, const GridField& v) {
  cfg.validate();
  require_grid(v, cfg.grid);
  return GridField(cfg.grid, LatticeEnergy(cfg.grid, cfg.nf).gradient(v.values(), cfg.eps_floor()));
}

/// Weak-form pairing of v against a test field vanishing on the boundary.
inline double weak_residual(const SolveConfig& cfg, const GridField& v, const GridField& psi) {
  require_grid(v, cfg.grid);
  require_grid(psi, cfg.grid);
  for (std::size_t c = 0; c < psi.size(); ++c)
    if (is_boundary_node(cfg.grid, c) && psi[c] != 0.0)
      throw PreconditionError("test field must vanish on the boundary");
  return LatticeEnergy(cfg.grid, cfg.nf).pairing(v.values(), psi.values());
}

/// max over interior hat functions of |pairing| / integral of the hat.
inline double hat_residual(const SolveConfig& cfg, const GridField& v) {
  require_grid(v, cfg.grid);
  return LatticeEnergy(cfg.grid, cfg.nf).residual(v.values(), 0.0);
}

// ---------------------------------------------------------------------------
// Minimisation.

struct IterationRecord {
  std::size_t iteration = 0;
  double eps = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  double step = 0.0;
};

struct Solution {
  SolveConfig config;
  GridField u;
  double energy = 0.0;            // regularised at the floor
  double residual = 0.0;          // hat residual of the unregularised weak form
  double regularized_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> log;

  /// Accepted energies never increase within one regularisation level.
  bool energy_log_monotone() const {
    for (std::size_t k = 1; k < log.size(); ++k)
      if (log[k].eps == log[k - 1].eps && log[k].energy > log[k - 1].energy) return false;
    return true;
  }
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

/// Jacobi-preconditioned CG on the interior for H d = -g; stops on negative
/// curvature or at the relative tolerance.
inline std::vector<double> newton_direction(const LatticeEnergy& E, const LatticeEnergy::Hessian& H,
                                            const std::vector<double>& g, double rel_tol) {
  const std::size_t n = g.size();
  const auto diag = E.hess_diag(H);
  std::vector<double> x(n, 0.0), r(n), z(n), p(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = -g[k];
  auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = diag[k] > 0.0 ? in[k] / diag[k] : 0.0;
  };
  precond(r, z);
  p = z;
  double rz = dot(r, z);
  const double r0 = std::sqrt(dot(r, r));
  if (r0 == 0.0) return x;
  for (std::size_t it = 0; it < n + 100; ++it) {
    const auto Ap = E.hess_vec(H, p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      if (it == 0) return r;  // steepest descent
      break;
    }
    const double alpha = rz / pAp;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    if (std::sqrt(dot(r, r)) <= rel_tol * r0) break;
    precond(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  return x;
}

}  // namespace detail

inline Solution minimize(const SolveConfig& cfg) {
  cfg.validate();
  const LatticeEnergy E(cfg.grid, cfg.nf);
  const auto& g = cfg.grid;
  std::vector<double> u(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    u[c] = E.boundary(c) ? cfg.boundary[c] : (cfg.initial ? (*cfg.initial)[c] : 0.0);

  Solution sol;
  sol.config = cfg;
  const double c1 = 1e-4, shrink = 0.5;
  std::size_t iter = 0;
  bool floor_converged = false;
  for (std::size_t level = 0; level < cfg.eps_schedule.size(); ++level) {
    const double eps = cfg.eps_schedule[level];
    const bool floor = level + 1 == cfg.eps_schedule.size();
    const double tol = floor ? cfg.residual_tol : std::max(cfg.residual_tol, eps);
    double f = E.value(u, eps);
    auto grad = E.gradient(u, eps);
    double res = detail::max_abs(grad) / E.hat_mass();
    sol.log.push_back({iter, eps, f, res, 0.0});
    std::vector<double> d, grad_prev;
    const double g0 = std::max(detail::max_abs(grad), 1e-300);
    double last_decrease = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (iter < cfg.max_iterations) {
      if (res < tol && last_decrease <= cfg.energy_tol * std::max(1.0, std::abs(f))) {
        converged = true;
        break;
      }
      if (res == 0.0) {
        converged = true;
        break;
      }
      // search direction
      std::optional<LatticeEnergy::Hessian> H;
      if (cfg.optimizer == Optimizer::DampedNewton) {
        H = E.hessian(u, eps);
        const double eta = std::min(0.1, detail::max_abs(grad) / g0);
        d = detail::newton_direction(E, *H, grad, std::max(eta, 1e-10));
      } else if (cfg.optimizer == Optimizer::NonlinearCG && !d.empty()) {
        double num = 0.0, den = detail::dot(grad_prev, grad_prev);
        for (std::size_t k = 0; k < u.size(); ++k) num += grad[k] * (grad[k] - grad_prev[k]);
        const double beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;  // PR+
        for (std::size_t k = 0; k < u.size(); ++k) d[k] = -grad[k] + beta * d[k];
      } else {
        d.assign(u.size(), 0.0);
        for (std::size_t k = 0; k < u.size(); ++k) d[k] = -grad[k];
      }
      double slope = detail::dot(grad, d);
      if (!(slope < 0.0)) {
        for (std::size_t k = 0; k < u.size(); ++k) d[k] = -grad[k];
        slope = detail::dot(grad, d);
      }
      // initial step: Newton takes 1, otherwise the quadratic model along d
      double alpha = 1.0;
      if (cfg.optimizer != Optimizer::DampedNewton) {
        const auto Hd = E.hess_vec(E.hessian(u, eps), d);
        const double curv = detail::dot(d, Hd);
        alpha = curv > 0.0 ? -slope / curv : 1.0;
        if (!std::isfinite(alpha) || alpha <= 0.0) alpha = 1.0;
      }
      // Armijo backtracking
      double change = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        change = E.difference(u, d, alpha, eps);
        if (change <= c1 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= shrink;
      }
      if (!accepted || !(change < 0.0)) {
        // no representable decrease left
        converged = res < tol;
        break;
      }
      ++iter;
      last_decrease = -change;
      for (std::size_t k = 0; k < u.size(); ++k) u[k] += alpha * d[k];
      f += change;
      grad_prev = std::move(grad);
      grad = E.gradient(u, eps);
      res = detail::max_abs(grad) / E.hat_mass();
      sol.log.push_back({iter, eps, f, res, alpha});
    }
    if (floor) {
      floor_converged = converged;
      sol.energy = E.value(u, eps);
      sol.regularized_residual = res;
    }
  }
  sol.u = GridField(g, u);
  sol.iterations = iter;
  sol.residual = E.residual(u, 0.0);
  sol.converged = floor_converged;
  return sol;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace detail {
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace detail

inline std::string config_hash(const SolveConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << describe(cfg.nf) << '|' << cfg.grid.n << ' ' << cfg.grid.dims[0] << ' '
     << cfg.grid.dims[1] << ' ' << cfg.grid.origin[0] << ' ' << cfg.grid.origin[1] << ' '
     << cfg.grid.spacing << '|' << to_string(cfg.optimizer) << '|' << cfg.energy_tol << ' '
     << cfg.residual_tol << ' ' << cfg.max_iterations << '|';
  for (double e : cfg.eps_schedule) os << e << ' ';
  os << '|';
  for (std::size_t c = 0; c < cfg.grid.size(); ++c)
    if (is_boundary_node(cfg.grid, c)) os << cfg.boundary[c] << ' ';
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(os.str())));
  return buf;
}

inline nlohmann::json checkpoint_metadata(const Solution& sol) {
  return {{"configHash", config_hash(sol.config)},
          {"energy", sol.energy},
          {"residual", sol.residual},
          {"regularizedResidual", sol.regularized_residual},
          {"epsFloor", sol.config.eps_floor()},
          {"iterations", sol.iterations},
          {"converged", sol.converged},
          {"optimizer", to_string(sol.config.optimizer)}};
}

/// Writes <stem>.grid and <stem>.json.
inline void write_checkpoint(const Solution& sol, const std::string& stem) {
  write_grid_file(stem + ".grid", sol.u);
  std::ofstream js(stem + ".json");
  if (!js) throw InputError("cannot write " + stem + ".json");
  js << checkpoint_metadata(sol).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Regularity diagnostics on a solution.

namespace detail {

inline std::vector<std::size_t> elements_in_ball(const LatticeEnergy& E, const Point& c, double r) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < E.elements().size(); ++e)
    if (distance(E.elements()[e].centroid, c) < r) out.push_back(e);
  return out;
}

inline void require_inside(const GridGeometry& g, const Point& c, double r) {
  const double h = g.spacing;
  for (int a = 0; a < g.n; ++a)
    if (c[a] - r < g.origin[a] + 0.5 * h - 1e-12 ||
        c[a] + r > g.origin[a] + (static_cast<double>(g.dims[a]) - 0.5) * h + 1e-12)
      throw DomainError("ball leaves the solution domain");
}

/// Smallest lambda >= 1 with sum_T |T| phi(a_T, |grad v|_T / lambda) <= 1 over elems.
inline double element_normalization(const LatticeEnergy& E, const std::vector<double>& u,
                                    const std::vector<std::size_t>& elems) {
  if (elems.empty()) return 1.0;
  const double area = E.elements()[elems.front()].area;
  DoublePhaseCells m{E.p(), E.q(), {}};
  std::vector<double> mags;
  for (std::size_t e : elems) {
    m.a.push_back(E.elements()[e].a);
    mags.push_back(norm(E.element_gradient(E.elements()[e], u)));
  }
  const GridGeometry flat(1, {mags.size(), 1}, {0.0, 0.0}, area);
  const GridField f(flat, mags);
  std::vector<std::size_t> all(mags.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  if (modular(m, f, all) <= 1.0 + 1e-12) return 1.0;
  return luxemburg_norm(m, f, all);
}

}  // namespace detail

/// int_{B_r} phi(x, |grad u_lambda|) / int_{B_R} phi(x, u_lambda / (R - r)),
/// u_lambda = (u - lambda)_+; nullopt when the right side vanishes.
inline std::optional<double> caccioppoli_check(const Solution& sol, const Point& center,
                                               double r, double R, double lambda) {
  if (!(r > 0.0 && R > r)) throw InputError("need 0 < r < R");
  const auto& g = sol.u.geometry();
  detail::require_inside(g, center, R);
  const LatticeEnergy E(g, sol.config.nf);
  std::vector<double> ul(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) ul[c] = std::max(0.0, sol.u[c] - lambda);
  double lhs = 0.0;
  for (std::size_t e : detail::elements_in_ball(E, center, r)) {
    const auto& el = E.elements()[e];
    lhs += el.area * phi_value(E.p(), E.q(), el.a, norm(E.element_gradient(el, ul)));
  }
  double rhs = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!(distance(g.center(c), center) < R) || ul[c] == 0.0) continue;
    const double a = sol.config.nf.a(g.center(c));
    rhs += g.cell_volume() * phi_value(E.p(), E.q(), a, ul[c] / (R - r));
  }
  if (rhs == 0.0) return std::nullopt;
  return lhs / rhs;
}

struct LInftyCheck {
  double scale = 1.0;  // u was divided by this
  double sup = 0.0;    // ||(u - <u>_{2B})_+||_{L^inf(B)}
  double lhs = 0.0;    // M_{2B}phi(sup / r)
  double rhs = 0.0;    // mean_{2B} phi(x, (u - <u>)_+ / r)
  double ratio = 0.0;  // lhs / rhs
  double inverse_ratio = 0.0;  // sup / (r (M_{2B}phi)^{-1}(rhs))
};

inline LInftyCheck linfty_check(const Solution& sol, const Point& center, double r) {
  const auto& g = sol.u.geometry();
  detail::require_inside(g, center, 2.0 * r);
  const LatticeEnergy E(g, sol.config.nf);
  LInftyCheck out;
  out.scale = detail::element_normalization(E, sol.u.values(),
                                            detail::elements_in_ball(E, center, 2.0 * r));
  const GridField v = sol.u.scaled(1.0 / out.scale);
  const Domain B2 = Domain::ball(g, center, 2.0 * r);
  const Domain B = Domain::ball(g, center, r);
  const double avg = mean(v, B2);
  for (std::size_t c : B.cells()) out.sup = std::max(out.sup, v[c] - avg);
  const auto M = averaged_nfunction(sol.config.nf, B2);
  out.lhs = M.exact(out.sup / r);
  double s = 0.0;
  for (std::size_t c : B2.cells())
    s += phi_value(E.p(), E.q(), sol.config.nf.a(g.center(c)), std::max(0.0, v[c] - avg) / r);
  out.rhs = s / static_cast<double>(B2.count());
  if (out.rhs > 0.0) {
    out.ratio = out.lhs / out.rhs;
    out.inverse_ratio = out.sup / (r * M.inverse(out.rhs));
  }
  return out;
}

struct OscillationRow {
  double radius = 0.0;
  double osc = 0.0;
};

struct RegularityDiagnostics {
  std::vector<double> caccioppoli;
  std::vector<double> linfty;
  std::vector<OscillationRow> oscillation;
  std::vector<double> theta;  // osc_{j+1} / osc_j
  double beta = 0.0;          // fitted Hoelder exponent
  double r_squared = 0.0;
  bool truncated = false;

  bool monotone(double tol) const {
    for (std::size_t j = 1; j < oscillation.size(); ++j)
      if (oscillation[j].osc > oscillation[j - 1].osc + tol) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json osc = nlohmann::json::array();
    for (const auto& row : oscillation) osc.push_back({{"radius", row.radius}, {"osc", row.osc}});
    return {{"caccioppoli", caccioppoli}, {"linfty", linfty}, {"oscillation", osc},
            {"theta", theta}, {"beta", beta}, {"rSquared", r_squared},
            {"truncated", truncated}};
  }
};

/// Oscillation over B(center, r0 4^-j), j < levels, with a least-squares fit
/// of log osc against log radius. Levels whose oscillation falls below
/// `floor_tol` (or whose ball holds a single node) end the table.
inline RegularityDiagnostics holder_diagnostic(const Solution& sol, const Point& center,
                                               double r0, int levels, double floor_tol = 1e-10) {
  const auto& g = sol.u.geometry();
  detail::require_inside(g, center, r0);
  RegularityDiagnostics d;
  for (int j = 0; j < levels; ++j) {
    const double rad = r0 * std::pow(4.0, -j);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t count = 0;
    for (std::size_t c = 0; c < g.size(); ++c)
      if (distance(g.center(c), center) < rad) {
        lo = std::min(lo, sol.u[c]);
        hi = std::max(hi, sol.u[c]);
        ++count;
      }
    if (count < 2 || hi - lo < floor_tol) {
      d.truncated = true;
      break;
    }
    d.oscillation.push_back({rad, hi - lo});
  }
  for (std::size_t j = 1; j < d.oscillation.size(); ++j)
    d.theta.push_back(d.oscillation[j].osc / d.oscillation[j - 1].osc);
  const std::size_t m = d.oscillation.size();
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& row : d.oscillation) {
      const double x = std::log(row.radius), y = std::log(row.osc);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double nm = static_cast<double>(m);
    d.beta = (nm * sxy - sx * sy) / (nm * sxx - sx * sx);
    const double icpt = (sy - d.beta * sx) / nm;
    double ss_res = 0, ss_tot = 0;
    for (const auto& row : d.oscillation) {
      const double x = std::log(row.radius), y = std::log(row.osc);
      ss_res += (y - icpt - d.beta * x) * (y - icpt - d.beta * x);
      ss_tot += (y - sy / nm) * (y - sy / nm);
    }
    d.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return d;
}

/// Caccioppoli ratios over nested ball pairs and the deciles of u's range on
/// each outer ball; L^inf ratios on each inner ball.
inline void regularity_sweeps(const Solution& sol,
                              const std::vector<std::pair<Point, std::pair<double, double>>>& balls,
                              RegularityDiagnostics& d) {
  const auto& g = sol.u.geometry();
  for (const auto& [c, rr] : balls) {
    const auto [r, R] = rr;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (distance(g.center(k), c) < R) {
        lo = std::min(lo, sol.u[k]);
        hi = std::max(hi, sol.u[k]);
      }
    for (int dec = 1; dec <= 9; ++dec) {
      const auto ratio = caccioppoli_check(sol, c, r, R, lo + 0.1 * dec * (hi - lo));
      if (ratio) d.caccioppoli.push_back(*ratio);
    }
    if (2.0 * r <= R) {
      const auto li = linfty_check(sol, c, r);
      if (li.rhs > 0.0) d.linfty.push_back(li.ratio);
    }
  }
}

}  // namespace dphase
