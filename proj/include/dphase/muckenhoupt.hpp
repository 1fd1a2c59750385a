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
#include <dphase/orlicz.hpp>

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace dphase {

inline std::string describe(const NFunction& nf) {
  std::ostringstream os;
  os.precision(17);
  os << "double_phase(p=" << nf.p << ", q=" << nf.q << ", a=" << to_string(nf.coeff)
     << ')';
  return os.str();
}

/// Deterministic per-item seed derived from a run seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t item) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (item + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Class A estimate: sup_Q ||1_Q||_phi ||1_Q||_phi* / |Q|.

struct ClassAEstimate {
  double value = 0.0;
  std::size_t worst = 0;
  std::vector<double> per_cube;
};

template <CellModel M, CellModel MD>
ClassAEstimate estimate_class_A(const M& m, const MD& dual, const GridGeometry& g,
                                const CubeFamily& cubes) {
  if (cubes.empty()) throw InputError("empty cube family");
  const GridField one(g, 1.0);
  ClassAEstimate est;
  est.per_cube.assign(cubes.size(), 0.0);
  parallel_for(cubes.size(), [&](std::size_t k) {
    const Cube& q = cubes.cubes[k];
    if (!cube_inside(q, g)) throw DomainError("cube outside the grid box");
    const auto cells = cube_cells(q, g);
    est.per_cube[k] = luxemburg_norm(m, one, cells) *
                      luxemburg_norm(dual, one, cells) / cube_measure(q, g);
  });
  for (std::size_t k = 0; k < cubes.size(); ++k)
    if (est.per_cube[k] > est.value) {
      est.value = est.per_cube[k];
      est.worst = k;
    }
  return est;
}

inline ClassAEstimate estimate_class_A(const NFunction& nf, const GridGeometry& g,
                                       const CubeFamily& cubes,
                                       ConjugateMode mode = {}) {
  return estimate_class_A(bind(nf, g), bind_conjugate(nf, g, mode), g, cubes);
}

// ---------------------------------------------------------------------------
// Test functions on a cube.

struct TestFunction {
  std::string name;
  std::vector<double> values;  // one per cube cell, in cube_cells order
};

/// Adversarial families for Jensen-type inequalities on a cube Q.
struct TestFunctionGen {
  std::vector<double> a;  // coefficient samples; empty disables a-based families
  double extremal_exponent = 0.0;  // r of the A_r profile a^{-1/(r-1)}; 0 = off
  int random_steps = 4;
  std::uint64_t seed = 1;
  bool constant = true;
  bool subcubes = true;
  bool top_half = true;
  bool bumps = true;

  std::vector<TestFunction> generate(const Cube& q, const GridGeometry& g,
                                     std::uint64_t item) const {
    const auto cells = cube_cells(q, g);
    const std::size_t m = cells.size();
    std::vector<TestFunction> out;
    auto local = [&](std::size_t k, int axis) {
      const std::size_t c = cells[k];
      return static_cast<Index>(axis == 0 ? g.ix(c) : g.iy(c)) - q.lo[axis];
    };
    if (constant) out.push_back({"constant", std::vector<double>(m, 1.0)});
    if (subcubes && q.side >= 2) {
      const Index half = q.side / 2;
      const int children = g.n == 2 ? 4 : 2;
      for (int ch = 0; ch < children; ++ch) {
        std::vector<double> v(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
          const bool xi = local(k, 0) >= half;
          const bool yi = g.n == 2 && local(k, 1) >= half;
          if (static_cast<int>(xi) + 2 * static_cast<int>(yi) == ch) v[k] = 1.0;
        }
        out.push_back({"subcube_" + std::to_string(ch), std::move(v)});
      }
    }
    std::mt19937_64 rng(derive_seed(seed, item));
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int r = 0; r < random_steps && q.side >= 2; ++r) {
      // piecewise constant on a 2^d subdivision, d in {1, 2, 3}
      const Index parts = std::min<Index>(q.side, Index{1} << (1 + r % 3));
      const Index w = q.side / parts;
      std::vector<double> levels(static_cast<std::size_t>(parts * parts));
      for (auto& l : levels) l = unit() < 0.25 ? 0.0 : unit();
      std::vector<double> v(m);
      for (std::size_t k = 0; k < m; ++k) {
        const Index bx = std::min(parts - 1, local(k, 0) / w);
        const Index by = g.n == 2 ? std::min(parts - 1, local(k, 1) / w) : 0;
        v[k] = levels[static_cast<std::size_t>(bx + parts * by)];
      }
      out.push_back({"steps_" + std::to_string(r), std::move(v)});
    }
    if (!a.empty()) {
      std::size_t imin = 0, imax = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (a[cells[k]] < a[cells[imin]]) imin = k;
        if (a[cells[k]] > a[cells[imax]]) imax = k;
      }
      if (top_half) {
        std::vector<double> sorted;
        for (std::size_t c : cells) sorted.push_back(a[c]);
        std::nth_element(sorted.begin(), sorted.begin() + m / 2, sorted.end());
        const double med = sorted[m / 2];
        std::vector<double> v(m);
        for (std::size_t k = 0; k < m; ++k) v[k] = a[cells[k]] >= med ? 1.0 : 0.0;
        out.push_back({"top_half_a", std::move(v)});
      }
      if (bumps) {
        const double radius = 0.5 * static_cast<double>(q.side) * g.spacing;
        for (auto [tag, at] : {std::pair{"bump_argmin_a", imin}, std::pair{"bump_argmax_a", imax}}) {
          const Point z = g.center(cells[at]);
          std::vector<double> v(m);
          for (std::size_t k = 0; k < m; ++k)
            v[k] = std::max(0.0, 1.0 - distance(g.center(cells[k]), z) / radius);
          out.push_back({tag, std::move(v)});
        }
      }
      if (extremal_exponent > 1.0) {
        bool positive = true;
        for (std::size_t c : cells) positive = positive && a[c] > 0.0;
        if (positive) {
          std::vector<double> v(m);
          for (std::size_t k = 0; k < m; ++k)
            v[k] = std::pow(a[cells[k]], -1.0 / (extremal_exponent - 1.0));
          out.push_back({"extremal_profile", std::move(v)});
        }
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Verifier reports.

struct CubeResult {
  std::string cube;
  double ratio = 0.0;
  std::string witness;
};

struct JensenReport {
  std::string model;
  std::string cube_family;
  std::vector<CubeResult> per_cube;
  double constant = 0.0;
  double ceiling = std::numeric_limits<double>::infinity();
  std::size_t skipped = 0;  // functions with vanishing right-hand side
  bool passed = true;

  nlohmann::json to_json() const {
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& r : per_cube)
      pc.push_back({{"cube", r.cube}, {"ratio", r.ratio}, {"witness", r.witness}});
    nlohmann::json j{{"model", model},       {"cubeFamily", cube_family},
                     {"perCube", pc},        {"constant", constant},
                     {"skipped", skipped},   {"passed", passed}};
    if (std::isfinite(ceiling)) j["ceiling"] = ceiling;
    return j;
  }
};

namespace detail {

/// Runs kernel(cells, f) -> (lhs, rhs) over every cube and test function.
template <CellModel M, class Kernel>
JensenReport run_cube_verifier(const M& m, const GridGeometry& g,
                               const CubeFamily& cubes, const TestFunctionGen& gen,
                               const std::string& model_name, double ceiling,
                               Kernel&& kernel) {
  if (cubes.empty()) throw InputError("empty cube family");
  JensenReport rep;
  rep.model = model_name;
  rep.cube_family = cubes.policy;
  rep.ceiling = ceiling;
  rep.per_cube.resize(cubes.size());
  std::vector<std::size_t> skipped(cubes.size(), 0);
  const double hn = g.cell_volume();
  parallel_for(cubes.size(), [&](std::size_t k) {
    const Cube& q = cubes.cubes[k];
    if (!cube_inside(q, g)) throw DomainError("cube outside the grid box");
    const auto cells = cube_cells(q, g);
    CubeResult res{describe(q, g), 0.0, ""};
    for (auto& tf : gen.generate(q, g, k)) {
      // normalise to unit norm; the support lies in Q
      double rho = 0.0;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (tf.values[i] != 0.0) rho += m.value(cells[i], std::abs(tf.values[i]));
      if (rho == 0.0) {
        ++skipped[k];
        continue;
      }
      const GridField whole = [&] {
        std::vector<double> v(g.size(), 0.0);
        for (std::size_t i = 0; i < cells.size(); ++i) v[cells[i]] = tf.values[i];
        return GridField(g, std::move(v));
      }();
      const double nrm = luxemburg_norm(m, whole, cells);
      for (auto& v : tf.values) v = std::abs(v) / nrm;
      const auto [lhs, rhs] = kernel(cells, tf.values, hn);
      if (!(rhs > 0.0)) {
        ++skipped[k];
        continue;
      }
      const double ratio = lhs / rhs;
      if (ratio > res.ratio || res.witness.empty()) {
        res.ratio = ratio;
        res.witness = tf.name;
      }
    }
    rep.per_cube[k] = std::move(res);
  });
  for (std::size_t k = 0; k < cubes.size(); ++k) {
    rep.constant = std::max(rep.constant, rep.per_cube[k].ratio);
    rep.skipped += skipped[k];
  }
  rep.passed = rep.constant <= ceiling;
  return rep;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Ratio  sum_Q m(x, mean_Q |f|) / sum_Q m(x, |f|)  per cube, maximised over
/// the generated unit-norm test functions. Passing the conjugate model
/// checks the conjugate form of the inequality.
template <CellModel M>
JensenReport verify_jensen(const M& m, const GridGeometry& g, const CubeFamily& cubes,
                           const TestFunctionGen& gen, const std::string& model_name = {},
                           double ceiling = std::numeric_limits<double>::infinity()) {
  return detail::run_cube_verifier(
      m, g, cubes, gen, model_name, ceiling,
      [&](const std::vector<std::size_t>& cells, const std::vector<double>& f, double) {
        const double avg = detail::mean_of(f);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          lhs += m.value(cells[i], avg);
          if (f[i] != 0.0) rhs += m.value(cells[i], f[i]);
        }
        return std::pair{lhs, rhs};
      });
}

/// (mean_Q m(y, mean_Q |f|)^s)^{1/s} / mean_Q m(y, |f|).
template <CellModel M>
JensenReport verify_improved_jensen(const M& m, const GridGeometry& g,
                                    const CubeFamily& cubes, double s,
                                    const TestFunctionGen& gen,
                                    const std::string& model_name = {},
                                    double ceiling = std::numeric_limits<double>::infinity()) {
  if (!(s >= 1.0)) throw PreconditionError("improved Jensen needs s >= 1");
  return detail::run_cube_verifier(
      m, g, cubes, gen, model_name, ceiling,
      [&](const std::vector<std::size_t>& cells, const std::vector<double>& f, double) {
        const double avg = detail::mean_of(f);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          lhs += std::pow(m.value(cells[i], avg), s);
          if (f[i] != 0.0) rhs += m.value(cells[i], f[i]);
        }
        const double k = static_cast<double>(cells.size());
        return std::pair{std::pow(lhs / k, 1.0 / s), rhs / k};
      });
}

/// mean_Q m(y, (mean_Q |f|^s)^{1/s}) / mean_Q m(y, |f|).
template <CellModel M>
JensenReport verify_left_open(const M& m, const GridGeometry& g, const CubeFamily& cubes,
                              double s, const TestFunctionGen& gen,
                              const std::string& model_name = {},
                              double ceiling = std::numeric_limits<double>::infinity()) {
  if (!(s >= 1.0)) throw PreconditionError("left-open inequality needs s >= 1");
  return detail::run_cube_verifier(
      m, g, cubes, gen, model_name, ceiling,
      [&](const std::vector<std::size_t>& cells, const std::vector<double>& f, double) {
        double ms = 0.0;
        for (double v : f) ms += s == 1.0 ? v : std::pow(v, s);
        ms /= static_cast<double>(f.size());
        const double inner = s == 1.0 ? ms : std::pow(ms, 1.0 / s);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          lhs += m.value(cells[i], inner);
          if (f[i] != 0.0) rhs += m.value(cells[i], f[i]);
        }
        return std::pair{lhs, rhs};
      });
}

/// Largest s on a descending sweep whose ratio stays below the ceiling.
struct ExponentSweep {
  std::vector<double> exponents;
  std::vector<double> constants;
  double admissible = 1.0;  // 1 when no s > 1 passed

  nlohmann::json to_json() const {
    return {{"s", exponents}, {"constant", constants}, {"admissible", admissible}};
  }
};

template <class Verify>
ExponentSweep sweep_exponent(const std::vector<double>& s_values, double ceiling,
                             Verify&& run) {
  ExponentSweep sw;
  for (double s : s_values) {
    const double c = run(s).constant;
    sw.exponents.push_back(s);
    sw.constants.push_back(c);
    if (c <= ceiling && s > sw.admissible) sw.admissible = s;
  }
  return sw;
}

// ---------------------------------------------------------------------------
// Reverse Hoelder for x -> phi(x, t) at admissible t.

struct ReverseHolderReport {
  std::string cube;
  double t_bound = 0.0;  // 1 / ||1_Q||_phi
  std::vector<double> eps;
  std::vector<double> constants;  // C(eps) = max over t of the ratio
  double eps_star = 0.0;          // largest eps with C(eps) <= ceiling
  double c_star = 0.0;
  double ceiling = 2.0;

  nlohmann::json to_json() const {
    return {{"cube", cube},       {"tBound", t_bound}, {"eps", eps},
            {"C", constants},     {"epsStar", eps_star}, {"CStar", c_star},
            {"ceiling", ceiling}};
  }
};

inline const std::vector<double>& default_eps_ladder() {
  static const std::vector<double> l{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0};
  return l;
}

/// Per-cube reverse Hoelder ratio (mean (m(x,t))^{1+eps})^{1/(1+eps)} / mean m(x,t).
template <CellModel M>
double reverse_holder_ratio(const M& m, const std::vector<std::size_t>& cells,
                            double t, double eps) {
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t c : cells) {
    const double v = m.value(c, t);
    s1 += v;
    s2 += std::pow(v, 1.0 + eps);
  }
  const double k = static_cast<double>(cells.size());
  return std::pow(s2 / k, 1.0 / (1.0 + eps)) / (s1 / k);
}

template <CellModel M>
ReverseHolderReport verify_reverse_hoelder(const M& m, const GridGeometry& g,
                                           const Cube& q, const std::vector<double>& t_grid,
                                           double ceiling = 2.0,
                                           const std::vector<double>& eps_ladder =
                                               default_eps_ladder()) {
  if (!cube_inside(q, g)) throw DomainError("cube outside the grid box");
  if (t_grid.empty()) throw InputError("empty t grid");
  const auto cells = cube_cells(q, g);
  ReverseHolderReport rep;
  rep.cube = describe(q, g);
  rep.ceiling = ceiling;
  rep.t_bound = 1.0 / luxemburg_norm(m, GridField(g, 1.0), cells);
  for (double t : t_grid)
    if (!(t > 0.0) || t > rep.t_bound * (1.0 + 1e-12))
      throw PreconditionError("t = " + std::to_string(t) +
                              " outside (0, 1/||1_Q||_phi] = (0, " +
                              std::to_string(rep.t_bound) + "]");
  for (double eps : eps_ladder) {
    double c = 0.0;
    for (double t : t_grid) c = std::max(c, reverse_holder_ratio(m, cells, t, eps));
    rep.eps.push_back(eps);
    rep.constants.push_back(c);
    if (c <= ceiling && eps > rep.eps_star) {
      rep.eps_star = eps;
      rep.c_star = c;
    }
  }
  return rep;
}

/// Geometric t grid over (0, 1/||1_Q||] with `count` points ending at the bound.
template <CellModel M>
std::vector<double> admissible_t_grid(const M& m, const GridGeometry& g, const Cube& q,
                                      std::size_t count = 12, double decades = 4.0) {
  const double bound = 1.0 / luxemburg_norm(m, GridField(g, 1.0), cube_cells(q, g));
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = bound * std::pow(10.0, -decades * static_cast<double>(count - 1 - i) /
                                      static_cast<double>(std::max<std::size_t>(1, count - 1)));
  t.back() = bound;
  return t;
}

}  // namespace dphase
