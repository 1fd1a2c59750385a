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

#include <dphase/orlicz.hpp>

#include <json.hpp>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace dphase {

struct PoincareTrial {
  Point center{0.0, 0.0};
  double radius = 0.0;
  double s = 1.0;
  double scale = 1.0;  // u was divided by this before measuring
  double lhs = 0.0;
  double rhs = 0.0;
  double allowance = 1.0;  // (1 + |B|/|E|)^q in the zero-set variant
  double ratio = 0.0;      // lhs / (allowance * rhs)
  double zero_fraction = std::numeric_limits<double>::quiet_NaN();  // |E|/|B|
};

struct PoincareReport {
  double s = 1.0;
  std::vector<PoincareTrial> trials;

  double max_ratio() const {
    double m = 0.0;
    for (const auto& t : trials) m = std::max(m, t.ratio);
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : trials) {
      nlohmann::json r = {{"center", {t.center[0], t.center[1]}},
                          {"radius", t.radius},
                          {"s", t.s},
                          {"scale", t.scale},
                          {"lhs", t.lhs},
                          {"rhs", t.rhs},
                          {"ratio", t.ratio}};
      if (!std::isnan(t.zero_fraction)) {
        r["zeroFraction"] = t.zero_fraction;
        r["allowance"] = t.allowance;
      }
      rows.push_back(std::move(r));
    }
    return {{"s", s}, {"maxRatio", max_ratio()}, {"trials", rows}};
  }

  /// One row per trial: cx,cy,radius,s,lhs,rhs,ratio.
  void write_csv(std::ostream& os) const {
    os << "cx,cy,radius,s,lhs,rhs,ratio\n";
    os.precision(17);
    for (const auto& t : trials)
      os << t.center[0] << ',' << t.center[1] << ',' << t.radius << ',' << t.s
         << ',' << t.lhs << ',' << t.rhs << ',' << t.ratio << '\n';
  }
};

namespace detail {

inline void check_ball(const Domain& B) {
  if (!B.is_ball()) throw InputError("expected a ball mask");
  if (!B.ball_inside_box()) throw DomainError("ball leaves the grid");
}

inline double mean_phi(const DoublePhaseCells& m, const std::vector<double>& v,
                       const std::vector<std::size_t>& cells, double s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double x = m.value(cells[k], v[k]);
    acc += s == 1.0 ? x : std::pow(x, s);
  }
  acc /= static_cast<double>(cells.size());
  return s == 1.0 ? acc : std::pow(acc, 1.0 / s);
}

}  // namespace detail

/// Factor lambda >= 1 such that the gradient modular of u / lambda over the
/// cells is <= 1; 1 when it already is.
inline double gradient_normalization(const DoublePhaseCells& m, const GridField& u,
                                     const std::vector<std::size_t>& cells) {
  const GridField grad = discrete_gradient(u).magnitude;
  if (modular(m, grad, cells) <= 1.0 + 1e-12) return 1.0;
  return luxemburg_norm(m, grad, cells);
}

/// (mean_B phi(x, |v|/r)^s)^(1/s) for the given values on B's cells.
inline double poincare_lhs(const DoublePhaseCells& m, const std::vector<double>& v,
                           const Domain& B, double s) {
  if (!(s >= 1.0)) throw InputError("s must be >= 1");
  std::vector<double> w(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) w[k] = std::abs(v[k]) / B.radius();
  return detail::mean_phi(m, w, B.cells(), s);
}

/// Mean-value Sobolev-Poincare ratio on a ball, after rescaling u so that
/// the gradient modular over B is <= 1.
inline PoincareTrial verify_sobolev_poincare(const NFunction& nf, const GridField& u,
                                             const Domain& B, double s) {
  detail::check_ball(B);
  require_grid(u, B.geometry());
  const auto& g = u.geometry();
  const double s_max = g.n == 1 ? std::numeric_limits<double>::infinity() : 2.0;
  if (!(s > 1.0 && s < s_max)) throw PreconditionError("need 1 < s < n/(n-1)");
  const auto m = bind(nf, g);
  PoincareTrial t;
  t.center = B.center();
  t.radius = B.radius();
  t.s = s;
  t.scale = gradient_normalization(m, u, B.cells());
  const GridField v = u.scaled(1.0 / t.scale);
  const double avg = mean(v, B);
  std::vector<double> dev;
  dev.reserve(B.count());
  for (std::size_t c : B.cells()) dev.push_back(v[c] - avg);
  t.lhs = poincare_lhs(m, dev, B, s);
  const GridField grad = discrete_gradient(v).magnitude;
  t.rhs = modular(m, grad, B.cells()) / B.measure();
  t.ratio = t.rhs > 0.0 ? t.lhs / t.rhs : 0.0;
  return t;
}

/// Zero-set variant: u vanishes on E inside B; no mean is subtracted and
/// the right side carries (1 + |B|/|E|)^q.
inline PoincareTrial verify_zero_set_variant(const NFunction& nf, const GridField& u,
                                             const Domain& B, const Domain& E,
                                             double s) {
  detail::check_ball(B);
  require_grid(u, B.geometry());
  require_grid(u, E.geometry());
  const auto& g = u.geometry();
  const double s_max = g.n == 1 ? std::numeric_limits<double>::infinity() : 2.0;
  if (!(s >= 1.0 && s < s_max)) throw PreconditionError("need 1 <= s < n/(n-1)");
  const auto inB = B.indicator();
  for (std::size_t c : E.cells()) {
    if (!inB[c]) throw PreconditionError("zero set is not inside the ball");
    if (u[c] != 0.0) throw PreconditionError("u does not vanish on the zero set");
  }
  const auto m = bind(nf, g);
  PoincareTrial t;
  t.center = B.center();
  t.radius = B.radius();
  t.s = s;
  t.zero_fraction = E.measure() / B.measure();
  t.allowance = std::pow(1.0 + 1.0 / t.zero_fraction, nf.q);
  t.scale = gradient_normalization(m, u, B.cells());
  const GridField v = u.scaled(1.0 / t.scale);
  std::vector<double> vals;
  vals.reserve(B.count());
  for (std::size_t c : B.cells()) vals.push_back(v[c]);
  t.lhs = poincare_lhs(m, vals, B, s);
  t.rhs = modular(m, discrete_gradient(v).magnitude, B.cells()) / B.measure();
  t.ratio = t.rhs > 0.0 ? t.lhs / (t.allowance * t.rhs) : 0.0;
  return t;
}

/// Runs verify_sobolev_poincare over several (u, B) pairs in parallel.
inline PoincareReport sobolev_poincare_sweep(const NFunction& nf,
                                             const std::vector<GridField>& fields,
                                             const std::vector<Domain>& balls, double s) {
  if (fields.size() != balls.size()) throw InputError("one ball per field expected");
  PoincareReport rep;
  rep.s = s;
  rep.trials.resize(fields.size());
  parallel_for(fields.size(), [&](std::size_t k) {
    rep.trials[k] = verify_sobolev_poincare(nf, fields[k], balls[k], s);
  });
  return rep;
}

}  // namespace dphase
