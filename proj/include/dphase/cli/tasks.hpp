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

// Task runners behind `dphase run`. Each task reads its settings from a
// Config up front (so every configuration problem surfaces before any work
// starts) and returns a runner producing a deterministic TaskOutput.

#include <dphase/cli/config.hpp>
#include <dphase/cli/expression.hpp>
#include <dphase/maximal.hpp>
#include <dphase/muckenhoupt.hpp>
#include <dphase/poincare.hpp>
#include <dphase/solver.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dphase::cli {

struct TaskOutput {
  nlohmann::json results = nlohmann::json::object();
  std::string summary;
  std::vector<std::string> failures;           // violated invariants, by name
  std::map<std::string, std::string> tables;   // file name -> CSV text
  std::vector<std::pair<std::string, Solution>> checkpoints;

  void check(bool ok, const std::string& invariant) {
    if (!ok) failures.push_back(invariant);
  }
};

using TaskRunner = std::function<TaskOutput()>;

struct TaskContext {
  std::string base_dir;  // relative paths in the config resolve against this
};

// ---------------------------------------------------------------------------
// Shared readers.

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string resolve(const TaskContext& ctx, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || ctx.base_dir.empty()) return path;
  return (std::filesystem::path(ctx.base_dir) / p).string();
}

inline Expression expression(const Config& c, const std::string& sec, const std::string& key,
                             const std::string& fallback) {
  const auto text = c.get(sec, key);
  try {
    return Expression::parse(text ? *text : fallback);
  } catch (const InputError& e) {
    c.fail(sec, key, e.what());
  }
}

inline std::optional<Expression> optional_expression(const Config& c, const std::string& sec,
                                                     const std::string& key) {
  if (!c.has(sec, key)) return std::nullopt;
  return expression(c, sec, key, "");
}

template <class T>
T one_of(const Config& c, const std::string& sec, const std::string& key,
         const std::vector<std::pair<std::string, T>>& choices, const std::string& fallback) {
  const std::string v = c.string(sec, key, fallback);
  for (const auto& [name, value] : choices)
    if (name == v) return value;
  std::string list;
  for (const auto& ch : choices) list += (list.empty() ? "" : ", ") + ch.first;
  c.fail(sec, key, "expected one of {" + list + "}, got '" + v + "'");
}

inline std::optional<double> optional_number(const Config& c, const std::string& sec,
                                             const std::string& key) {
  if (!c.has(sec, key)) return std::nullopt;
  return c.number(sec, key);
}

inline double positive(const Config& c, const std::string& sec, const std::string& key,
                       double fallback) {
  const double v = c.number(sec, key, fallback);
  if (!(v > 0.0)) c.fail(sec, key, "must be positive");
  return v;
}

inline std::size_t count(const Config& c, const std::string& sec, const std::string& key,
                         long long fallback) {
  const long long v = c.integer(sec, key, fallback);
  if (v <= 0) c.fail(sec, key, "must be a positive integer");
  return static_cast<std::size_t>(v);
}

inline std::vector<std::size_t> counts(const Config& c, const std::string& sec,
                                       const std::string& key) {
  std::vector<std::size_t> out;
  for (double v : c.numbers(sec, key)) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
      c.fail(sec, key, "expected positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

inline Point point(const Config& c, const std::string& sec, const std::string& key,
                   Point fallback) {
  if (!c.has(sec, key)) return fallback;
  const auto v = c.numbers(sec, key);
  if (v.size() > 2) c.fail(sec, key, "expected one or two coordinates");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

inline NFunction read_model(const Config& c, const TaskContext& ctx) {
  const double p = c.number("model", "p");
  const double q = c.number("model", "q");
  WeightSpec w;
  if (auto text = c.get("model", "weight")) {
    try {
      w = parse_weight(*text, ctx.base_dir);
    } catch (const std::exception& e) {
      c.fail("model", "weight", e.what());
    }
  }
  try {
    return NFunction(p, q, w);
  } catch (const InputError& e) {
    c.fail("model", "q", e.what());
  }
}

/// [domain]: dims (cells per axis; its length is the dimension), spacing,
/// origin. The spacing defaults to 1 / dims[0] (a unit box).
struct DomainSpec {
  int n = 1;
  std::array<std::size_t, 2> dims{1, 1};
  Point origin{0.0, 0.0};
  double spacing = 1.0;

  GridGeometry geometry() const { return GridGeometry(n, dims, origin, spacing); }
  double length(int axis = 0) const { return static_cast<double>(dims[axis]) * spacing; }
  bool square() const { return n == 1 || dims[0] == dims[1]; }

  /// Same box with `cells` per axis.
  GridGeometry refined(std::size_t cells) const {
    return GridGeometry(n, {cells, n == 2 ? cells : 1}, origin,
                        length() / static_cast<double>(cells));
  }
};

inline DomainSpec read_domain(const Config& c) {
  DomainSpec d;
  const auto dims = counts(c, "domain", "dims");
  if (dims.size() > 2) c.fail("domain", "dims", "only 1D and 2D grids are supported");
  d.n = static_cast<int>(dims.size());
  d.dims = {dims[0], d.n == 2 ? dims[1] : 1};
  d.spacing = positive(c, "domain", "spacing", 1.0 / static_cast<double>(d.dims[0]));
  d.origin = point(c, "domain", "origin", {0.0, 0.0});
  if (c.has("domain", "origin") && c.numbers("domain", "origin").size() != dims.size())
    c.fail("domain", "origin", "needs one coordinate per axis");
  if (d.n == 1) d.origin[1] = 0.0;
  return d;
}

inline std::uint64_t read_seed(const Config& c) {
  if (!c.has("", "seed")) c.fail("", "seed", "a seed is required by randomized generators");
  const long long s = c.integer("", "seed", 0);
  if (s < 0) c.fail("", "seed", "must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

enum class Trend { None, Bounded, Increasing };

inline Trend read_trend(const Config& c, const std::string& sec) {
  return one_of<Trend>(c, sec, "trend",
                       {{"none", Trend::None}, {"bounded", Trend::Bounded},
                        {"increasing", Trend::Increasing}},
                       "none");
}

/// Applies a trend assertion to a sequence of estimates.
inline void check_trend(TaskOutput& out, const std::vector<double>& v, Trend trend,
                        double growth, const std::string& what) {
  if (trend == Trend::Increasing)
    for (std::size_t k = 1; k < v.size(); ++k)
      out.check(v[k] > growth * v[k - 1],
                what + " grows by more than " + fmt(growth) + "x at step " + std::to_string(k));
  if (trend == Trend::Bounded)
    for (double x : v) out.check(std::isfinite(x), what + " stays finite");
}

inline std::string csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string s;
  for (std::size_t k = 0; k < header.size(); ++k) s += (k ? "," : "") + header[k];
  s += '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + r[k];
    s += '\n';
  }
  return s;
}

/// Least-squares slope of log y against log x.
inline double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = std::log(x[k]), b = std::log(y[k]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline std::vector<double> read_schedule(const Config& c, const std::string& sec) {
  auto eps = c.numbers(sec, "eps", {1e-2, 1e-4, 1e-6, 1e-8});
  for (std::size_t k = 0; k < eps.size(); ++k)
    if (eps[k] < 0.0 || (k && !(eps[k] < eps[k - 1])))
      c.fail(sec, "eps", "schedule must be nonnegative and strictly decreasing");
  return eps;
}

inline Optimizer read_optimizer(const Config& c, const std::string& sec, const std::string& fallback) {
  return one_of<Optimizer>(c, sec, "optimizer",
                           {{"gradient_descent", Optimizer::GradientDescentArmijo},
                            {"nonlinear_cg", Optimizer::NonlinearCG},
                            {"damped_newton", Optimizer::DampedNewton}},
                           fallback);
}

/// Solver settings shared by the solve and regularity tasks.
inline SolveConfig read_solver(const Config& c, const std::string& sec, const NFunction& nf,
                               const std::string& optimizer) {
  SolveConfig s;
  s.nf = nf;
  s.eps_schedule = read_schedule(c, sec);
  s.optimizer = read_optimizer(c, sec, optimizer);
  s.residual_tol = positive(c, sec, "residual_tol", 1e-6);
  s.energy_tol = positive(c, sec, "energy_tol", 1e-12);
  s.max_iterations = count(c, sec, "max_iterations", 20000);
  return s;
}

inline void require_square_box(const Config& c, const DomainSpec& d) {
  if (!d.square() || (d.n == 2 && d.origin[0] != d.origin[1]))
    c.fail("domain", "dims", "the solver needs a square box [o, o + L]^n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// norm: Luxemburg norm of a field over a box or ball.

inline TaskRunner read_norm_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  GridField f;
  if (auto file = c.get("norm", "field_file")) {
    try {
      f = read_grid_file(resolve(ctx, *file));
    } catch (const std::exception& e) {
      c.fail("norm", "field_file", e.what());
    }
  } else {
    const auto g = read_domain(c).geometry();
    const auto ex = expression(c, "norm", "field", "1");
    try {
      f = GridField::sample(g, [&](const Point& x) { return ex(x); });
    } catch (const InputError& e) {
      c.fail("norm", "field", e.what());
    }
  }
  const bool ball = one_of<bool>(c, "norm", "domain", {{"box", false}, {"ball", true}}, "box");
  std::optional<Domain> dom;
  if (ball) {
    const Point center = point(c, "norm", "center", {0.0, 0.0});
    const double radius = positive(c, "norm", "radius", 1.0);
    try {
      dom = Domain::ball(f.geometry(), center, radius);
    } catch (const std::exception& e) {
      c.fail("norm", "radius", e.what());
    }
  } else {
    dom = Domain::box(f.geometry());
  }
  const bool conj = c.boolean("norm", "conjugate", false);
  const auto expect = optional_number(c, "norm", "expect");
  const double tol = positive(c, "norm", "tolerance", 1e-8);
  return [=] {
    TaskOutput out;
    const double v = conj ? dual_norm(nf, f, *dom) : luxemburg_norm(nf, f, *dom);
    out.results = {{"model", describe(nf)}, {"conjugate", conj},
                   {"domain", ball ? "ball" : "box"}, {"cells", dom->count()},
                   {"norm", v}};
    out.summary = std::string(conj ? "dual norm = " : "norm = ") + fmt(v);
    if (expect) {
      out.results["expect"] = *expect;
      out.results["tolerance"] = tol;
      out.check(std::abs(v - *expect) <= tol, "norm matches expect within tolerance");
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// muck: class A estimate over a depth sweep.

inline TaskRunner read_muck_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  const int dmin = static_cast<int>(c.integer("muck", "depth_min", 4));
  const int dmax = static_cast<int>(c.integer("muck", "depth_max", 8));
  if (dmin < 0 || dmax < dmin) c.fail("muck", "depth_max", "need 0 <= depth_min <= depth_max");
  if (std::ldexp(1.0, dmax) > static_cast<double>(dom.dims[0]))
    c.fail("muck", "depth_max", "deeper than the grid resolution");
  const bool shifted = one_of<bool>(c, "muck", "family", {{"shifted", true}, {"dyadic", false}}, "shifted");
  const ConjugateMode mode = one_of<bool>(c, "muck", "conjugate",
                                          {{"brute_force", true}, {"closed_form", false}},
                                          "brute_force")
                                 ? ConjugateMode::brute_force()
                                 : ConjugateMode::closed_form();
  const bool monotone = c.boolean("muck", "monotone", true);
  const auto ceiling = optional_number(c, "muck", "ceiling");
  const auto expect = optional_number(c, "muck", "expect");
  const double tol = positive(c, "muck", "tolerance", 1e-6);
  const auto g = dom.geometry();
  return [=] {
    TaskOutput out;
    std::vector<double> est;
    std::vector<int> depths;
    std::vector<std::vector<std::string>> rows;
    std::string worst;
    for (int D = dmin; D <= dmax; ++D) {
      const auto fam = shifted ? shifted_dyadic(g, D) : dyadic_to_depth(g, D);
      const auto e = estimate_class_A(nf, g, fam, mode);
      depths.push_back(D);
      est.push_back(e.value);
      worst = describe(fam.cubes[e.worst], g);
      rows.push_back({std::to_string(D), std::to_string(fam.size()), fmt(e.value), worst});
    }
    out.results = {{"model", describe(nf)}, {"family", shifted ? "shifted" : "dyadic"},
                   {"depths", depths},      {"estimates", est},
                   {"worstCube", worst},    {"final", est.back()}};
    out.tables["muck.csv"] = csv({"depth", "cubes", "estimate", "worst_cube"}, rows);
    out.summary = "class A estimate at depth " + std::to_string(dmax) + " = " + fmt(est.back());
    if (monotone)
      for (std::size_t k = 1; k < est.size(); ++k)
        out.check(est[k] >= est[k - 1] * (1.0 - 1e-12), "class A estimate monotone in depth");
    if (ceiling) out.check(est.back() <= *ceiling, "class A estimate <= ceiling");
    if (expect) out.check(std::abs(est.back() - *expect) <= tol, "class A estimate matches expect");
    return out;
  };
}

// ---------------------------------------------------------------------------
// jensen: Jensen-type verifiers over a depth sweep.

inline TaskRunner read_jensen_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  enum class Variant { Jensen, Improved, LeftOpen };
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  const Variant variant = one_of<Variant>(
      c, "jensen", "variant",
      {{"jensen", Variant::Jensen}, {"improved", Variant::Improved}, {"left_open", Variant::LeftOpen}},
      "jensen");
  const double s = c.number("jensen", "s", 1.0);
  if (!(s >= 1.0)) c.fail("jensen", "s", "must be >= 1");
  std::vector<std::size_t> depths = {6};
  if (c.has("jensen", "depths")) depths = counts(c, "jensen", "depths");
  const auto per_depth = c.has("jensen", "cells_per_depth")
                             ? std::optional<std::size_t>(count(c, "jensen", "cells_per_depth", 4))
                             : std::nullopt;
  if (!dom.square()) c.fail("domain", "dims", "cube families need a square box");
  for (std::size_t D : depths) {
    const double cells = per_depth ? static_cast<double>(*per_depth) * std::ldexp(1.0, static_cast<int>(D))
                                   : static_cast<double>(dom.dims[0]);
    if (std::ldexp(1.0, static_cast<int>(D)) > cells || cells > 1e6)
      c.fail("jensen", "depths", "depth " + std::to_string(D) + " does not fit the grid");
  }
  const bool shifted = one_of<bool>(c, "jensen", "family", {{"shifted", true}, {"dyadic", false}}, "shifted");
  const bool conj = one_of<bool>(c, "jensen", "form", {{"primal", false}, {"conjugate", true}}, "primal");
  TestFunctionGen gen;
  gen.random_steps = static_cast<int>(c.integer("jensen", "random_steps", 4));
  if (gen.random_steps < 0) c.fail("jensen", "random_steps", "must be >= 0");
  gen.extremal_exponent = c.number("jensen", "extremal_exponent", 0.0);
  if (gen.random_steps > 0) gen.seed = read_seed(c);
  const double ceiling = c.number("jensen", "ceiling", std::numeric_limits<double>::infinity());
  // Ceiling from the classical A_q constant of the coefficient, q of the model.
  const bool ap_ceiling = c.boolean("jensen", "ap_ceiling", false);
  if (ap_ceiling && c.has("jensen", "ceiling")) c.fail("jensen", "ap_ceiling", "conflicts with ceiling");
  const Trend trend = read_trend(c, "jensen");
  const double growth = c.number("jensen", "growth", 1.0);
  return [=] {
    TaskOutput out;
    nlohmann::json runs = nlohmann::json::array();
    std::vector<double> constants;
    std::vector<std::vector<std::string>> rows, cube_rows;
    JensenReport last;
    for (std::size_t D : depths) {
      const int depth = static_cast<int>(D);
      const GridGeometry g = per_depth ? dom.refined(*per_depth << D) : dom.geometry();
      const auto fam = shifted ? shifted_dyadic(g, depth) : dyadic_to_depth(g, depth);
      const auto base = bind(nf, g);
      TestFunctionGen tg = gen;
      tg.a = base.a;
      const double cap = ap_ceiling ? classical_ap_constant(base.a, g, nf.q, fam).value * (1.0 + 1e-12)
                                    : ceiling;
      auto run = [&](const auto& m) {
        switch (variant) {
          case Variant::Jensen: return verify_jensen(m, g, fam, tg, describe(nf), cap);
          case Variant::Improved: return verify_improved_jensen(m, g, fam, s, tg, describe(nf), cap);
          case Variant::LeftOpen: return verify_left_open(m, g, fam, s, tg, describe(nf), cap);
        }
        return JensenReport{};
      };
      last = conj ? run(conjugate_of(base)) : run(base);
      constants.push_back(last.constant);
      runs.push_back({{"depth", depth}, {"cells", g.dims[0]}, {"constant", last.constant},
                      {"ceiling", std::isfinite(cap) ? nlohmann::json(cap) : nlohmann::json()},
                      {"skipped", last.skipped}, {"passed", last.passed}});
      rows.push_back({std::to_string(depth), std::to_string(g.dims[0]), fmt(last.constant)});
      out.check(last.passed, "Jensen constant <= ceiling at depth " + std::to_string(depth));
    }
    for (const auto& r : last.per_cube) cube_rows.push_back({r.cube, fmt(r.ratio), r.witness});
    static const char* names[] = {"jensen", "improved", "left_open"};
    out.results = {{"model", describe(nf)}, {"variant", names[static_cast<int>(variant)]},
                   {"form", conj ? "conjugate" : "primal"}, {"s", s},
                   {"runs", runs}, {"final", last.to_json()}};
    out.tables["jensen.csv"] = csv({"depth", "cells", "constant"}, rows);
    out.tables["jensen_cubes.csv"] = csv({"cube", "ratio", "witness"}, cube_rows);
    check_trend(out, constants, trend, growth, "Jensen constant");
    out.summary = "Jensen constant at depth " + std::to_string(depths.back()) + " = " +
                  fmt(constants.back());
    return out;
  };
}

// ---------------------------------------------------------------------------
// maximal: modular boundedness, CZ decomposition, shifted domination.

inline TaskRunner read_maximal_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  if (!dom.square()) c.fail("domain", "dims", "dyadic grids need a square box");
  const auto variant = one_of<BoundednessVariant>(
      c, "maximal", "variant",
      {{"primal", BoundednessVariant::Primal}, {"dual", BoundednessVariant::Dual},
       {"left_open", BoundednessVariant::LeftOpen}},
      "primal");
  const double s = c.number("maximal", "s", 1.0);
  if (variant == BoundednessVariant::LeftOpen && !(s < 1.0 && s * nf.p > 1.0))
    c.fail("maximal", "s", "left_open needs 1/p < s < 1");
  BoxFunctionGen gen;
  gen.count = count(c, "maximal", "count", 200);
  gen.seed = read_seed(c);
  const int spikes = static_cast<int>(c.integer("maximal", "spikes", 0));
  if (spikes < 0 || spikes > 20) c.fail("maximal", "spikes", "expected 0..20");
  std::vector<std::size_t> grids = {dom.dims[0]};
  if (c.has("maximal", "refinements")) grids = counts(c, "maximal", "refinements");
  const auto ceiling = optional_number(c, "maximal", "ceiling");
  const Trend trend = read_trend(c, "maximal");
  const double growth = c.number("maximal", "growth", 1.0);
  const std::size_t cz_fields = static_cast<std::size_t>(c.integer("maximal", "cz_fields", 0));
  const double gamma = c.number("maximal", "gamma", 2.0);
  if (!(gamma > 1.0)) c.fail("maximal", "gamma", "must be > 1");
  const bool domination = c.boolean("maximal", "domination", false);
  return [=] {
    TaskOutput out;
    nlohmann::json runs = nlohmann::json::array();
    std::vector<double> ratios;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t N : grids) {
      const GridGeometry g = dom.refined(N);
      BoxFunctionGen fg = gen;
      // Indicators of [2^-j, 2^(1-j)) along the first axis, next to the origin.
      for (int j = 1; j <= spikes; ++j) {
        const double lo = std::ldexp(1.0, -j - 1), hi = 2.0 * lo;
        auto v = GridField::sample(g, [&](const Point& x) {
          return x[0] >= lo && x[0] < hi ? 1.0 : 0.0;
        });
        if (v.max_abs() > 0.0) fg.extra.push_back({"spike_" + std::to_string(j), v.values()});
      }
      const auto rep = verify_modular_boundedness(nf, g, fg, variant, s);
      ratios.push_back(rep.modular_ratio);
      auto j = rep.to_json();
      j["cells"] = N;
      runs.push_back(j);
      rows.push_back({std::to_string(N), std::to_string(rep.functions), fmt(rep.modular_ratio),
                      fmt(rep.norm_ratio), rep.modular_witness});
      if (ceiling) out.check(rep.modular_ratio <= *ceiling, "modular ratio <= ceiling at N=" + std::to_string(N));
      out.check(std::isfinite(rep.modular_ratio), "modular ratio finite at N=" + std::to_string(N));
    }
    out.results = {{"model", describe(nf)}, {"runs", runs}, {"final", ratios.back()}};
    out.tables["maximal.csv"] = csv({"cells", "functions", "modular_ratio", "norm_ratio", "witness"}, rows);
    check_trend(out, ratios, trend, growth, "modular ratio");
    out.summary = "max rho(Mf)/rho(f) = " + fmt(ratios.back());

    if (cz_fields > 0 || domination) {
      const GridGeometry g = dom.refined(grids.back());
      const DyadicGridSet set(g);
      BoxFunctionGen fg = gen;
      fg.count = std::max<std::size_t>(cz_fields, 1);
      const auto fns = fg.generate(g);
      nlohmann::json cz = nlohmann::json::array(), dm = nlohmann::json::array();
      for (std::size_t k = 0; k < fns.size(); ++k) {
        const GridField f = GridField(g, fns[k].values).abs();
        if (cz_fields > 0) {
          const auto& d = set[k % set.size()];
          const auto dec = cz_decompose(f, d, gamma);
          const auto chk = verify_cz(dec, f, d);
          nlohmann::json row = {{"field", fns[k].name}, {"grid", k % set.size()}, {"check", chk.to_json()}};
          if (k == 0) row["decomposition"] = dec.to_json();
          cz.push_back(row);
          out.check(chk.passed(), "CZ invariants for field " + std::to_string(k));
        }
        if (domination) {
          const auto rep = shifted_domination_check(f, set);
          dm.push_back(rep.to_json());
          out.check(rep.passed(), "shifted dyadic domination for field " + std::to_string(k));
        }
      }
      if (cz_fields > 0) out.results["cz"] = cz;
      if (domination) out.results["domination"] = dm;
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// poincare: Sobolev-Poincare trials on random balls.

inline TaskRunner read_poincare_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  const std::size_t trials = count(c, "poincare", "trials", 20);
  const double s = c.number("poincare", "s", 1.5);
  if (!(s > 1.0) || (dom.n == 2 && !(s < 2.0))) c.fail("poincare", "s", "need 1 < s < n/(n-1)");
  const double L = std::min(dom.length(0), dom.n == 2 ? dom.length(1) : dom.length(0));
  const double rmin = positive(c, "poincare", "radius_min", 0.1 * L);
  const double rmax = positive(c, "poincare", "radius_max", 0.3 * L);
  if (rmax < rmin || 2.0 * rmax >= L) c.fail("poincare", "radius_max", "need radius_min <= radius_max < L/2");
  const auto field = optional_expression(c, "poincare", "field");
  const std::uint64_t seed = read_seed(c);
  const auto ceiling = optional_number(c, "poincare", "ceiling");
  const auto g = dom.geometry();
  return [=] {
    TaskOutput out;
    PoincareReport rep;
    rep.s = s;
    rep.trials.resize(trials);
    std::vector<double> lhs1(trials);
    const auto m = bind(nf, g);
    parallel_for(trials, [&](std::size_t k) {
      std::mt19937_64 rng(derive_seed(seed, k));
      std::uniform_real_distribution<double> U(0.0, 1.0);
      const double R = rmin + (rmax - rmin) * U(rng);
      Point ctr{0.0, 0.0};
      for (int a = 0; a < g.n; ++a)
        ctr[a] = g.origin[a] + R + (dom.length(a) - 2.0 * R) * U(rng);
      GridField u;
      if (field) {
        u = GridField::sample(g, [&](const Point& x) { return (*field)(x); });
      } else {
        // Three Gaussian bumps plus a linear tilt.
        std::array<double, 12> b{};
        for (double& v : b) v = U(rng);
        u = GridField::sample(g, [&](const Point& x) {
          double v = (b[9] - 0.5) * x[0] + (b[10] - 0.5) * x[1];
          for (int i = 0; i < 3; ++i) {
            const Point z{g.origin[0] + b[3 * i] * dom.length(0),
                          g.origin[1] + b[3 * i + 1] * (g.n == 2 ? dom.length(1) : 0.0)};
            const double w = (0.1 + 0.3 * b[3 * i + 2]) * L;
            v += (i % 2 ? -1.0 : 1.0) * std::exp(-distance(x, z) * distance(x, z) / (w * w));
          }
          return v;
        });
      }
      const Domain B = Domain::ball(g, ctr, R);
      rep.trials[k] = verify_sobolev_poincare(nf, u, B, s);
      const GridField v = u.scaled(1.0 / rep.trials[k].scale);
      const double avg = mean(v, B);
      std::vector<double> dev;
      for (std::size_t cell : B.cells()) dev.push_back(v[cell] - avg);
      lhs1[k] = poincare_lhs(m, dev, B, 1.0);
    });
    for (std::size_t k = 0; k < trials; ++k)
      out.check(lhs1[k] <= rep.trials[k].lhs * (1.0 + 1e-12),
                "s-mean dominance LHS(1) <= LHS(s) in trial " + std::to_string(k));
    out.results = rep.to_json();
    out.results["model"] = describe(nf);
    out.results["lhs1"] = lhs1;
    std::ostringstream os;
    rep.write_csv(os);
    out.tables["poincare.csv"] = os.str();
    if (ceiling) out.check(rep.max_ratio() <= *ceiling, "Sobolev-Poincare ratio <= ceiling");
    out.summary = "max Sobolev-Poincare ratio = " + fmt(rep.max_ratio());
    return out;
  };
}

// ---------------------------------------------------------------------------
// solve: minimizers on a refinement ladder with an error table.

inline TaskRunner read_solve_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  require_square_box(c, dom);
  const SolveConfig base = read_solver(c, "solve", nf, "nonlinear_cg");
  const auto boundary = expression(c, "solve", "boundary", "");
  const auto exact = optional_expression(c, "solve", "exact");
  const auto exact_energy = optional_number(c, "solve", "exact_energy");
  std::vector<std::size_t> ladder = {dom.dims[0]};
  if (c.has("solve", "refinements")) ladder = counts(c, "solve", "refinements");
  for (std::size_t k = 0; k < ladder.size(); ++k)
    if (ladder[k] < 2 || (k && ladder[k] <= ladder[k - 1]))
      c.fail("solve", "refinements", "need increasing interval counts >= 2");
  const auto slope = optional_number(c, "solve", "slope");
  const double slope_tol = positive(c, "solve", "slope_tolerance", 0.2);
  if (slope && !exact_energy && ladder.size() < 3)
    c.fail("solve", "slope", "a Richardson slope needs three refinements");
  if (slope && exact_energy && ladder.size() < 2)
    c.fail("solve", "slope", "a slope needs two refinements");
  const auto sup_tol = optional_number(c, "solve", "sup_tolerance");
  if (sup_tol && !exact) c.fail("solve", "sup_tolerance", "needs an exact expression");
  const bool checkpoints = c.boolean("solve", "checkpoint", true);
  return [=] {
    TaskOutput out;
    std::vector<double> hs, energies, energy_errors;
    nlohmann::json levels = nlohmann::json::array();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t N : ladder) {
      SolveConfig cfg = base;
      cfg.grid = node_lattice(dom.n, N, dom.origin[0], dom.length());
      cfg.boundary = GridField::sample(cfg.grid, [&](const Point& x) { return boundary(x); });
      const Solution sol = minimize(cfg);
      const double h = cfg.grid.spacing;
      nlohmann::json lv = {{"intervals", N},           {"h", h},
                           {"energy", sol.energy},     {"residual", sol.residual},
                           {"iterations", sol.iterations}, {"converged", sol.converged},
                           {"monotone", sol.energy_log_monotone()}};
      std::vector<std::string> row = {std::to_string(N), fmt(h), fmt(sol.energy), fmt(sol.residual),
                                      std::to_string(sol.iterations)};
      if (exact) {
        double sup = 0.0;
        for (std::size_t k = 0; k < sol.u.size(); ++k)
          sup = std::max(sup, std::abs(sol.u[k] - (*exact)(cfg.grid.center(k))));
        lv["supError"] = sup;
        row.push_back(fmt(sup));
        if (sup_tol) out.check(sup <= *sup_tol, "nodal error <= sup_tolerance at N=" + std::to_string(N));
      }
      if (exact_energy) {
        energy_errors.push_back(std::abs(sol.energy - *exact_energy));
        lv["energyError"] = energy_errors.back();
        row.push_back(fmt(energy_errors.back()));
      }
      out.check(sol.converged, "solver converged at N=" + std::to_string(N));
      out.check(sol.energy_log_monotone(), "energy log non-increasing at N=" + std::to_string(N));
      hs.push_back(h);
      energies.push_back(sol.energy);
      levels.push_back(lv);
      rows.push_back(row);
      if (checkpoints) out.checkpoints.emplace_back("solve_N" + std::to_string(N), sol);
    }
    std::vector<std::string> header = {"intervals", "h", "energy", "residual", "iterations"};
    if (exact) header.push_back("sup_error");
    if (exact_energy) header.push_back("energy_error");
    out.tables["solve.csv"] = csv(header, rows);
    out.results = {{"model", describe(nf)}, {"optimizer", to_string(base.optimizer)},
                   {"boundary", boundary.text()}, {"levels", levels}};
    std::vector<double> slopes;
    if (exact_energy && hs.size() >= 2) {
      for (std::size_t k = 1; k < hs.size(); ++k)
        slopes.push_back(std::log(energy_errors[k - 1] / energy_errors[k]) / std::log(hs[k - 1] / hs[k]));
      out.results["fit"] = log_slope(hs, energy_errors);
      out.results["slopeKind"] = "energy_error";
    } else if (hs.size() >= 3) {
      for (std::size_t k = 2; k < hs.size(); ++k)
        slopes.push_back(std::log(std::abs(energies[k - 2] - energies[k - 1]) /
                                  std::abs(energies[k - 1] - energies[k])) /
                         std::log(hs[k - 2] / hs[k - 1]));
      out.results["slopeKind"] = "richardson";
    }
    out.results["slopes"] = slopes;
    if (slope)
      for (double sl : slopes)
        out.check(std::abs(sl - *slope) <= slope_tol, "convergence slope within slope_tolerance");
    out.summary = "energy " + fmt(energies.back()) + " at N=" + std::to_string(ladder.back());
    if (!slopes.empty()) out.summary += ", slope " + fmt(slopes.back());
    return out;
  };
}

// ---------------------------------------------------------------------------
// regularity: oscillation decay and ratio sweeps for one minimizer.

inline TaskRunner read_regularity_task(const Config& c, const TaskContext& ctx) {
  using namespace detail;
  const NFunction nf = read_model(c, ctx);
  const auto dom = read_domain(c);
  require_square_box(c, dom);
  SolveConfig cfg = read_solver(c, "regularity", nf, "damped_newton");
  const auto boundary = expression(c, "regularity", "boundary", "");
  cfg.grid = node_lattice(dom.n, dom.dims[0], dom.origin[0], dom.length());
  cfg.boundary = GridField::sample(cfg.grid, [&](const Point& x) { return boundary(x); });
  const double mid = dom.origin[0] + 0.5 * dom.length();
  const Point center = point(c, "regularity", "center", {mid, dom.n == 2 ? mid : 0.0});
  const double r0 = positive(c, "regularity", "r0", 0.45 * dom.length());
  try {
    dphase::detail::require_inside(cfg.grid, center, r0);
  } catch (const std::exception& e) {
    c.fail("regularity", "r0", e.what());
  }
  const int levels = static_cast<int>(count(c, "regularity", "levels", 4));
  const double theta_max = c.number("regularity", "theta_max", 0.95);
  const double beta_min = c.number("regularity", "beta_min", 0.1);
  const double r2_min = c.number("regularity", "r2_min", 0.9);
  const auto cacc_max = optional_number(c, "regularity", "caccioppoli_max");
  const auto linf_max = optional_number(c, "regularity", "linfty_max");
  const bool checkpoints = c.boolean("regularity", "checkpoint", true);
  return [=] {
    TaskOutput out;
    const Solution sol = minimize(cfg);
    out.check(sol.converged, "solver converged");
    out.check(sol.energy_log_monotone(), "energy log non-increasing");
    auto d = holder_diagnostic(sol, center, r0, levels);
    // Ball pairs (R/2, R) down the same ladder while R spans >= 4 lattice steps.
    std::vector<std::pair<Point, std::pair<double, double>>> balls;
    for (int j = 0; j < levels; ++j) {
      const double R = r0 * std::pow(4.0, -j);
      if (R < 4.0 * cfg.grid.spacing) break;
      balls.push_back({center, {0.5 * R, R}});
    }
    regularity_sweeps(sol, balls, d);
    const double cmax = d.caccioppoli.empty() ? 0.0 : *std::max_element(d.caccioppoli.begin(), d.caccioppoli.end());
    const double lmax = d.linfty.empty() ? 0.0 : *std::max_element(d.linfty.begin(), d.linfty.end());
    out.check(static_cast<int>(d.oscillation.size()) == levels, "all oscillation levels resolved");
    for (std::size_t j = 0; j < d.theta.size(); ++j)
      out.check(d.theta[j] <= theta_max, "oscillation ratio theta_" + std::to_string(j + 1) + " <= theta_max");
    out.check(d.beta > beta_min, "fitted Hoelder exponent > beta_min");
    out.check(d.r_squared >= r2_min, "fit R^2 >= r2_min");
    if (cacc_max) out.check(cmax <= *cacc_max, "Caccioppoli ratios <= caccioppoli_max");
    if (linf_max) out.check(lmax <= *linf_max, "L-infinity ratios <= linfty_max");
    out.results = d.to_json();
    out.results["model"] = describe(nf);
    out.results["solver"] = checkpoint_metadata(sol);
    out.results["caccioppoliMax"] = cmax;
    out.results["linftyMax"] = lmax;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < d.oscillation.size(); ++j)
      rows.push_back({fmt(d.oscillation[j].radius), fmt(d.oscillation[j].osc),
                      j ? fmt(d.theta[j - 1]) : ""});
    out.tables["oscillation.csv"] = csv({"radius", "osc", "theta"}, rows);
    rows.clear();
    for (double v : d.caccioppoli) rows.push_back({"caccioppoli", fmt(v)});
    for (double v : d.linfty) rows.push_back({"linfty", fmt(v)});
    out.tables["sweeps.csv"] = csv({"kind", "ratio"}, rows);
    if (checkpoints) out.checkpoints.emplace_back("regularity", sol);
    out.summary = "beta = " + fmt(d.beta) + ", R^2 = " + fmt(d.r_squared);
    return out;
  };
}

/// Reads the task named by the top-level `task` key.
inline TaskRunner read_task(const Config& c, const TaskContext& ctx) {
  using Reader = TaskRunner (*)(const Config&, const TaskContext&);
  const Reader r = detail::one_of<Reader>(c, "", "task",
                                          {{"norm", read_norm_task},
                                           {"muck", read_muck_task},
                                           {"jensen", read_jensen_task},
                                           {"maximal", read_maximal_task},
                                           {"poincare", read_poincare_task},
                                           {"solve", read_solve_task},
                                           {"regularity", read_regularity_task}},
                                          "");
  return r(c, ctx);
}

}  // namespace dphase::cli
