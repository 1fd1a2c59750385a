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

#include <cctype>
#include <charconv>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dphase {

/// Declarative description of a modulating coefficient a(x) >= 0.
struct WeightSpec {
  enum class Kind {
    Zero,
    Constant,
    PowerClipped,  // min{|x|^alpha, 1}
    Power,         // |x|^alpha
    HoelderBump,   // min{1, min_i (c_i + |x - z_i|^alpha)}
    Checkerboard,  // low/high alternating on cells of side `scale`
    UserGrid,      // piecewise constant on a grid
    Combo          // pointwise sum / min / max
  };
  enum class Op { Sum, Min, Max };
  struct Cone {
    double c = 0.0;
    Point z{0.0, 0.0};
  };

  Kind kind = Kind::Zero;
  double value = 0.0;  // Constant: c; power kinds and HoelderBump: alpha
  std::vector<Cone> cones;
  double low = 0.0, high = 1.0, scale = 1.0;
  std::shared_ptr<const GridField> grid;
  std::string source;  // file a UserGrid was read from, if any
  Op op = Op::Sum;
  std::shared_ptr<const WeightSpec> left, right;

  static WeightSpec zero() { return {}; }

  static WeightSpec constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw InputError("constant weight must be finite and >= 0");
    WeightSpec w;
    w.kind = Kind::Constant;
    w.value = c;
    return w;
  }

  static WeightSpec power_clipped(double alpha) {
    check_finite(alpha, "power_clipped exponent");
    WeightSpec w;
    w.kind = Kind::PowerClipped;
    w.value = alpha;
    return w;
  }

  static WeightSpec power(double alpha) {
    check_finite(alpha, "power exponent");
    WeightSpec w;
    w.kind = Kind::Power;
    w.value = alpha;
    return w;
  }

  static WeightSpec hoelder_bump(double alpha, std::vector<Cone> cones) {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw InputError("hoelder_bump exponent must lie in (0, 1]");
    if (cones.empty()) throw InputError("hoelder_bump needs at least one cone");
    for (const auto& k : cones)
      if (!(k.c >= 0.0) || !std::isfinite(k.z[0]) || !std::isfinite(k.z[1]))
        throw InputError("hoelder_bump cone offsets must be >= 0");
    WeightSpec w;
    w.kind = Kind::HoelderBump;
    w.value = alpha;
    w.cones = std::move(cones);
    return w;
  }

  static WeightSpec checkerboard(double low, double high, double scale) {
    if (!(low >= 0.0 && high >= 0.0) || !std::isfinite(low) ||
        !std::isfinite(high))
      throw InputError("checkerboard levels must be finite and >= 0");
    if (!(scale > 0.0)) throw InputError("checkerboard scale must be > 0");
    WeightSpec w;
    w.kind = Kind::Checkerboard;
    w.low = low;
    w.high = high;
    w.scale = scale;
    return w;
  }

  static WeightSpec user_grid(GridField g, std::string source = {}) {
    for (double v : g.values())
      if (v < 0.0) throw InputError("user grid weight has negative values");
    WeightSpec w;
    w.kind = Kind::UserGrid;
    w.grid = std::make_shared<const GridField>(std::move(g));
    w.source = std::move(source);
    return w;
  }

  static WeightSpec combo(Op op, WeightSpec l, WeightSpec r) {
    WeightSpec w;
    w.kind = Kind::Combo;
    w.op = op;
    w.left = std::make_shared<const WeightSpec>(std::move(l));
    w.right = std::make_shared<const WeightSpec>(std::move(r));
    return w;
  }

  /// True when the weight is identically zero by construction.
  bool is_zero() const {
    return kind == Kind::Zero || (kind == Kind::Constant && value == 0.0);
  }

 private:
  static void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + " not finite");
  }
};

/// a(x). Power with a negative exponent returns +inf at x = 0; grid sampling
/// replaces such values by sub-cell averages.
inline double eval_weight(const WeightSpec& w, const Point& x) {
  using K = WeightSpec::Kind;
  if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
    throw DomainError("weight evaluated at a non-finite point");
  switch (w.kind) {
    case K::Zero:
      return 0.0;
    case K::Constant:
      return w.value;
    case K::PowerClipped: {
      const double r = norm(x);
      if (r >= 1.0) return 1.0;
      if (r == 0.0) return w.value > 0.0 ? 0.0 : 1.0;
      return std::min(1.0, std::pow(r, w.value));
    }
    case K::Power: {
      const double r = norm(x);
      if (r == 0.0)
        return w.value > 0.0   ? 0.0
               : w.value == 0.0 ? 1.0
                                : std::numeric_limits<double>::infinity();
      return std::pow(r, w.value);
    }
    case K::HoelderBump: {
      double m = 1.0;
      for (const auto& k : w.cones)
        m = std::min(m, k.c + std::pow(distance(x, k.z), w.value));
      return m;
    }
    case K::Checkerboard: {
      const auto parity = static_cast<long long>(std::floor(x[0] / w.scale)) +
                          static_cast<long long>(std::floor(x[1] / w.scale));
      return (parity & 1) ? w.high : w.low;
    }
    case K::UserGrid: {
      const auto c = w.grid->geometry().locate(x);
      if (!c) throw DomainError("point outside the user weight grid");
      return (*w.grid)[*c];
    }
    case K::Combo: {
      const double l = eval_weight(*w.left, x);
      const double r = eval_weight(*w.right, x);
      switch (w.op) {
        case WeightSpec::Op::Sum:
          return l + r;
        case WeightSpec::Op::Min:
          return std::min(l, r);
        case WeightSpec::Op::Max:
          return std::max(l, r);
      }
    }
  }
  return 0.0;
}

/// a sampled at every cell centre of g. A non-finite centre value (a
/// singular power hit exactly) is replaced by the mean over an 8^n lattice of
/// sub-cell midpoints.
inline std::vector<double> sample_weight(const WeightSpec& w,
                                         const GridGeometry& g) {
  std::vector<double> a(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Point x = g.center(c);
    double v = eval_weight(w, x);
    if (!std::isfinite(v)) {
      constexpr int k = 8;
      double s = 0.0;
      int cnt = 0;
      for (int j = 0; j < (g.n == 2 ? k : 1); ++j)
        for (int i = 0; i < k; ++i) {
          Point y = x;
          y[0] += ((i + 0.5) / k - 0.5) * g.spacing;
          if (g.n == 2) y[1] += ((j + 0.5) / k - 0.5) * g.spacing;
          s += eval_weight(w, y);
          ++cnt;
        }
      v = s / cnt;
    }
    if (!std::isfinite(v) || v < 0.0)
      throw InputError("weight sample is not a finite nonnegative number");
    a[c] = v;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Text form used by config files:
//   zero | constant(c) | power_clipped(alpha) | power(alpha)
//   hoelder_bump(alpha; c, z1[, z2]; ...) | checkerboard(low, high, scale)
//   grid(path) | sum(w, w) | min(w, w) | max(w, w)

inline std::string to_string(const WeightSpec& w) {
  using K = WeightSpec::Kind;
  std::ostringstream os;
  os.precision(17);
  switch (w.kind) {
    case K::Zero:
      os << "zero";
      break;
    case K::Constant:
      os << "constant(" << w.value << ')';
      break;
    case K::PowerClipped:
      os << "power_clipped(" << w.value << ')';
      break;
    case K::Power:
      os << "power(" << w.value << ')';
      break;
    case K::HoelderBump:
      os << "hoelder_bump(" << w.value;
      for (const auto& k : w.cones)
        os << "; " << k.c << ", " << k.z[0] << ", " << k.z[1];
      os << ')';
      break;
    case K::Checkerboard:
      os << "checkerboard(" << w.low << ", " << w.high << ", " << w.scale
         << ')';
      break;
    case K::UserGrid:
      os << "grid(" << (w.source.empty() ? "<memory>" : w.source) << ')';
      break;
    case K::Combo:
      os << (w.op == WeightSpec::Op::Sum   ? "sum("
             : w.op == WeightSpec::Op::Min ? "min("
                                           : "max(")
         << to_string(*w.left) << ", " << to_string(*w.right) << ')';
      break;
  }
  return os.str();
}

namespace detail {

class WeightParser {
 public:
  WeightParser(std::string_view text, std::string base_dir)
      : s_(text), base_(std::move(base_dir)) {}

  WeightSpec parse() {
    WeightSpec w = spec();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing text");
    return w;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("weight spec '" + std::string(s_) + "' at column " +
                     std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip();
    const std::size_t b = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (b == pos_) fail("expected a weight name");
    return std::string(s_.substr(b, pos_ - b));
  }

  double number() {
    skip();
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

  WeightSpec spec() {
    const std::string name = ident();
    if (name == "zero") {
      if (accept('(')) expect(')');
      return WeightSpec::zero();
    }
    expect('(');
    WeightSpec w;
    if (name == "constant") {
      w = WeightSpec::constant(number());
    } else if (name == "power_clipped") {
      w = WeightSpec::power_clipped(number());
    } else if (name == "power") {
      w = WeightSpec::power(number());
    } else if (name == "checkerboard") {
      const double lo = number();
      expect(',');
      const double hi = number();
      expect(',');
      w = WeightSpec::checkerboard(lo, hi, number());
    } else if (name == "hoelder_bump") {
      const double alpha = number();
      std::vector<WeightSpec::Cone> cones;
      while (accept(';')) {
        WeightSpec::Cone k;
        k.c = number();
        expect(',');
        k.z[0] = number();
        if (accept(',')) k.z[1] = number();
        cones.push_back(k);
      }
      w = WeightSpec::hoelder_bump(alpha, std::move(cones));
    } else if (name == "grid") {
      skip();
      const std::size_t b = pos_;
      while (pos_ < s_.size() && s_[pos_] != ')') ++pos_;
      std::string path(s_.substr(b, pos_ - b));
      while (!path.empty() && std::isspace(static_cast<unsigned char>(path.back())))
        path.pop_back();
      if (path.empty()) fail("grid() needs a file path");
      const std::string full =
          (path.front() == '/' || base_.empty()) ? path : base_ + "/" + path;
      w = WeightSpec::user_grid(read_grid_file(full), path);
    } else if (name == "sum" || name == "min" || name == "max") {
      WeightSpec l = spec();
      expect(',');
      WeightSpec r = spec();
      w = WeightSpec::combo(name == "sum"   ? WeightSpec::Op::Sum
                            : name == "min" ? WeightSpec::Op::Min
                                            : WeightSpec::Op::Max,
                            std::move(l), std::move(r));
    } else {
      fail("unknown weight '" + name + "'");
    }
    expect(')');
    return w;
  }

  std::string_view s_;
  std::string base_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the text form. Relative grid() paths resolve against base_dir.
inline WeightSpec parse_weight(std::string_view text,
                               const std::string& base_dir = {}) {
  return detail::WeightParser(text, base_dir).parse();
}

// ---------------------------------------------------------------------------
// Classical Muckenhoupt constant.

struct ApEstimate {
  double value = 1.0;
  bool infinite = false;      // some cube has w = 0 on a cell
  std::size_t worst = 0;      // index of the maximising cube
  std::vector<double> per_cube;
};

/// max over cubes of (mean w)(mean w^{-1/(p-1)})^{p-1}, midpoint rule on
/// cell samples. Cubes must lie in the grid box.
inline ApEstimate classical_ap_constant(const std::vector<double>& w,
                                        const GridGeometry& g, double p,
                                        const CubeFamily& cubes) {
  if (!(p > 1.0)) throw InputError("classical A_p needs p > 1");
  if (cubes.empty()) throw InputError("empty cube family");
  if (w.size() != g.size()) throw InputError("weight samples do not fit grid");
  ApEstimate est;
  est.value = 0.0;
  est.per_cube.assign(cubes.size(), 0.0);
  const double e = 1.0 / (p - 1.0);
  parallel_for(cubes.size(), [&](std::size_t k) {
    if (!cube_inside(cubes.cubes[k], g))
      throw DomainError("cube outside the grid box");
    const auto cells = cube_cells(cubes.cubes[k], g);
    double s1 = 0.0, s2 = 0.0;
    bool inf = false;
    for (std::size_t c : cells) {
      s1 += w[c];
      if (w[c] <= 0.0)
        inf = true;
      else
        s2 += std::pow(w[c], -e);
    }
    const double m = static_cast<double>(cells.size());
    est.per_cube[k] = inf ? std::numeric_limits<double>::infinity()
                          : (s1 / m) * std::pow(s2 / m, p - 1.0);
  });
  for (std::size_t k = 0; k < cubes.size(); ++k) {
    if (est.per_cube[k] > est.value || k == 0) {
      est.value = est.per_cube[k];
      est.worst = k;
    }
  }
  est.infinite = std::isinf(est.value);
  return est;
}

inline ApEstimate classical_ap_constant(const WeightSpec& w,
                                        const GridGeometry& g, double p,
                                        const CubeFamily& cubes) {
  return classical_ap_constant(sample_weight(w, g), g, p, cubes);
}

}  // namespace dphase
