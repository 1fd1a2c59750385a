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

#include <dphase/core.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dphase {

/// Uniform, isotropic, cell-centred grid over the box
/// [origin, origin + dims * spacing]. Cells are stored with the first axis
/// fastest: index = i + dims[0] * j.
struct GridGeometry {
  int n = 1;
  std::array<std::size_t, 2> dims{1, 1};
  Point origin{0.0, 0.0};
  double spacing = 1.0;

  GridGeometry() = default;
  GridGeometry(int dim, std::array<std::size_t, 2> extents, Point lower,
               double h)
      : n(dim), dims(extents), origin(lower), spacing(h) {
    if (n != 1 && n != 2) throw InputError("grid dimension must be 1 or 2");
    if (n == 1) {
      dims[1] = 1;
      origin[1] = 0.0;
    }
    if (dims[0] == 0 || dims[1] == 0) throw InputError("grid has no cells");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      throw InputError("grid spacing must be positive");
    if (!std::isfinite(origin[0]) || !std::isfinite(origin[1]))
      throw InputError("grid origin must be finite");
  }

  /// n-dimensional box [lower, lower + cells * h] with `cells` per axis.
  static GridGeometry cube(int dim, std::size_t cells, double lower,
                           double length) {
    return GridGeometry(dim, {cells, dim == 2 ? cells : 1},
                        {lower, dim == 2 ? lower : 0.0},
                        length / static_cast<double>(cells));
  }

  std::size_t size() const { return dims[0] * dims[1]; }
  std::size_t index(std::size_t i, std::size_t j = 0) const {
    return i + dims[0] * j;
  }
  std::size_t ix(std::size_t c) const { return c % dims[0]; }
  std::size_t iy(std::size_t c) const { return c / dims[0]; }

  Point center(std::size_t c) const {
    Point x{origin[0] + (static_cast<double>(ix(c)) + 0.5) * spacing, 0.0};
    if (n == 2)
      x[1] = origin[1] + (static_cast<double>(iy(c)) + 0.5) * spacing;
    return x;
  }

  /// Lebesgue measure of one cell, h^n.
  double cell_volume() const { return n == 2 ? spacing * spacing : spacing; }

  Point upper() const {
    return {origin[0] + static_cast<double>(dims[0]) * spacing,
            n == 2 ? origin[1] + static_cast<double>(dims[1]) * spacing : 0.0};
  }

  bool contains(const Point& x) const {
    const Point hi = upper();
    if (x[0] < origin[0] || x[0] > hi[0]) return false;
    if (n == 2 && (x[1] < origin[1] || x[1] > hi[1])) return false;
    return true;
  }

  /// Cell containing x (clamped onto the boundary cells).
  std::optional<std::size_t> locate(const Point& x) const {
    if (!contains(x)) return std::nullopt;
    auto axis = [&](int a) {
      const double r = (x[a] - origin[a]) / spacing;
      const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(r)));
      return std::min(k, dims[a] - 1);
    };
    return index(axis(0), n == 2 ? axis(1) : 0);
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Real-valued function sampled at cell centres. Values are finite.
class GridField {
 public:
  GridField() = default;
  explicit GridField(GridGeometry g, double fill = 0.0)
      : geom_(g), values_(g.size(), fill) {
    check_value(fill);
  }
  GridField(GridGeometry g, std::vector<double> values)
      : geom_(g), values_(std::move(values)) {
    if (values_.size() != geom_.size())
      throw InputError("grid field: " + std::to_string(values_.size()) +
                       " values for " + std::to_string(geom_.size()) +
                       " cells");
    for (double v : values_) check_value(v);
  }

  /// Samples fn at every cell centre.
  static GridField sample(GridGeometry g,
                          const std::function<double(const Point&)>& fn) {
    std::vector<double> v(g.size());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = fn(g.center(c));
    return GridField(g, std::move(v));
  }

  const GridGeometry& geometry() const { return geom_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t c) const { return values_[c]; }
  const std::vector<double>& values() const { return values_; }

  void set(std::size_t c, double v) {
    check_value(v);
    values_[c] = v;
  }

  GridField map(const std::function<double(double)>& fn) const {
    std::vector<double> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), fn);
    return GridField(geom_, std::move(v));
  }

  GridField scaled(double s) const {
    return map([s](double v) { return s * v; });
  }

  GridField abs() const {
    return map([](double v) { return std::abs(v); });
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  static void check_value(double v) {
    if (!std::isfinite(v)) throw InputError("grid field value is not finite");
  }

  GridGeometry geom_;
  std::vector<double> values_;
};

inline void require_grid(const GridField& a, const GridGeometry& g) {
  if (!(a.geometry() == g)) throw InputError("field lives on a different grid");
}

inline void require_same_grid(const GridField& a, const GridField& b) {
  if (!(a.geometry() == b.geometry()))
    throw InputError("grid fields live on different grids");
}

/// A set of cells of a grid: the whole box, or a ball/cube sub-mask.
class Domain {
 public:
  static Domain box(const GridGeometry& g) {
    Domain d(g);
    d.cells_.resize(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) d.cells_[c] = c;
    return d;
  }

  /// Cells whose centre satisfies |x_c - center| < radius.
  static Domain ball(const GridGeometry& g, const Point& center,
                     double radius) {
    Domain d(g);
    d.center_ = center;
    d.radius_ = radius;
    for (std::size_t c = 0; c < g.size(); ++c)
      if (distance(g.center(c), center) < radius) d.cells_.push_back(c);
    if (d.cells_.empty()) throw DomainError("ball contains no cell centre");
    return d;
  }

  /// Arbitrary predicate on cell centres.
  static Domain where(const GridGeometry& g,
                      const std::function<bool(const Point&)>& inside) {
    Domain d(g);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (inside(g.center(c))) d.cells_.push_back(c);
    if (d.cells_.empty()) throw DomainError("mask contains no cell");
    return d;
  }

  static Domain from_cells(const GridGeometry& g,
                           std::vector<std::size_t> cells) {
    Domain d(g);
    d.cells_ = std::move(cells);
    if (d.cells_.empty()) throw DomainError("mask contains no cell");
    for (std::size_t c : d.cells_)
      if (c >= g.size()) throw DomainError("mask cell outside grid");
    return d;
  }

  const GridGeometry& geometry() const { return geom_; }
  const std::vector<std::size_t>& cells() const { return cells_; }
  std::size_t count() const { return cells_.size(); }
  double measure() const {
    return static_cast<double>(cells_.size()) * geom_.cell_volume();
  }

  bool is_ball() const { return radius_ > 0.0; }
  const Point& center() const { return center_; }
  /// Nominal radius of a ball mask (0 for other masks).
  double radius() const { return radius_; }

  /// Whether the ball of this mask lies inside the grid box.
  bool ball_inside_box() const {
    const Point lo = geom_.origin;
    const Point hi = geom_.upper();
    for (int a = 0; a < geom_.n; ++a)
      if (center_[a] - radius_ < lo[a] - 1e-12 ||
          center_[a] + radius_ > hi[a] + 1e-12)
        return false;
    return true;
  }

  std::vector<char> indicator() const {
    std::vector<char> in(geom_.size(), 0);
    for (std::size_t c : cells_) in[c] = 1;
    return in;
  }

 private:
  explicit Domain(const GridGeometry& g) : geom_(g) {}

  GridGeometry geom_;
  std::vector<std::size_t> cells_;
  Point center_{0.0, 0.0};
  double radius_ = 0.0;
};

/// Mean of f over the cells of d.
inline double mean(const GridField& f, const Domain& d) {
  double s = 0.0;
  for (std::size_t c : d.cells()) s += f[c];
  return s / static_cast<double>(d.count());
}

// ---------------------------------------------------------------------------
// Grid-field files.
//
//   dphase-grid 1
//   n 2
//   dims 64 64
//   origin -1 -1
//   spacing 0.03125
//   values
//   <dims[0]*dims[1] numbers, first axis fastest>

inline void write_grid(std::ostream& os, const GridField& f) {
  const auto& g = f.geometry();
  os << "dphase-grid 1\n";
  os << "n " << g.n << "\n";
  os << "dims " << g.dims[0];
  if (g.n == 2) os << ' ' << g.dims[1];
  os << "\norigin " << std::setprecision(17) << g.origin[0];
  if (g.n == 2) os << ' ' << g.origin[1];
  os << "\nspacing " << g.spacing << "\nvalues\n";
  for (std::size_t j = 0; j < g.dims[1]; ++j) {
    for (std::size_t i = 0; i < g.dims[0]; ++i) {
      if (i) os << ' ';
      os << f[g.index(i, j)];
    }
    os << '\n';
  }
}

inline GridField read_grid(std::istream& is) {
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "dphase-grid" || version != 1)
    throw InputError("grid file: missing 'dphase-grid 1' header");
  int n = 0;
  std::array<std::size_t, 2> dims{1, 1};
  Point origin{0.0, 0.0};
  double h = 0.0;
  bool have_n = false, have_dims = false, have_origin = false, have_h = false;
  while (is >> word && word != "values") {
    if (word == "n") {
      have_n = static_cast<bool>(is >> n);
    } else if (word == "dims") {
      if (!have_n) throw InputError("grid file: 'n' must precede 'dims'");
      have_dims = static_cast<bool>(is >> dims[0]);
      if (n == 2) have_dims = have_dims && static_cast<bool>(is >> dims[1]);
    } else if (word == "origin") {
      if (!have_n) throw InputError("grid file: 'n' must precede 'origin'");
      have_origin = static_cast<bool>(is >> origin[0]);
      if (n == 2) have_origin = have_origin && static_cast<bool>(is >> origin[1]);
    } else if (word == "spacing") {
      have_h = static_cast<bool>(is >> h);
    } else {
      throw InputError("grid file: unknown header key '" + word + "'");
    }
  }
  if (!(have_n && have_dims && have_origin && have_h) || word != "values")
    throw InputError("grid file: incomplete header");
  GridGeometry g(n, dims, origin, h);
  std::vector<double> v(g.size());
  for (auto& x : v)
    if (!(is >> x)) throw InputError("grid file: too few values");
  if (is >> word) throw InputError("grid file: trailing data");
  return GridField(g, std::move(v));
}

inline GridField read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file " + path);
  return read_grid(in);
}

inline void write_grid_file(const std::string& path, const GridField& f) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write grid file " + path);
  write_grid(out, f);
}

/// CSV with a header row: "x,value" (1D) or "x,y,value" (2D), one row per
/// cell centre.
inline void write_csv(std::ostream& os, const GridField& f) {
  const auto& g = f.geometry();
  os << (g.n == 2 ? "x,y,value\n" : "x,value\n") << std::setprecision(17);
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Point x = g.center(c);
    os << x[0] << ',';
    if (g.n == 2) os << x[1] << ',';
    os << f[c] << '\n';
  }
}

/// Reads the CSV layout of write_csv; rows may come in any order but must
/// form a complete uniform lattice.
inline GridField read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("csv: empty input");
  const int n = line.rfind("x,y,value", 0) == 0 ? 2
                : line.rfind("x,value", 0) == 0 ? 1
                                                  : 0;
  if (n == 0) throw InputError("csv: header must be 'x,value' or 'x,y,value'");
  std::vector<std::array<double, 3>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::array<double, 3> r{0.0, 0.0, 0.0};
    bool ok = static_cast<bool>(ls >> r[0]);
    if (n == 2) ok = ok && static_cast<bool>(ls >> r[1]);
    ok = ok && static_cast<bool>(ls >> r[2]);
    if (!ok) throw InputError("csv: malformed row '" + line + "'");
    rows.push_back(r);
  }
  if (rows.empty()) throw InputError("csv: no data rows");
  auto axis_values = [&](int a) {
    std::vector<double> xs;
    for (const auto& r : rows) xs.push_back(r[a]);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double u, double v) {
                           return std::abs(u - v) <=
                                  1e-9 * std::max(1.0, std::abs(u));
                         }),
             xs.end());
    return xs;
  };
  const auto xs = axis_values(0);
  const auto ys = n == 2 ? axis_values(1) : std::vector<double>{0.0};
  const double h = xs.size() > 1 ? xs[1] - xs[0]
                   : ys.size() > 1 ? ys[1] - ys[0]
                                   : 1.0;
  GridGeometry g(n, {xs.size(), ys.size()},
                 {xs.front() - 0.5 * h, n == 2 ? ys.front() - 0.5 * h : 0.0}, h);
  if (rows.size() != g.size()) throw InputError("csv: incomplete lattice");
  std::vector<double> v(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::llround((r[0] - xs.front()) / h));
    const auto j = n == 2 ? static_cast<std::size_t>(
                                std::llround((r[1] - ys.front()) / h))
                          : 0;
    if (i >= g.dims[0] || j >= g.dims[1])
      throw InputError("csv: row off the lattice");
    v[g.index(i, j)] = r[2];
  }
  return GridField(g, std::move(v));
}

}  // namespace dphase
