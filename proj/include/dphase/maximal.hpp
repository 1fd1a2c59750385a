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
#include <dphase/muckenhoupt.hpp>
#include <dphase/orlicz.hpp>

#include <json.hpp>

#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dphase {

// ---------------------------------------------------------------------------
// Hardy-Littlewood maximal function over grid-aligned cubes.

namespace detail {

/// out[i] = max(in[i - w + 1 .. i]) clipped to valid indices, for an output
/// of length in.size() + w - 1.
inline std::vector<double> sliding_max_spread(const std::vector<double>& in,
                                              std::size_t w) {
  const std::size_t n = in.size(), m = n + w - 1;
  std::vector<double> out(m);
  std::deque<std::size_t> dq;
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n) {
      while (!dq.empty() && in[dq.back()] <= in[i]) dq.pop_back();
      dq.push_back(i);
    }
    while (dq.front() + w <= i) dq.pop_front();
    out[i] = in[dq.front()];
  }
  return out;
}

}  // namespace detail

/// Mf(x) = max over all grid-aligned cubes Q inside the box with x in Q of
/// mean_Q |f| (singleton cells included, so Mf >= |f|).
inline GridField hl_maximal(const GridField& f) {
  const auto& g = f.geometry();
  const std::size_t nx = g.dims[0], ny = g.dims[1];
  std::vector<double> out(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) out[c] = std::abs(f[c]);
  if (g.n == 1) {
    std::vector<double> pre(nx + 1, 0.0);
    for (std::size_t i = 0; i < nx; ++i) pre[i + 1] = pre[i] + std::abs(f[i]);
    for (std::size_t L = 2; L <= nx; ++L) {
      std::vector<double> avg(nx - L + 1);
      for (std::size_t k = 0; k + L <= nx; ++k)
        avg[k] = (pre[k + L] - pre[k]) / static_cast<double>(L);
      const auto spread = detail::sliding_max_spread(avg, L);
      for (std::size_t i = 0; i < nx; ++i) out[i] = std::max(out[i], spread[i]);
    }
    return GridField(g, std::move(out));
  }
  // 2D summed-area table
  std::vector<double> sat((nx + 1) * (ny + 1), 0.0);
  auto S = [&](std::size_t i, std::size_t j) -> double& { return sat[i + (nx + 1) * j]; };
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
      S(i + 1, j + 1) = std::abs(f[g.index(i, j)]) + S(i, j + 1) + S(i + 1, j) - S(i, j);
  const std::size_t side_max = std::min(nx, ny);
  for (std::size_t L = 2; L <= side_max; ++L) {
    const std::size_t mx = nx - L + 1, my = ny - L + 1;
    const double area = static_cast<double>(L * L);
    // window averages, then max-spread along x and along y
    std::vector<std::vector<double>> rows(my);
    for (std::size_t j = 0; j < my; ++j) {
      std::vector<double> avg(mx);
      for (std::size_t i = 0; i < mx; ++i)
        avg[i] = (S(i + L, j + L) - S(i, j + L) - S(i + L, j) + S(i, j)) / area;
      rows[j] = detail::sliding_max_spread(avg, L);  // length nx
    }
    for (std::size_t i = 0; i < nx; ++i) {
      std::vector<double> col(my);
      for (std::size_t j = 0; j < my; ++j) col[j] = rows[j][i];
      const auto spread = detail::sliding_max_spread(col, L);  // length ny
      for (std::size_t j = 0; j < ny; ++j) {
        double& o = out[g.index(i, j)];
        o = std::max(o, spread[j]);
      }
    }
  }
  return GridField(g, std::move(out));
}

/// Mf over an explicit cube family; cubes may leave the box (f is extended
/// by zero, averages use the full cube measure). Singleton cells are always
/// included.
inline GridField hl_maximal(const GridField& f, const CubeFamily& cubes) {
  const auto& g = f.geometry();
  std::vector<double> out(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) out[c] = std::abs(f[c]);
  for (const Cube& q : cubes.cubes) {
    const auto cells = cube_cells(q, g);
    double s = 0.0;
    for (std::size_t c : cells) s += std::abs(f[c]);
    const double avg = s / static_cast<double>(q.cell_count());
    for (std::size_t c : cells) out[c] = std::max(out[c], avg);
  }
  return GridField(g, std::move(out));
}

// ---------------------------------------------------------------------------
// Shifted dyadic grids over a square box of N^n cells.
//
// Grid alpha has level-j cubes of side 2^j cells, [o_j + m 2^j, o_j + (m+1) 2^j)
// per axis with o_j = dyadic_offset(alpha_axis, j). The box is extended by
// zero; levels run up to the first one where a single cube covers the box.

struct DyadicGrid {
  std::array<int, 2> alpha{0, 0};
  int n = 1;
  Index N = 1;  // cells per axis of the box
  int top = 0;  // highest level

  Index offset(int axis, int j) const { return dyadic_offset(alpha[axis], j); }

  /// Index of the level-j cube containing cell coordinate i along axis.
  Index cube_index(int axis, int j, Index i) const {
    const Index o = offset(axis, j), s = Index{1} << j;
    const Index d = i - o;
    return d >= 0 ? d / s : -((-d + s - 1) / s);
  }

  Cube cube(int j, Index mi, Index mj) const {
    Cube q;
    q.n = n;
    q.side = Index{1} << j;
    q.lo = {offset(0, j) + mi * q.side, n == 2 ? offset(1, j) + mj * q.side : 0};
    q.level = j;
    q.index = {mi, n == 2 ? mj : 0};
    q.shift = alpha[0] + 3 * alpha[1];
    return q;
  }

  /// Smallest level whose cube containing `q` exists, or nullopt when q is
  /// not inside any cube up to `max_level`.
  std::optional<Cube> smallest_containing(const Cube& q, int max_level) const {
    for (int j = 0; j <= max_level; ++j) {
      const Index a0 = cube_index(0, j, q.lo[0]);
      if (a0 != cube_index(0, j, q.lo[0] + q.side - 1)) continue;
      Index a1 = 0;
      if (n == 2) {
        a1 = cube_index(1, j, q.lo[1]);
        if (a1 != cube_index(1, j, q.lo[1] + q.side - 1)) continue;
      }
      return cube(j, a0, a1);
    }
    return std::nullopt;
  }
};

class DyadicGridSet {
 public:
  explicit DyadicGridSet(const GridGeometry& g) : geom_(g) {
    if (g.n == 2 && g.dims[0] != g.dims[1])
      throw InputError("dyadic grids need a square box");
    const Index N = static_cast<Index>(g.dims[0]);
    const int count = g.n == 2 ? 9 : 3;
    for (int k = 0; k < count; ++k) {
      DyadicGrid d;
      d.alpha = {k % 3, k / 3};
      d.n = g.n;
      d.N = N;
      Cube box;
      box.n = g.n;
      box.side = N;
      int top = 0;
      while (!d.smallest_containing(box, top)) ++top;
      d.top = top;
      grids_.push_back(d);
    }
  }

  const GridGeometry& geometry() const { return geom_; }
  std::size_t size() const { return grids_.size(); }
  const DyadicGrid& operator[](std::size_t k) const { return grids_[k]; }
  const std::vector<DyadicGrid>& grids() const { return grids_; }

 private:
  GridGeometry geom_;
  std::vector<DyadicGrid> grids_;
};

namespace detail {

/// Sums of |f| over every cube of every level that meets the box.
struct DyadicTree {
  const DyadicGrid* grid = nullptr;
  int levels = 0;
  std::vector<std::array<Index, 2>> first;  // smallest cube index per level
  std::vector<std::array<Index, 2>> count;  // cubes per axis per level
  std::vector<std::vector<double>> sums;

  double sum(int j, Index mi, Index mj) const {
    const Index a = mi - first[j][0], b = mj - first[j][1];
    if (a < 0 || b < 0 || a >= count[j][0] || b >= count[j][1]) return 0.0;
    return sums[j][static_cast<std::size_t>(a + count[j][0] * b)];
  }

  double average(int j, Index mi, Index mj) const {
    const double side = std::ldexp(1.0, j);
    return sum(j, mi, mj) / (grid->n == 2 ? side * side : side);
  }
};

inline DyadicTree build_tree(const GridField& f, const DyadicGrid& d, int levels) {
  const auto& g = f.geometry();
  DyadicTree t;
  t.grid = &d;
  t.levels = levels;
  for (int j = 0; j < levels; ++j) {
    std::array<Index, 2> lo{0, 0}, cnt{1, 1};
    for (int a = 0; a < d.n; ++a) {
      lo[a] = d.cube_index(a, j, 0);
      cnt[a] = d.cube_index(a, j, d.N - 1) - lo[a] + 1;
    }
    t.first.push_back(lo);
    t.count.push_back(cnt);
    t.sums.emplace_back(static_cast<std::size_t>(cnt[0] * cnt[1]), 0.0);
  }
  // level 0 cubes are single cells (offset 0)
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Index i = static_cast<Index>(g.ix(c)), jj = static_cast<Index>(g.iy(c));
    t.sums[0][static_cast<std::size_t>(i + t.count[0][0] * jj)] = std::abs(f[c]);
  }
  for (int j = 1; j < levels; ++j) {
    for (Index b = 0; b < t.count[j - 1][1]; ++b)
      for (Index a = 0; a < t.count[j - 1][0]; ++a) {
        const double v = t.sums[j - 1][static_cast<std::size_t>(a + t.count[j - 1][0] * b)];
        if (v == 0.0) continue;
        // child cube index -> parent index through the cell coordinate
        const Cube child = d.cube(j - 1, a + t.first[j - 1][0], b + t.first[j - 1][1]);
        const Index pi = d.cube_index(0, j, child.lo[0]) - t.first[j][0];
        const Index pj = d.n == 2 ? d.cube_index(1, j, child.lo[1]) - t.first[j][1] : 0;
        t.sums[j][static_cast<std::size_t>(pi + t.count[j][0] * pj)] += v;
      }
  }
  return t;
}

}  // namespace detail

/// Dyadic maximal function of one grid: max over ancestors of each cell.
inline GridField dyadic_maximal(const GridField& f, const DyadicGrid& d) {
  const auto& g = f.geometry();
  if (static_cast<Index>(g.dims[0]) != d.N || g.n != d.n)
    throw InputError("dyadic grid does not match the field");
  const auto t = detail::build_tree(f, d, d.top + 1);
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Index i = static_cast<Index>(g.ix(c)), jj = static_cast<Index>(g.iy(c));
    double m = 0.0;
    for (int j = 0; j <= d.top; ++j)
      m = std::max(m, t.average(j, d.cube_index(0, j, i),
                                d.n == 2 ? d.cube_index(1, j, jj) : 0));
    out[c] = m;
  }
  return GridField(g, std::move(out));
}

// ---------------------------------------------------------------------------
// Domination by the shifted dyadic grids.

struct DominationReport {
  std::size_t cells = 0;
  std::size_t pointwise_violations = 0;
  double worst_pointwise_ratio = 0.0;   // max Mf / sum_alpha M^{D_alpha} f
  std::size_t cubes_checked = 0;
  std::size_t containment_violations = 0;
  double worst_cube_ratio = 0.0;        // max over Q of min_alpha |Q_alpha| / |Q|

  bool passed() const { return pointwise_violations == 0 && containment_violations == 0; }

  nlohmann::json to_json() const {
    return {{"cells", cells},
            {"pointwiseViolations", pointwise_violations},
            {"worstPointwiseRatio", worst_pointwise_ratio},
            {"cubesChecked", cubes_checked},
            {"containmentViolations", containment_violations},
            {"worstCubeRatio", worst_cube_ratio},
            {"passed", passed()}};
  }
};

/// For Q, the smallest cube over all shifted grids containing it.
inline std::optional<Cube> best_dyadic_cover(const DyadicGridSet& grids, const Cube& q) {
  std::optional<Cube> best;
  for (const auto& d : grids.grids()) {
    const auto c = d.smallest_containing(q, 62);
    if (c && (!best || c->side < best->side)) best = c;
  }
  return best;
}

/// Mf <= 6^n sum_alpha M^{D_alpha} f on every cell, and every grid-aligned
/// cube of side <= max_side (0 = all) sits in some Q_alpha with
/// |Q_alpha| <= 6^n |Q|.
inline DominationReport shifted_domination_check(const GridField& f,
                                                 const DyadicGridSet& grids,
                                                 Index max_side = 0) {
  const auto& g = f.geometry();
  DominationReport rep;
  const double six_n = g.n == 2 ? 36.0 : 6.0;
  const GridField M = hl_maximal(f);
  std::vector<double> sum(f.size(), 0.0);
  for (const auto& d : grids.grids()) {
    const GridField md = dyadic_maximal(f, d);
    for (std::size_t c = 0; c < f.size(); ++c) sum[c] += md[c];
  }
  rep.cells = f.size();
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (M[c] > six_n * sum[c]) ++rep.pointwise_violations;
    if (M[c] > 0.0) rep.worst_pointwise_ratio = std::max(rep.worst_pointwise_ratio, M[c] / sum[c]);
  }
  const Index N = static_cast<Index>(g.dims[0]);
  if (max_side <= 0) max_side = N;
  for (Index s = 1; s <= max_side; ++s)
    for (Index j = 0; j + s <= (g.n == 2 ? N : s); ++j)
      for (Index i = 0; i + s <= N; ++i) {
        Cube q;
        q.n = g.n;
        q.lo = {i, g.n == 2 ? j : 0};
        q.side = s;
        const auto cover = best_dyadic_cover(grids, q);
        ++rep.cubes_checked;
        const double ratio = cover ? static_cast<double>(cover->cell_count()) /
                                         static_cast<double>(q.cell_count())
                                   : std::numeric_limits<double>::infinity();
        rep.worst_cube_ratio = std::max(rep.worst_cube_ratio, ratio);
        if (ratio > six_n) ++rep.containment_violations;
      }
  return rep;
}

// ---------------------------------------------------------------------------
// Calderon-Zygmund decomposition on one dyadic grid.

struct CZCube {
  int level = 0;
  std::array<Index, 2> index{0, 0};
  Cube cube;
  double avg = 0.0;
};

struct CZLevel {
  int k = 0;
  double threshold = 0.0;  // gamma^k
  std::vector<CZCube> cubes;
};

struct CZDecomposition {
  double gamma = 2.0;
  int n = 1;
  std::vector<CZLevel> levels;

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& L : levels) {
      nlohmann::json cubes = nlohmann::json::array();
      for (const auto& c : L.cubes) {
        nlohmann::json idx = nlohmann::json::array({c.index[0]});
        if (n == 2) idx.push_back(c.index[1]);
        cubes.push_back({{"level", c.level}, {"index", idx}, {"avg", c.avg}});
      }
      out.push_back({{"k", L.k}, {"cubes", cubes}});
    }
    return out;
  }
};

/// Maximal dyadic cubes with gamma^k < mean |f| for each k in [k_lo, k_hi],
/// chosen top-down. Without a range, k spans the levels where
/// {M^D f > gamma^k} is non-empty.
inline CZDecomposition cz_decompose(const GridField& f, const DyadicGrid& d,
                                    double gamma = 2.0,
                                    std::optional<std::pair<int, int>> k_range = {}) {
  if (!(gamma > 1.0)) throw InputError("CZ decomposition needs gamma > 1");
  const auto& g = f.geometry();
  CZDecomposition out;
  out.gamma = gamma;
  out.n = g.n;
  double total = 0.0, fmax = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) {
    total += std::abs(f[c]);
    fmax = std::max(fmax, std::abs(f[c]));
  }
  if (total == 0.0) return out;
  const double lg = std::log(gamma);
  int k_lo, k_hi;
  if (k_range) {
    std::tie(k_lo, k_hi) = *k_range;
  } else {
    const GridField md = dyadic_maximal(f, d);
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < f.size(); ++c) mn = std::min(mn, md[c]);
    k_lo = static_cast<int>(std::floor(std::log(mn) / lg));
    k_hi = static_cast<int>(std::ceil(std::log(fmax) / lg));
  }
  // grow the tree until its top cube has mean <= gamma^k_lo
  const double scale = g.n == 2 ? 4.0 : 2.0;
  int levels = d.top + 1;
  double top_avg = total / std::pow(scale, d.top);
  const double floor_level = std::pow(gamma, k_lo);
  while (top_avg > floor_level && levels < 62) {
    ++levels;
    top_avg /= scale;
  }
  DyadicGrid ext = d;
  ext.top = levels - 1;
  const auto tree = detail::build_tree(f, ext, levels);
  for (int k = k_lo; k <= k_hi; ++k) {
    CZLevel L;
    L.k = k;
    L.threshold = std::pow(gamma, k);
    std::vector<char> taken(f.size(), 0);
    for (int j = levels - 1; j >= 0; --j)
      for (Index b = 0; b < tree.count[j][1]; ++b)
        for (Index a = 0; a < tree.count[j][0]; ++a) {
          const Index mi = a + tree.first[j][0], mj = b + tree.first[j][1];
          const double avg = tree.average(j, mi, mj);
          if (!(avg > L.threshold)) continue;
          const Cube q = ext.cube(j, mi, mj);
          const auto cells = cube_cells(q, g);
          if (cells.empty() || taken[cells.front()]) continue;  // inside a chosen cube
          for (std::size_t c : cells) taken[c] = 1;
          L.cubes.push_back({j, {mi, mj}, q, avg});
        }
    if (!L.cubes.empty()) out.levels.push_back(std::move(L));
  }
  return out;
}

struct CZCheck {
  std::size_t cubes = 0;
  std::size_t lower_violations = 0;   // avg <= gamma^k
  std::size_t upper_violations = 0;   // avg > 2^n gamma^k
  std::size_t parent_violations = 0;  // parent avg > gamma^k
  std::size_t overlap_violations = 0;
  std::size_t union_mismatches = 0;   // cells where union != {M^D f > gamma^k}
  std::size_t sparsity_violations = 0;

  bool passed() const {
    return lower_violations + upper_violations + parent_violations +
               overlap_violations + union_mismatches + sparsity_violations ==
           0;
  }

  nlohmann::json to_json() const {
    return {{"cubes", cubes},
            {"lower", lower_violations},
            {"upper", upper_violations},
            {"parent", parent_violations},
            {"overlap", overlap_violations},
            {"union", union_mismatches},
            {"sparsity", sparsity_violations},
            {"passed", passed()}};
  }
};

/// Direct verification of a decomposition: the two-sided average bounds,
/// maximality, disjointness, exact union, and
/// |Q ∩ Omega_{k+m}| <= 2^n gamma^-m |Q| for m = 1..sparsity_depth.
inline CZCheck verify_cz(const CZDecomposition& cz, const GridField& f,
                         const DyadicGrid& d, int sparsity_depth = 3) {
  const auto& g = f.geometry();
  CZCheck chk;
  const double two_n = g.n == 2 ? 4.0 : 2.0;
  const GridField md = dyadic_maximal(f, d);
  auto mean_abs = [&](const Cube& q) {
    double s = 0.0;
    for (std::size_t c : cube_cells(q, g)) s += std::abs(f[c]);
    return s / static_cast<double>(q.cell_count());
  };
  std::vector<std::vector<char>> member;
  for (const auto& L : cz.levels) {
    std::vector<char> in(f.size(), 0);
    for (const auto& c : L.cubes) {
      ++chk.cubes;
      const double avg = mean_abs(c.cube);
      if (!(avg > L.threshold)) ++chk.lower_violations;
      if (avg > two_n * L.threshold) ++chk.upper_violations;
      const Cube parent = d.cube(c.level + 1, d.cube_index(0, c.level + 1, c.cube.lo[0]),
                                 g.n == 2 ? d.cube_index(1, c.level + 1, c.cube.lo[1]) : 0);
      if (mean_abs(parent) > L.threshold) ++chk.parent_violations;
      for (std::size_t cell : cube_cells(c.cube, g)) {
        if (in[cell]) ++chk.overlap_violations;
        in[cell] = 1;
      }
    }
    for (std::size_t cell = 0; cell < f.size(); ++cell)
      if (static_cast<bool>(in[cell]) != (md[cell] > L.threshold)) ++chk.union_mismatches;
    member.push_back(std::move(in));
  }
  for (std::size_t li = 0; li < cz.levels.size(); ++li)
    for (const auto& c : cz.levels[li].cubes)
      for (int m = 1; m <= sparsity_depth; ++m) {
        const int k = cz.levels[li].k + m;
        const double gk = std::pow(cz.gamma, k);
        std::size_t inside = 0;
        for (std::size_t cell : cube_cells(c.cube, g)) inside += md[cell] > gk ? 1 : 0;
        const double bound = two_n * std::pow(cz.gamma, -m) *
                             static_cast<double>(c.cube.cell_count());
        if (static_cast<double>(inside) > bound) ++chk.sparsity_violations;
      }
  return chk;
}

// ---------------------------------------------------------------------------
// Modular and norm boundedness of M.

/// Seeded family of functions on the whole box, each normalised afterwards.
struct BoxFunctionGen {
  std::size_t count = 200;
  std::uint64_t seed = 1;
  std::vector<TestFunction> extra;  // appended verbatim (e.g. spike families)

  std::vector<TestFunction> generate(const GridGeometry& g) const {
    std::vector<TestFunction> out;
    for (std::size_t k = 0; k < count; ++k) {
      std::mt19937_64 rng(derive_seed(seed, k));
      auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      auto cell = [&](std::size_t axis) {
        return static_cast<Index>(rng() % g.dims[axis]);
      };
      std::vector<double> v(g.size(), 0.0);
      std::string name;
      switch (k % 5) {
        case 0: {  // indicator of a random cube
          const Index N = static_cast<Index>(std::min(g.dims[0], g.n == 2 ? g.dims[1] : g.dims[0]));
          Cube q;
          q.n = g.n;
          q.side = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(std::max<Index>(1, N / 4)));
          q.lo = {static_cast<Index>(rng() % static_cast<std::uint64_t>(static_cast<Index>(g.dims[0]) - q.side + 1)),
                  g.n == 2 ? static_cast<Index>(rng() % static_cast<std::uint64_t>(static_cast<Index>(g.dims[1]) - q.side + 1)) : 0};
          for (std::size_t c : cube_cells(q, g)) v[c] = 1.0;
          name = "cube_indicator";
          break;
        }
        case 1: {  // random bumps
          const int bumps = 1 + static_cast<int>(rng() % 4);
          for (int b = 0; b < bumps; ++b) {
            const Point z = g.center(g.index(static_cast<std::size_t>(cell(0)),
                                             g.n == 2 ? static_cast<std::size_t>(cell(1)) : 0));
            const double r = g.spacing * (1.0 + unit() * 0.1 * static_cast<double>(g.dims[0]));
            const double hgt = unit();
            for (std::size_t c = 0; c < g.size(); ++c)
              v[c] += hgt * std::max(0.0, 1.0 - distance(g.center(c), z) / r);
          }
          name = "bumps";
          break;
        }
        case 2: {  // sparse random cells
          const std::size_t hits = 1 + rng() % std::max<std::size_t>(1, g.size() / 16);
          for (std::size_t h = 0; h < hits; ++h) v[rng() % g.size()] = unit();
          name = "sparse_cells";
          break;
        }
        case 3: {  // dyadic step function
          const std::size_t parts = std::size_t{1} << (1 + rng() % 4);
          std::vector<double> lv(parts * parts);
          for (auto& l : lv) l = unit() < 0.5 ? 0.0 : unit();
          for (std::size_t c = 0; c < g.size(); ++c) {
            const std::size_t bx = g.ix(c) * parts / g.dims[0];
            const std::size_t by = g.n == 2 ? g.iy(c) * parts / g.dims[1] : 0;
            v[c] = lv[bx + parts * by];
          }
          name = "dyadic_steps";
          break;
        }
        default: {  // truncated power singularity
          const Point z = g.center(g.index(static_cast<std::size_t>(cell(0)),
                                           g.n == 2 ? static_cast<std::size_t>(cell(1)) : 0));
          const double beta = 0.1 + 0.3 * unit();
          for (std::size_t c = 0; c < g.size(); ++c)
            v[c] = std::pow(std::max(distance(g.center(c), z), 0.5 * g.spacing), -beta);
          name = "power_spike";
          break;
        }
      }
      bool any = false;
      for (double x : v) any = any || x != 0.0;
      if (!any) v[0] = 1.0;
      out.push_back({name + "_" + std::to_string(k), std::move(v)});
    }
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }
};

struct BoundednessReport {
  std::string model;
  std::string variant;
  std::size_t functions = 0;
  std::size_t skipped = 0;
  double modular_ratio = 0.0;  // max rho(Mf) / rho(f)
  double norm_ratio = 0.0;     // max ||Mf|| / ||f||
  std::string modular_witness, norm_witness;
  std::vector<double> modular_ratios;

  nlohmann::json to_json() const {
    return {{"model", model},
            {"variant", variant},
            {"functions", functions},
            {"skipped", skipped},
            {"modularRatio", modular_ratio},
            {"normRatio", norm_ratio},
            {"modularWitness", modular_witness},
            {"normWitness", norm_witness}};
  }
};

/// rho(Mf)/rho(f) and ||Mf||/||f|| for unit-norm f in the given model.
template <CellModel M>
BoundednessReport verify_modular_boundedness(const M& m, const GridGeometry& g,
                                             const BoxFunctionGen& gen,
                                             const std::string& model_name,
                                             const std::string& variant) {
  const Domain box = Domain::box(g);
  const auto fns = gen.generate(g);
  BoundednessReport rep;
  rep.model = model_name;
  rep.variant = variant;
  rep.functions = fns.size();
  std::vector<double> mod(fns.size(), -1.0), nrm(fns.size(), -1.0);
  parallel_for(fns.size(), [&](std::size_t k) {
    GridField f(g, fns[k].values);
    const double n0 = luxemburg_norm(m, f, box.cells());
    if (n0 == 0.0) return;
    f = f.map([n0](double v) { return std::abs(v) / n0; });
    const double rf = modular(m, f, box.cells());
    if (rf == 0.0) return;
    const GridField Mf = hl_maximal(f);
    mod[k] = modular(m, Mf, box.cells()) / rf;
    nrm[k] = luxemburg_norm(m, Mf, box.cells());
  });
  for (std::size_t k = 0; k < fns.size(); ++k) {
    if (mod[k] < 0.0) {
      ++rep.skipped;
      continue;
    }
    rep.modular_ratios.push_back(mod[k]);
    if (mod[k] > rep.modular_ratio) {
      rep.modular_ratio = mod[k];
      rep.modular_witness = fns[k].name;
    }
    if (nrm[k] > rep.norm_ratio) {
      rep.norm_ratio = nrm[k];
      rep.norm_witness = fns[k].name;
    }
  }
  return rep;
}

enum class BoundednessVariant { Primal, Dual, LeftOpen };

/// Dispatch for a double phase model: phi, phi* (brute-force conjugate), or
/// psi_(s)(x, t) = phi(x, t^s) with 1/p < s < 1.
inline BoundednessReport verify_modular_boundedness(const NFunction& nf,
                                                    const GridGeometry& g,
                                                    const BoxFunctionGen& gen,
                                                    BoundednessVariant variant,
                                                    double s = 1.0) {
  const auto base = bind(nf, g);
  switch (variant) {
    case BoundednessVariant::Primal:
      return verify_modular_boundedness(base, g, gen, describe(nf), "primal");
    case BoundednessVariant::Dual:
      return verify_modular_boundedness(conjugate_of(base), g, gen, describe(nf), "dual");
    case BoundednessVariant::LeftOpen:
      if (!(s * nf.p > 1.0 && s < 1.0))
        throw PreconditionError("left-open variant needs 1/p < s < 1");
      return verify_modular_boundedness(PowerComposedCells<DoublePhaseCells>{base, s}, g,
                                        gen, describe(nf),
                                        "leftOpen(" + std::to_string(s) + ")");
  }
  return {};
}

}  // namespace dphase
