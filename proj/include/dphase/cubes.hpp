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

#include <bit>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace dphase {

using Index = long long;

/// Axis-aligned cube made of whole grid cells. `lo` is the cell index of
/// the lower corner and may lie outside the box (cells outside count as
/// zero-extended). Dyadic cubes also carry their address.
struct Cube {
  int n = 1;
  std::array<Index, 2> lo{0, 0};
  Index side = 1;  // in cells
  int level = -1;  // side = baseSide * 2^-level, or -1 for free cubes
  std::array<Index, 2> index{0, 0};
  int shift = -1;  // shifted-grid id alpha_0 + 3 alpha_1, or -1

  Index cell_count() const { return n == 2 ? side * side : side; }

  bool contains_cell(Index i, Index j) const {
    if (i < lo[0] || i >= lo[0] + side) return false;
    return n == 1 || (j >= lo[1] && j < lo[1] + side);
  }

  friend bool operator<(const Cube& a, const Cube& b) {
    return std::tie(a.lo, a.side) < std::tie(b.lo, b.side);
  }
};

inline bool cube_inside(const Cube& q, const GridGeometry& g) {
  for (int a = 0; a < g.n; ++a)
    if (q.lo[a] < 0 || q.lo[a] + q.side > static_cast<Index>(g.dims[a]))
      return false;
  return true;
}

/// Cells of q that lie in the box.
inline std::vector<std::size_t> cube_cells(const Cube& q,
                                           const GridGeometry& g) {
  std::vector<std::size_t> out;
  const Index nx = static_cast<Index>(g.dims[0]);
  const Index ny = static_cast<Index>(g.dims[1]);
  const Index j0 = g.n == 2 ? std::max<Index>(0, q.lo[1]) : 0;
  const Index j1 = g.n == 2 ? std::min(ny, q.lo[1] + q.side) : 1;
  const Index i0 = std::max<Index>(0, q.lo[0]);
  const Index i1 = std::min(nx, q.lo[0] + q.side);
  for (Index j = j0; j < j1; ++j)
    for (Index i = i0; i < i1; ++i)
      out.push_back(g.index(static_cast<std::size_t>(i),
                            static_cast<std::size_t>(j)));
  return out;
}

/// Full Lebesgue measure of q, including any part outside the box.
inline double cube_measure(const Cube& q, const GridGeometry& g) {
  return static_cast<double>(q.cell_count()) * g.cell_volume();
}

inline std::string describe(const Cube& q, const GridGeometry& g) {
  std::ostringstream os;
  os.precision(10);
  for (int a = 0; a < g.n; ++a) {
    if (a) os << 'x';
    const double x0 = g.origin[a] + static_cast<double>(q.lo[a]) * g.spacing;
    os << '[' << x0 << ',' << x0 + static_cast<double>(q.side) * g.spacing
       << ']';
  }
  return os.str();
}

struct CubeFamily {
  std::string policy;
  std::vector<Cube> cubes;

  bool empty() const { return cubes.empty(); }
  std::size_t size() const { return cubes.size(); }
};

/// Offset (in cells) of level-j cubes, side 2^j, of the shifted dyadic grid
/// with shift a in {0, 1, 2}. Level j is nested in level j + 1 and, for a
/// fixed j, the three shifts are spread over thirds of the side.
inline Index dyadic_offset(int a, int j) {
  Index pw = 1;
  for (int k = 0; k < j; ++k) pw *= -2;
  return static_cast<Index>(a) * (pw - 1) / 3;
}

namespace detail {
inline std::size_t box_side(const GridGeometry& g) {
  if (g.n == 2 && g.dims[0] != g.dims[1])
    throw InputError("dyadic cube families need a square grid");
  return g.dims[0];
}
}  // namespace detail

/// Standard dyadic cubes of the box, levels 0..D (level k has side N / 2^k).
inline CubeFamily dyadic_to_depth(const GridGeometry& g, int depth) {
  const std::size_t N = detail::box_side(g);
  if (depth < 0 || (N % (std::size_t{1} << depth)) != 0)
    throw InputError("box side " + std::to_string(N) +
                     " cells is not divisible by 2^" + std::to_string(depth));
  CubeFamily fam{"dyadic(" + std::to_string(depth) + ")", {}};
  for (int k = 0; k <= depth; ++k) {
    const Index s = static_cast<Index>(N >> k);
    const Index m = Index{1} << k;
    for (Index jj = 0; jj < (g.n == 2 ? m : 1); ++jj)
      for (Index ii = 0; ii < m; ++ii) {
        Cube q;
        q.n = g.n;
        q.lo = {ii * s, g.n == 2 ? jj * s : 0};
        q.side = s;
        q.level = k;
        q.index = {ii, g.n == 2 ? jj : 0};
        q.shift = 0;
        fam.cubes.push_back(q);
      }
  }
  return fam;
}

/// Cubes of the 3^n shifted dyadic grids with sides N / 2^k, k = 0..D, kept
/// when fully inside the box. Requires N to be a power of two.
inline CubeFamily shifted_dyadic(const GridGeometry& g, int depth) {
  const std::size_t N = detail::box_side(g);
  if (!std::has_single_bit(N))
    throw InputError("shifted dyadic family needs a power-of-two box side");
  const int top = std::countr_zero(N);
  if (depth < 0 || depth > top)
    throw InputError("depth exceeds the grid resolution");
  CubeFamily fam{"shifted_dyadic(" + std::to_string(depth) + ")", {}};
  std::set<Cube> seen;
  const int shifts = g.n == 2 ? 9 : 3;
  const Index NN = static_cast<Index>(N);
  for (int k = 0; k <= depth; ++k) {
    const int j = top - k;
    const Index s = Index{1} << j;
    for (int alpha = 0; alpha < shifts; ++alpha) {
      const std::array<int, 2> a{alpha % 3, alpha / 3};
      std::array<Index, 2> off{dyadic_offset(a[0], j), dyadic_offset(a[1], j)};
      std::array<Index, 2> first{}, last{};
      for (int ax = 0; ax < 2; ++ax) {
        // smallest m with off + m s >= 0, largest with off + (m+1) s <= N
        first[ax] = off[ax] >= 0 ? -(off[ax] / s) : (-off[ax] + s - 1) / s;
        Index lastm = first[ax];
        while (off[ax] + (lastm + 1) * s <= NN) ++lastm;
        last[ax] = lastm;
      }
      if (g.n == 1) {
        first[1] = 0;
        last[1] = 1;
        off[1] = 0;
      }
      for (Index mj = first[1]; mj < last[1]; ++mj)
        for (Index mi = first[0]; mi < last[0]; ++mi) {
          Cube q;
          q.n = g.n;
          q.lo = {off[0] + mi * s, g.n == 2 ? off[1] + mj * s : 0};
          q.side = s;
          if (!cube_inside(q, g) || seen.count(q)) continue;
          q.level = k;
          q.index = {mi, mj};
          q.shift = g.n == 2 ? alpha : a[0];
          seen.insert(q);
          fam.cubes.push_back(q);
        }
    }
  }
  return fam;
}

/// Random grid-aligned cubes inside the box with side in [min_side, max_side].
inline CubeFamily random_cubes(const GridGeometry& g, std::size_t count,
                               std::uint64_t seed, Index min_side = 1,
                               Index max_side = 0) {
  const Index limit = static_cast<Index>(
      g.n == 2 ? std::min(g.dims[0], g.dims[1]) : g.dims[0]);
  if (max_side <= 0 || max_side > limit) max_side = limit;
  if (min_side < 1 || min_side > max_side)
    throw InputError("random cubes: empty side range");
  std::mt19937_64 rng(seed);
  auto uniform = [&](Index lo, Index hi) {  // inclusive
    return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  CubeFamily fam{"random(" + std::to_string(count) + "," +
                     std::to_string(seed) + ")",
                 {}};
  for (std::size_t c = 0; c < count; ++c) {
    Cube q;
    q.n = g.n;
    q.side = uniform(min_side, max_side);
    q.lo[0] = uniform(0, static_cast<Index>(g.dims[0]) - q.side);
    q.lo[1] = g.n == 2 ? uniform(0, static_cast<Index>(g.dims[1]) - q.side) : 0;
    fam.cubes.push_back(q);
  }
  return fam;
}

/// Concatenation of two families.
inline CubeFamily merge(CubeFamily a, const CubeFamily& b) {
  a.policy += "+" + b.policy;
  a.cubes.insert(a.cubes.end(), b.cubes.begin(), b.cubes.end());
  return a;
}

}  // namespace dphase
