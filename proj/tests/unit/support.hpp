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

// Hand-rolled generators shared by the property tests.

#include <dphase/grid.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dphase::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * unit();
  }

  /// exp(uniform(log lo, log hi)).
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  long long integer(long long lo, long long hi) {  // inclusive
    return lo + static_cast<long long>(engine_() %
                                       static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool coin() { return (engine_() & 1u) != 0; }

  Point point(int n, double lo, double hi) {
    Point x{uniform(lo, hi), 0.0};
    if (n == 2) x[1] = uniform(lo, hi);
    return x;
  }

  /// Field of the given grid with entries drawn from [lo, hi]; with
  /// probability `zeros` an entry is set to zero.
  GridField field(const GridGeometry& g, double lo, double hi,
                  double zeros = 0.0) {
    std::vector<double> v(g.size());
    for (auto& x : v) x = unit() < zeros ? 0.0 : uniform(lo, hi);
    return GridField(g, std::move(v));
  }

  /// Field with dyadic-rational entries k / 2^bits, k in [0, 2^bits).
  GridField dyadic_field(const GridGeometry& g, int bits = 10) {
    std::vector<double> v(g.size());
    const long long m = 1LL << bits;
    for (auto& x : v) x = static_cast<double>(integer(0, m - 1)) / static_cast<double>(m);
    return GridField(g, std::move(v));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace dphase::testing
