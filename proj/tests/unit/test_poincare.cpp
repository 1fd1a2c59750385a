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


#include <dphase/muckenhoupt.hpp>
#include <dphase/poincare.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace dphase;
using dphase::testing::Gen;

namespace {

// u = x1 on the unit disk, a = 0, p = 2: the ratio is (mean_B |x1|^{2s})^{1/s}
// = (2 B(s + 1/2, 3/2) / pi)^{1/s}, independent of the normalisation.
double linear_oracle(double s) {
  return std::pow(2.0 * boost::math::beta(s + 0.5, 1.5) / std::numbers::pi, 1.0 / s);
}

GridField smooth_bumps(Gen& gen, const GridGeometry& g) {
  const int k = static_cast<int>(gen.integer(1, 4));
  std::vector<Point> c;
  std::vector<double> w, amp;
  for (int i = 0; i < k; ++i) {
    c.push_back(gen.point(g.n, -0.8, 0.8));
    w.push_back(gen.uniform(0.15, 0.6));
    amp.push_back(gen.uniform(-2.0, 2.0));
  }
  return GridField::sample(g, [&](const Point& x) {
    double v = 0.0;
    for (int i = 0; i < k; ++i) {
      const double d = distance(x, c[i]) / w[i];
      v += amp[i] * std::exp(-d * d);
    }
    return v;
  });
}

std::vector<NFunction> catalog() {
  return {NFunction(2.0, 3.0, WeightSpec::power_clipped(0.5)),
          NFunction(1.5, 2.5, WeightSpec::hoelder_bump(0.5, {{1.0, {0.0, 0.0}}})),
          NFunction(2.0, 2.5, WeightSpec::constant(3.0)),
          NFunction(2.0, 3.0, WeightSpec::checkerboard(0.0, 2.0, 0.25))};
}

}  // namespace

TEST(SobolevPoincare, ConstantFunctionGivesZero) {
  const auto g = GridGeometry::cube(2, 32, -1.0, 2.0);
  const auto t = verify_sobolev_poincare(NFunction(2.0, 3.0), GridField(g, 7.0),
                                         Domain::ball(g, {0.0, 0.0}, 0.8), 1.5);
  EXPECT_EQ(t.lhs, 0.0);
  EXPECT_EQ(t.rhs, 0.0);
  EXPECT_EQ(t.ratio, 0.0);
}

TEST(SobolevPoincare, LinearFunctionMatchesAnalyticValue) {
  for (std::size_t N : {64u, 128u, 256u}) {
    const auto g = GridGeometry::cube(2, N, -1.0, 2.0);
    const double h = g.spacing;
    const auto u = GridField::sample(g, [](const Point& x) { return x[0]; });
    const auto B = Domain::ball(g, {0.0, 0.0}, 1.0);
    for (double s : {1.25, 1.5, 1.9}) {
      const auto t = verify_sobolev_poincare(NFunction(2.0, 3.0), u, B, s);
      // lattice-point discrepancy of the disk mask is O(h^2) here
      EXPECT_NEAR(t.ratio, linear_oracle(s), 4.0 * h * h) << N << " " << s;
      EXPECT_NEAR(t.scale, std::sqrt(B.measure() / 2.0), 1e-10);
    }
  }
  EXPECT_DOUBLE_EQ(linear_oracle(1.0), 0.25);
}

TEST(SobolevPoincare, PowerMeanDominatesPlainMean) {
  Gen gen(21);
  const auto g = GridGeometry::cube(2, 48, -1.0, 2.0);
  const auto cat = catalog();
  for (int trial = 0; trial < 40; ++trial) {
    const auto& nf = cat[static_cast<std::size_t>(trial) % cat.size()];
    const auto u = smooth_bumps(gen, g);
    const auto B = Domain::ball(g, gen.point(2, -0.3, 0.3), gen.uniform(0.2, 0.65));
    const double s = gen.uniform(1.01, 1.99);
    const auto m = bind(nf, g);
    std::vector<double> v;
    for (std::size_t c : B.cells()) v.push_back(u[c]);
    EXPECT_LE(poincare_lhs(m, v, B, 1.0), poincare_lhs(m, v, B, s) * (1 + 1e-12));
  }
}

TEST(SobolevPoincare, InvariantUnderConstantsAndIdempotentScaling) {
  Gen gen(22);
  const auto g = GridGeometry::cube(2, 40, -1.0, 2.0);
  const auto cat = catalog();
  for (int trial = 0; trial < 12; ++trial) {
    const auto& nf = cat[static_cast<std::size_t>(trial) % cat.size()];
    const auto u = smooth_bumps(gen, g).scaled(gen.log_uniform(0.1, 50.0));
    const auto B = Domain::ball(g, {0.0, 0.0}, gen.uniform(0.3, 0.9));
    const auto a = verify_sobolev_poincare(nf, u, B, 1.5);
    const auto b = verify_sobolev_poincare(nf, u.map([](double x) { return x + 3.0; }), B, 1.5);
    EXPECT_NEAR(a.ratio, b.ratio, 1e-9 * a.ratio);
    const auto m = bind(nf, g);
    const auto v = u.scaled(1.0 / a.scale);
    EXPECT_NEAR(gradient_normalization(m, v, B.cells()), 1.0, 1e-12);
    EXPECT_LE(modular(m, discrete_gradient(v).magnitude, B.cells()), 1.0 + 1e-10);
  }
}

TEST(SobolevPoincare, RandomBumpsStayBelowOneConstant) {
  Gen gen(23);
  const auto g = GridGeometry::cube(2, 48, -1.0, 2.0);
  const auto cat = catalog();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = static_cast<std::size_t>(trial) % cat.size();
    const auto t = verify_sobolev_poincare(
        cat[k], smooth_bumps(gen, g),
        Domain::ball(g, gen.point(2, -0.3, 0.3), gen.uniform(0.25, 0.65)), 1.5);
    EXPECT_GE(t.ratio, 0.0);
    worst = std::max(worst, t.ratio);
  }
  // linear functions give about 0.31; bumps stay within a small multiple
  EXPECT_LT(worst, 2.0);
}

TEST(SobolevPoincare, Preconditions) {
  const auto g = GridGeometry::cube(2, 32, -1.0, 2.0);
  const GridField u(g, 1.0);
  const NFunction nf(2.0, 3.0);
  const auto B = Domain::ball(g, {0.0, 0.0}, 0.5);
  EXPECT_THROW(verify_sobolev_poincare(nf, u, B, 1.0), PreconditionError);
  EXPECT_THROW(verify_sobolev_poincare(nf, u, B, 2.0), PreconditionError);
  EXPECT_THROW(verify_sobolev_poincare(nf, u, Domain::ball(g, {0.8, 0.0}, 0.5), 1.5),
               DomainError);
  const auto g1 = GridGeometry::cube(1, 64, -1.0, 2.0);
  EXPECT_NO_THROW(verify_sobolev_poincare(nf, GridField(g1, 1.0),
                                          Domain::ball(g1, {0.0, 0.0}, 0.5), 5.0));
}

TEST(ZeroSet, WholeBallZeroGivesZero) {
  const auto g = GridGeometry::cube(2, 32, -1.0, 2.0);
  const auto B = Domain::ball(g, {0.0, 0.0}, 0.7);
  const auto t = verify_zero_set_variant(NFunction(2.0, 3.0), GridField(g), B, B, 1.5);
  EXPECT_EQ(t.ratio, 0.0);
  EXPECT_DOUBLE_EQ(t.zero_fraction, 1.0);
  EXPECT_DOUBLE_EQ(t.allowance, 8.0);
}

TEST(ZeroSet, RejectsNonVanishingFunction) {
  const auto g = GridGeometry::cube(2, 32, -1.0, 2.0);
  const auto B = Domain::ball(g, {0.0, 0.0}, 0.7);
  const auto E = Domain::ball(g, {0.0, 0.0}, 0.3);
  EXPECT_THROW(verify_zero_set_variant(NFunction(2.0, 3.0), GridField(g, 1.0), B, E, 1.5),
               PreconditionError);
}

TEST(ZeroSet, ClassicalCaseMatchesDirectComputation) {
  // a = 0, p = 2, s = 1: mean(u^2 / (2 r^2)) / (8 * mean(|grad u|^2 / 2)).
  const auto g = GridGeometry::cube(2, 64, -1.0, 2.0);
  const auto B = Domain::ball(g, {0.0, 0.0}, 0.9);
  const auto E = Domain::where(g, [](const Point& x) { return x[0] < 0.0 && norm(x) < 0.9; });
  const auto u = GridField::sample(g, [](const Point& x) {
    return x[0] < 0.0 ? 0.0 : 0.05 * x[0] * (1.0 + x[1]);
  });
  const auto t = verify_zero_set_variant(NFunction(2.0, 3.0), u, B, E, 1.0);
  EXPECT_EQ(t.scale, 1.0);
  double lhs = 0.0, rhs = 0.0;
  const double h = g.spacing;
  for (std::size_t c : B.cells()) {
    lhs += u[c] * u[c] / (2.0 * 0.81);
    const std::size_t i = g.ix(c), j = g.iy(c);
    const double gx = (u[g.index(i + 1, j)] - u[g.index(i - 1, j)]) / (2 * h);
    const double gy = (u[g.index(i, j + 1)] - u[g.index(i, j - 1)]) / (2 * h);
    rhs += (gx * gx + gy * gy) / 2.0;
  }
  const double frac = static_cast<double>(E.count()) / static_cast<double>(B.count());
  const double expected = lhs / (std::pow(1.0 + 1.0 / frac, 3.0) * rhs);
  EXPECT_NEAR(t.ratio, expected, 1e-12 * expected);
}

TEST(ZeroSet, AllowanceTracksShrinkingZeroSet) {
  const auto g = GridGeometry::cube(2, 128, -1.0, 2.0);
  const Point c{0.0, 0.0};
  const double r = 0.9;
  const auto B = Domain::ball(g, c, r);
  for (const NFunction& nf : catalog()) {
    std::vector<double> weighted;
    for (double frac : {0.5, 0.25, 0.1}) {
      // E = {x1 < t} inside B with |E| ~ frac |B|; u is the ramp (x1 - t)_+
      double lo = -r, hi = r;
      for (int it = 0; it < 60; ++it) {
        const double t = 0.5 * (lo + hi);
        std::size_t cnt = 0;
        for (std::size_t cell : B.cells()) cnt += g.center(cell)[0] < t ? 1 : 0;
        (static_cast<double>(cnt) < frac * static_cast<double>(B.count()) ? lo : hi) = t;
      }
      const double t = hi;
      const auto E = Domain::where(g, [&](const Point& x) { return x[0] < t && distance(x, c) < r; });
      const auto u = GridField::sample(g, [&](const Point& x) { return std::max(0.0, x[0] - t); });
      const auto tr = verify_zero_set_variant(nf, u, B, E, 1.5);
      EXPECT_NEAR(tr.zero_fraction, frac, 0.02);
      weighted.push_back(tr.ratio);
    }
    for (double w : weighted) {
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 2.0 * weighted[0]) << describe(nf);
    }
  }
}
