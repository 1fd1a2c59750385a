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

#include <dphase/weights.hpp>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace dphase;
using dphase::testing::Gen;

TEST(EvalWeight, PowerClipped) {
  const auto w = WeightSpec::power_clipped(1.0);
  EXPECT_DOUBLE_EQ(eval_weight(w, {0.5, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ(eval_weight(w, {2.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(eval_weight(WeightSpec::power_clipped(0.5), {0.0, 0.25}), 0.5);
}

TEST(EvalWeight, ComboMinOfConstants) {
  const auto w = WeightSpec::combo(WeightSpec::Op::Min, WeightSpec::constant(2),
                                   WeightSpec::constant(3));
  Gen gen(5);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(eval_weight(w, gen.point(2, -9, 9)), 2.0);
}

TEST(EvalWeight, CheckerboardMatchesDirectConstruction) {
  const auto w = WeightSpec::checkerboard(1.0, 1e6, 0.125);
  const GridGeometry g = GridGeometry::cube(2, 32, 0.0, 1.0);
  const auto a = sample_weight(w, g);
  // build the pattern from cell indices: 4 cells per checker square
  for (std::size_t c = 0; c < g.size(); ++c) {
    const bool odd = ((g.ix(c) / 4) + (g.iy(c) / 4)) % 2 == 1;
    EXPECT_EQ(a[c], odd ? 1e6 : 1.0);
  }
}

TEST(EvalWeight, HoelderBumpSatisfiesTheGrowthCondition) {
  // a(x) <= a(y) + |x - y|^alpha holds for a min of cones clipped at 1
  const auto w = WeightSpec::hoelder_bump(0.5, {{0.0, {0.1, 0.2}}, {0.3, {-0.5, 0.4}}});
  Gen gen(6);
  for (int k = 0; k < 5000; ++k) {
    const Point x = gen.point(2, -1, 1), y = gen.point(2, -1, 1);
    EXPECT_LE(eval_weight(w, x), eval_weight(w, y) + std::pow(distance(x, y), 0.5) + 1e-12);
  }
}

TEST(EvalWeight, SingularPowerIsFiniteOnCellCentres) {
  const auto w = WeightSpec::power(-1.5);
  EXPECT_TRUE(std::isinf(eval_weight(w, {0.0, 0.0})));
  // odd cell count puts a centre exactly on the singularity
  const auto a = sample_weight(w, GridGeometry::cube(1, 9, -1.0, 2.0));
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
}

TEST(WeightText, RoundTrip) {
  for (const char* s : {"zero", "constant(2)", "power_clipped(0.5)", "power(-1.5)",
                        "checkerboard(1, 1000000, 0.125)",
                        "hoelder_bump(1; 0, 0.5, 0.5; 0.1, -0.5, 0)",
                        "min(constant(2), constant(3))",
                        "sum(power_clipped(0.5), max(zero, constant(1)))"}) {
    const auto w = parse_weight(s);
    const auto again = parse_weight(to_string(w));
    EXPECT_EQ(to_string(w), to_string(again)) << s;
  }
  EXPECT_THROW(parse_weight("power_clipped(0.5"), InputError);
  EXPECT_THROW(parse_weight("bogus(1)"), InputError);
  EXPECT_THROW(parse_weight("constant(-1)"), InputError);
  EXPECT_THROW(parse_weight("constant(1) x"), InputError);
}

TEST(ClassicalAp, ConstantWeightIsOne) {
  const GridGeometry g = GridGeometry::cube(2, 16, 0.0, 1.0);
  const auto est = classical_ap_constant(WeightSpec::constant(3.0), g, 2.0,
                                         shifted_dyadic(g, 4));
  EXPECT_NEAR(est.value, 1.0, 1e-14);
}

TEST(ClassicalAp, ZeroWeightIsFlaggedInfinite) {
  const GridGeometry g = GridGeometry::cube(1, 16, 0.0, 1.0);
  EXPECT_TRUE(classical_ap_constant(WeightSpec::zero(), g, 2.0, dyadic_to_depth(g, 2)).infinite);
}

namespace {
// A_2 product on the cube [0, 2^-k] for |x|^alpha, exact integrals:
// (2^{k}/(1+a) 2^{-k(1+a)}) (2^{k}/(1-a) 2^{-k(1-a)}) = 1/((1+a)(1-a)).
double a2_origin_cube(double alpha) { return 1.0 / ((1 + alpha) * (1 - alpha)); }
}  // namespace

TEST(ClassicalAp, PowerWeightInsideTheClassIsStable) {
  std::vector<double> est;
  for (std::size_t N : {256, 512, 1024, 2048}) {
    const GridGeometry g = GridGeometry::cube(1, N, -1.0, 2.0);
    est.push_back(classical_ap_constant(WeightSpec::power(0.5), g, 2.0,
                                        shifted_dyadic(g, 8)).value);
  }
  for (std::size_t k = 1; k < est.size(); ++k)
    EXPECT_LE(std::abs(est[k] - est[k - 1]), 0.05 * est[k]);
  // the supremum is at least the value on cubes touching the origin
  EXPECT_GE(est.back(), 0.95 * a2_origin_cube(0.5));
}

TEST(ClassicalAp, PowerWeightOutsideTheClassDiverges) {
  std::vector<double> est;
  for (std::size_t N : {64, 256, 1024, 4096}) {
    const GridGeometry g = GridGeometry::cube(1, N, -1.0, 2.0);
    est.push_back(classical_ap_constant(WeightSpec::power(-1.5), g, 2.0,
                                        shifted_dyadic(g, 6)).value);
  }
  for (std::size_t k = 1; k < est.size(); ++k) EXPECT_GT(est[k], 1.5 * est[k - 1]);
}

TEST(ClassicalAp, AtLeastOneAndMonotoneInTheFamily) {
  Gen gen(8);
  const GridGeometry g = GridGeometry::cube(2, 32, -1.0, 2.0);
  for (const char* s : {"power_clipped(0.5)", "power(0.7)", "checkerboard(1, 50, 0.25)",
                        "hoelder_bump(1; 0.1, 0.2, 0.3)"}) {
    const auto w = parse_weight(s);
    const auto small = dyadic_to_depth(g, 3);
    const auto big = merge(small, random_cubes(g, 40, 3));
    const double a = classical_ap_constant(w, g, 2.5, small).value;
    const double b = classical_ap_constant(w, g, 2.5, big).value;
    EXPECT_GE(a, 1.0 - 1e-12) << s;
    EXPECT_GE(b, a) << s;
  }
}
