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

#include <dphase/orlicz.hpp>

#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace dphase;
using dphase::testing::Gen;
using dphase::testing::rel_err;

namespace {
const GridGeometry kSquare = GridGeometry::cube(2, 16, 0.0, 1.0);
const Domain kBox = Domain::box(kSquare);
}  // namespace

TEST(Modular, ConstantFieldOnUnitSquare) {
  const GridField one(kSquare, 1.0);
  EXPECT_NEAR(modular(NFunction(2, 3), one, kBox), 0.5, 1e-14);
  EXPECT_NEAR(modular(NFunction(2, 3, WeightSpec::constant(1)), one, kBox), 5.0 / 6.0, 1e-14);
}

TEST(Modular, MidpointRuleForAbsX) {
  for (std::size_t N : {16, 64, 256}) {
    const GridGeometry g = GridGeometry::cube(1, N, 0.0, 1.0);
    const auto f = GridField::sample(g, [](const Point& x) { return std::abs(x[0]); });
    const double h = g.spacing;
    EXPECT_NEAR(modular(NFunction(2, 3), f, Domain::box(g)), 1.0 / 6.0, h * h);
  }
}

TEST(Luxemburg, ConstantFieldClosedForm) {
  for (double c : {0.1, 1.0, 7.0}) {
    const GridField f(kSquare, c);
    EXPECT_LE(rel_err(luxemburg_norm(NFunction(2, 3), f, kBox), c / std::sqrt(2.0)), 1e-12);
  }
  EXPECT_EQ(luxemburg_norm(NFunction(2, 3), GridField(kSquare, 0.0), kBox), 0.0);
}

TEST(Luxemburg, UnitBallPropertyAndHomogeneity) {
  Gen gen(21);
  const auto model = bind(NFunction(1.7, 3.9, WeightSpec::power_clipped(0.5)), kSquare);
  for (int k = 0; k < 200; ++k) {
    const GridField f = gen.field(kSquare, -10, 10, 0.3);
    const double n1 = luxemburg_norm(model, f, kBox.cells());
    EXPECT_NEAR(modular(model, f, kBox.cells(), n1), 1.0, 1e-8);
    const double n2 = luxemburg_norm(model, f.scaled(2.0), kBox.cells());
    EXPECT_LE(rel_err(n2, 2.0 * n1), 1e-10);
  }
}

TEST(Luxemburg, NormModularConsistency) {
  Gen gen(22);
  const auto model = bind(NFunction(2.0, 5.0, WeightSpec::constant(3.0)), kSquare);
  for (int k = 0; k < 300; ++k) {
    const GridField f = gen.field(kSquare, 0, gen.log_uniform(0.05, 5));
    const double n = luxemburg_norm(model, f, kBox.cells());
    const double r = modular(model, f, kBox.cells());
    if (std::abs(n - 1.0) > 1e-9) EXPECT_EQ(n <= 1.0, r <= 1.0);
  }
}

TEST(Luxemburg, SolidityAndTriangleInequality) {
  Gen gen(23);
  const auto model = bind(NFunction(1.5, 4.0, WeightSpec::checkerboard(0.01, 10, 0.25)), kSquare);
  for (int k = 0; k < 200; ++k) {
    const GridField f = gen.field(kSquare, -3, 3);
    const GridField g = gen.field(kSquare, -3, 3);
    std::vector<double> s(f.size()), smaller(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) {
      s[c] = f[c] + g[c];
      smaller[c] = f[c] * gen.uniform(0, 1);
    }
    const double nf = luxemburg_norm(model, f, kBox.cells());
    const double ng = luxemburg_norm(model, g, kBox.cells());
    const double ns = luxemburg_norm(model, GridField(kSquare, s), kBox.cells());
    EXPECT_LE(ns, (nf + ng) * (1 + 1e-10));
    EXPECT_LE(luxemburg_norm(model, GridField(kSquare, smaller), kBox.cells()),
              nf * (1 + 1e-10));
  }
}

TEST(Luxemburg, RejectsForeignGrid) {
  EXPECT_THROW(luxemburg_norm(NFunction(2, 3), GridField(GridGeometry::cube(2, 8, 0, 1), 1.0), kBox),
               InputError);
}

TEST(PowerComposed, NormIdentity) {
  Gen gen(24);
  const NFunction nf(2.0, 3.5, WeightSpec::power_clipped(0.5));
  const auto base = bind(nf, kSquare);
  for (double theta : {0.6, 0.8, 1.5}) {
    const PowerComposedCells<DoublePhaseCells> psi{base, theta};
    for (int k = 0; k < 30; ++k) {
      const GridField g = gen.field(kSquare, -4, 4);
      const double lhs = std::pow(luxemburg_norm(psi, g, kBox.cells()), theta);
      const GridField gt = g.map([&](double v) { return std::pow(std::abs(v), theta); });
      EXPECT_LE(rel_err(lhs, luxemburg_norm(base, gt, kBox.cells())), 1e-6);
    }
  }
}

TEST(Holder, PairingBasics) {
  Gen gen(25);
  const GridField f = gen.field(kSquare, -1, 1);
  EXPECT_EQ(holder_pairing(NFunction(2, 3), f, GridField(kSquare, 0.0), kBox), 0.0);
  EXPECT_THROW(holder_pairing(NFunction(2, 3), f, GridField(GridGeometry::cube(2, 8, 0, 1), 1.0), kBox),
               InputError);
}

TEST(Holder, ClassicalCaseIsCauchySchwarz) {
  Gen gen(26);
  const GridGeometry g = GridGeometry::cube(1, 32, 0.0, 1.0);
  const Domain d = Domain::box(g);
  const NFunction nf(2.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const GridField f = gen.field(g, -2, 2), h = gen.field(g, -2, 2);
    const auto chk = holder_check(nf, f, h, d);
    EXPECT_TRUE(chk.holds);
    // ||f||_phi = ||f||_2 / sqrt 2, likewise for the conjugate
    double l2f = 0, l2h = 0;
    for (std::size_t c = 0; c < f.size(); ++c) {
      l2f += f[c] * f[c] * g.spacing;
      l2h += h[c] * h[c] * g.spacing;
    }
    EXPECT_LE(rel_err(chk.bound, std::sqrt(l2f * l2h)), 1e-8);
  }
}

TEST(Holder, NormConjugateSandwichOnExtremalFamily) {
  Gen gen(27);
  const GridGeometry g = GridGeometry::cube(1, 24, 0.0, 1.0);
  const Domain d = Domain::box(g);
  for (double p : {1.5, 2.0, 3.0}) {
    const NFunction nf(p, p + 1.0);
    const auto m = bind(nf, g);
    const auto mstar = bind_conjugate(nf, g);
    for (int k = 0; k < 20; ++k) {
      const GridField f = gen.field(g, -3, 3);
      const double nrm = luxemburg_norm(m, f, d.cells());
      double best = 0.0;
      // finite family: phi'(|f| / ||f||)^gamma for several gamma, unit dual norm
      for (double gamma : {0.5, 0.75, 1.0, 1.25, 1.5}) {
        const GridField cand = f.map([&](double v) {
          return std::pow(phi_derivative(nf.p, nf.q, 0.0, std::abs(v) / nrm), gamma);
        });
        const double dn = luxemburg_norm(mstar, cand, d.cells());
        const double pairing = holder_pairing(f, cand, d.cells()) / dn;
        EXPECT_LE(pairing, 2.0 * nrm * (1 + 1e-8));
        best = std::max(best, pairing);
      }
      EXPECT_GE(best, 0.9 * nrm);
    }
  }
}

TEST(Holder, FactorTwoNeverViolatedOnRandomPairs) {
  Gen gen(28);
  const GridGeometry g = GridGeometry::cube(1, 8, -1.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double p = gen.uniform(1.2, 3.0), q = p + gen.uniform(0.2, 3.0);
    const NFunction nf(p, q, WeightSpec::constant(gen.log_uniform(1e-2, 1e2)));
    const auto chk = holder_check(nf, gen.field(g, -5, 5, 0.2), gen.field(g, -5, 5, 0.2),
                                  Domain::box(g));
    ASSERT_TRUE(chk.holds) << chk.pairing << " > " << chk.bound;
  }
}

TEST(Gradient, LinearAndConstantFields) {
  const GridGeometry g = GridGeometry::cube(2, 12, -1.0, 2.0);
  const auto u = GridField::sample(g, [](const Point& x) { return x[0]; });
  const auto gr = discrete_gradient(u);
  for (std::size_t c = 0; c < g.size(); ++c) {
    EXPECT_NEAR(gr.dx[c], 1.0, 1e-12);
    EXPECT_EQ(gr.dy[c], 0.0);
  }
  const auto zero = discrete_gradient(GridField(g, 3.0));
  EXPECT_EQ(zero.magnitude.max_abs(), 0.0);
  EXPECT_THROW(discrete_gradient(GridField(GridGeometry::cube(1, 1, 0, 1), 1.0)), InputError);
}

TEST(Gradient, SecondOrderInTheInterior) {
  std::vector<double> errs;
  for (std::size_t N : {32, 64, 128}) {
    const GridGeometry g = GridGeometry::cube(1, N, 0.0, 1.0);
    const auto u = GridField::sample(g, [](const Point& x) { return std::sin(std::numbers::pi * x[0]); });
    const auto gr = discrete_gradient(u);
    double e = 0.0;
    for (std::size_t i = 1; i + 1 < N; ++i)
      e = std::max(e, std::abs(gr.dx[i] - std::numbers::pi * std::cos(std::numbers::pi * g.center(i)[0])));
    errs.push_back(e);
    // Taylor bound: h^2 / 6 max |u'''|
    const double pi3 = std::pow(std::numbers::pi, 3);
    EXPECT_LE(e, pi3 / 6.0 * g.spacing * g.spacing);
  }
  EXPECT_NEAR(std::log2(errs[0] / errs[2]) / 2.0, 2.0, 0.1);
}
