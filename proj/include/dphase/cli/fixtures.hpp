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

// Built-in experiment catalog. Every fixture names the statement it
// exercises; `dphase fixtures --export dir` writes the configs to disk.

#include <string>
#include <vector>

namespace dphase::cli {

struct Fixture {
  std::string name;
  std::string exercises;  // mathematical statement under test
  std::string config;     // config file text
};

inline const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> catalog = {
      {"norm-unit-square",
       "Luxemburg norm of the constant 1 for t^2/2 on the unit square is 1/sqrt(2)",
       R"(task = norm
about = Luxemburg norm anchor

[model]
p = 2
q = 3
weight = zero

[domain]
dims = 32 32

[norm]
field = 1
expect = 0.70710678118654752
tolerance = 1e-8
)"},
      {"class-a-anchor",
       "pure power phi = t^p/p has class A constant p^(-1/p) (p')^(-1/p') on every cube",
       R"(task = muck
about = class A constant of a pure power

[model]
p = 2
q = 3
weight = zero

[domain]
dims = 256
spacing = 0.0078125
origin = -1

[muck]
depth_min = 4
depth_max = 6
conjugate = brute_force
expect = 0.5
tolerance = 1e-6
)"},
      {"example-power-alpha-0.5",
       "Example power: a(x) = min{|x|^alpha, 1} puts phi in the Muckenhoupt class A",
       R"(task = muck
about = a(x) = min{|x|^alpha,1}, alpha = 0.5, depth sweep

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 1024
spacing = 0.001953125
origin = -1

[muck]
depth_min = 4
depth_max = 8
family = shifted
monotone = true
)"},
      {"example-hoelder-bump",
       "Example hoelder: a(x) <~ a(y) + |x-y|^alpha with q/p <= 1 + alpha/n gives phi in A",
       R"(task = muck
about = Hoelder coefficient vanishing at the origin, q/p = 1 + alpha/n

[model]
p = 2
q = 3
weight = hoelder_bump(1; 0, 0, 0)

[domain]
dims = 64 64
spacing = 0.03125
origin = -1 -1

[muck]
depth_min = 3
depth_max = 5
)"},
      {"example-min-max",
       "Example min-max: phi_min, phi_max, phi_sum of two members of A stay in A",
       R"(task = muck
about = minimum of an A_q weight and a Hoelder coefficient

[model]
p = 2
q = 3
weight = min(power(0.5), hoelder_bump(1; 0, 0.5))

[domain]
dims = 256
spacing = 0.0078125
origin = -1

[muck]
depth_min = 4
depth_max = 6
)"},
      {"example-aq-weight",
       "Example A_q: w(x) = |x|^alpha in A_q gives Jensen ratios below [w]_{A_q}",
       R"(task = jensen
about = Jensen ratios against the classical A_q constant
seed = 11

[model]
p = 2
q = 3
weight = power(0.5)

[domain]
dims = 256
spacing = 0.0078125
origin = -1

[jensen]
variant = jensen
depths = 6
extremal_exponent = 3
ap_ceiling = true
)"},
      {"jensen-outside-A-divergence",
       "a(x) = |x|^-1.5 violates the class A condition; the Jensen constant diverges with depth",
       R"(task = jensen
about = out-of-class coefficient, joint depth and grid refinement
seed = 5

[model]
p = 2
q = 3
weight = power(-1.5)

[domain]
dims = 64
spacing = 0.03125
origin = -1

[jensen]
depths = 4 5 6 7
cells_per_depth = 4
trend = increasing
)"},
      {"maximal-in-class",
       "maximal operator is modularly bounded on L^phi for phi in A, primal form",
       R"(task = maximal
about = rho(Mf) <= C rho(f) for normalized f, a = min{|x|^0.5,1}
seed = 1

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 256
spacing = 0.0078125
origin = -1

[maximal]
variant = primal
count = 200
)"},
      {"maximal-in-class-dual",
       "maximal operator is modularly bounded on the conjugate space L^phi*",
       R"(task = maximal
about = rho*(Mf) <= C rho*(f) for normalized f, a = min{|x|^0.5,1}
seed = 1

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 128
spacing = 0.015625
origin = -1

[maximal]
variant = dual
count = 60
)"},
      {"maximal-outside-A-divergence",
       "a(x) = |x|^-1.5: the maximal modular ratio diverges under grid refinement",
       R"(task = maximal
about = spikes next to the singularity, cells 64 -> 1024
seed = 2

[model]
p = 2
q = 3
weight = power(-1.5)

[domain]
dims = 64
spacing = 0.03125
origin = -1

[maximal]
count = 5
spikes = 4
refinements = 64 256 1024
trend = increasing
growth = 1.5
)"},
      {"maximal-cz-decomposition",
       "Calderon-Zygmund cubes: gamma^k < mean_Q |f| <= 2^n gamma^k and shifted dyadic domination",
       R"(task = maximal
about = CZ invariants and Mf <= 6^n sum_alpha M^alpha f on seeded fields
seed = 3

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 32 32
spacing = 0.0625
origin = -1 -1

[maximal]
count = 10
cz_fields = 10
domination = true
)"},
      {"poincare-random-balls",
       "Sobolev-Poincare inequality with a mean, exponent 1 < s < n/(n-1)",
       R"(task = poincare
about = modular Sobolev-Poincare on random balls
seed = 4

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 64 64
spacing = 0.03125
origin = -1 -1

[poincare]
trials = 20
s = 1.5
)"},
      {"pde-linear-exact",
       "affine boundary data: the discrete minimizer is the affine function",
       R"(task = solve
about = harmonic sanity, u = x

[model]
p = 2
q = 3
weight = zero

[domain]
dims = 16 16

[solve]
boundary = x
exact = x
refinements = 16 32
optimizer = damped_newton
eps = 0
residual_tol = 1e-11
energy_tol = 1e-15
sup_tolerance = 1e-12
)"},
      {"pde-harmonic-sanity",
       "harmonic polynomial x^2 - y^2: second order convergence of the discrete energy",
       R"(task = solve
about = harmonic sanity, u = x^2 - y^2, energy 4/3 on the unit square

[model]
p = 2
q = 3
weight = zero

[domain]
dims = 32 32

[solve]
boundary = x^2 - y^2
exact = x^2 - y^2
exact_energy = 1.3333333333333333
refinements = 32 64 128
optimizer = damped_newton
eps = 0
residual_tol = 1e-11
energy_tol = 1e-15
slope = 2
slope_tolerance = 0.2
)"},
      {"regularity-power-clipped",
       "minimizers for a = min{|x|^0.5,1} are locally Hoelder: oscillation decays with theta < 1",
       R"(task = regularity
about = oscillation decay, Caccioppoli and L-infinity sweeps

[model]
p = 2
q = 3
weight = power_clipped(0.5)

[domain]
dims = 256 256
spacing = 0.0078125
origin = -1 -1

[regularity]
boundary = sin(2*x) + 0.5*cos(3*y) + x*y
optimizer = damped_newton
center = 0 0
r0 = 0.9
levels = 4
theta_max = 0.95
beta_min = 0.1
r2_min = 0.9
)"},
      {"regularity-hoelder-bump",
       "minimizers for a Hoelder coefficient with q/p <= 1 + alpha/n are locally Hoelder",
       R"(task = regularity
about = oscillation decay for a cone coefficient, alpha = 0.5, q/p = 1.25

[model]
p = 2
q = 2.5
weight = hoelder_bump(0.5; 1, 0, 0)

[domain]
dims = 256 256
spacing = 0.0078125
origin = -1 -1

[regularity]
boundary = sin(2*x) + 0.5*cos(3*y) + x*y
optimizer = damped_newton
center = 0 0
r0 = 0.9
levels = 4
theta_max = 0.95
beta_min = 0.1
r2_min = 0.9
)"},
  };
  return catalog;
}

inline const Fixture* find_fixture(const std::string& name) {
  for (const auto& f : fixtures())
    if (f.name == name) return &f;
  return nullptr;
}

/// One line per fixture: name, then the statement it exercises.
inline std::string list_fixtures() {
  std::string s;
  for (const auto& f : fixtures()) s += f.name + "  " + f.exercises + "\n";
  return s;
}

}  // namespace dphase::cli
