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


#include <dphase/cli/run.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dphase;
using namespace dphase::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dphase_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

RunResult run_text(const std::string& text, RunOptions opt = {}) {
  opt.write_files = false;
  return run(Config::parse_string(text, "t.ini"), {}, opt);
}

const char* kNorm = R"(task = norm
[model]
p = 2
q = 3
[domain]
dims = 16 16
[norm]
field = 1
expect = 0.7071067811865476
)";

}  // namespace

TEST(Config, SectionsCommentsAndTypes) {
  const auto c = Config::parse_string(
      "# header\ntask = norm  # trailing\n\n[model]\np = 2.5\nweight = hoelder_bump(1; 0, 0)\n"
      "[domain]\ndims = 8, 4\nflag = yes\nn = 12\n",
      "x.ini");
  EXPECT_EQ(c.string("", "task"), "norm");
  EXPECT_DOUBLE_EQ(c.number("model", "p"), 2.5);
  EXPECT_EQ(c.string("model", "weight"), "hoelder_bump(1; 0, 0)");
  EXPECT_EQ(c.numbers("domain", "dims"), (std::vector<double>{8, 4}));
  EXPECT_TRUE(c.boolean("domain", "flag", false));
  EXPECT_EQ(c.integer("domain", "n", 0), 12);
  EXPECT_EQ(c.number("domain", "missing", 7.0), 7.0);
  EXPECT_NO_THROW(c.require_all_used());
}

TEST(Config, ErrorsCarryFileAndLine) {
  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message([] { Config::parse_string("a = 1\n[s]\nb = 2\nb = 3\n", "f.ini"); })
                .find("f.ini:4"),
            std::string::npos);
  EXPECT_NE(message([] { Config::parse_string("a = 1\nnot a pair\n", "f.ini"); }).find("f.ini:2"),
            std::string::npos);
  EXPECT_NE(message([] { Config::parse_string("[bad\n", "f.ini"); }).find("f.ini:1"),
            std::string::npos);
  const auto c = Config::parse_string("x = 1\n\ny = abc\nz = 3\n", "g.ini");
  EXPECT_NE(message([&] { c.number("", "y"); }).find("g.ini:3"), std::string::npos);
  c.number("", "x");
  c.integer("", "z", 0);
  EXPECT_NO_THROW(c.require_all_used());
  const auto d = Config::parse_string("x = 1\n\ny = 2\n", "h.ini");
  d.number("", "x");
  EXPECT_NE(message([&] { d.require_all_used(); }).find("h.ini:3: unknown key 'y'"),
            std::string::npos);
}

TEST(Expression, PrecedenceAndFunctions) {
  const Point p{0.5, -2.0};
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(p), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(p), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(p), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x^2 - y^2")(p), 0.25 - 4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + x) / 3")(p), 0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("max(x, y) + min(x, y) + abs(y)")(p), 0.5 - 2.0 + 2.0);
  EXPECT_NEAR(Expression::parse("sin(pi*x) + exp(0) + sqrt(4) + log(1) + tanh(0)")(p), 4.0,
              1e-15);
  EXPECT_NEAR(Expression::parse("1e-3 * 2")(p), 2e-3, 1e-18);
}

TEST(Expression, ErrorsNameTheColumn) {
  for (const char* bad : {"1 +", "foo(1)", "(x", "x $ 2", "sin(1, 2)"}) {
    try {
      Expression::parse(bad);
      ADD_FAILURE() << bad;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << bad << ": " << e.what();
    }
  }
}

TEST(Run, NormOfOneOnTheUnitSquare) {
  const auto r = run_text(kNorm);
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  const auto& p = r.report["payload"];
  EXPECT_NEAR(p["results"]["norm"].get<double>(), 1.0 / std::sqrt(2.0), 1e-8);
  EXPECT_TRUE(p["passed"].get<bool>());
  EXPECT_EQ(p["task"], "norm");
  EXPECT_EQ(p["config"]["model.p"], "2");
  EXPECT_TRUE(r.report["meta"].contains("timestamp"));
  EXPECT_FALSE(p.contains("timestamp"));
}

TEST(Run, FailedAssertionExitsOneNamingTheInvariant) {
  std::string text = kNorm;
  text.replace(text.find("0.7071067811865476"), 18, "0.5");
  const auto r = run_text(text);
  EXPECT_EQ(r.exit_code, kExitTaskFailure);
  EXPECT_NE(r.message.find("norm matches expect"), std::string::npos) << r.message;
  EXPECT_FALSE(r.report["payload"]["passed"].get<bool>());
}

TEST(Run, ConfigProblemsExitTwoWithLocation) {
  struct Case {
    std::string text, where;
  };
  const std::vector<Case> cases = {
      {"task = norm\n[model]\np = 2\nq = x3\n[domain]\ndims = 4\n", "t.ini:4"},
      {"task = norm\n[model]\np = 2\nq = 3\n[domain]\ndims = 4\ncolour = red\n", "t.ini:7"},
      {"task = fly\n", "t.ini:1"},
      {"task = norm\n[model]\np = 2\nq = 3\n[domain]\ndims = 4\n[norm]\nfield = 1 +\n", "t.ini:8"},
      {"task = norm\n[model]\np = 2\nq = 3\nweight = power(\n[domain]\ndims = 4\n", "t.ini:5"},
      {"task = maximal\n[model]\np = 2\nq = 3\n[domain]\ndims = 16\n", "seed"},
      {"task = norm\n[model]\np = 3\nq = 2\n[domain]\ndims = 4\n", "t.ini:4"},
  };
  for (const auto& c : cases) {
    const auto r = run_text(c.text);
    EXPECT_EQ(r.exit_code, kExitConfigError) << c.text;
    EXPECT_NE(r.message.find(c.where), std::string::npos) << r.message;
  }
}

TEST(Run, SameConfigAndSeedGiveIdenticalPayloads) {
  for (const char* name : {"maximal-in-class-dual", "poincare-random-balls", "example-aq-weight"}) {
    const auto a = run_fixture(name, {std::nullopt, std::nullopt, 1u, false});
    const auto b = run_fixture(name, {std::nullopt, std::nullopt, 3u, false});
    ASSERT_EQ(a.exit_code, kExitPass) << a.message;
    EXPECT_EQ(a.report["payload"].dump(), b.report["payload"].dump()) << name;
  }
}

TEST(Run, SeedOverrideChangesTheRandomFamily) {
  const auto a = run_fixture("poincare-random-balls", {std::nullopt, std::nullopt, std::nullopt, false});
  const auto b = run_fixture("poincare-random-balls", {std::nullopt, 99u, std::nullopt, false});
  EXPECT_EQ(b.report["payload"]["config"]["seed"], "99");
  EXPECT_NE(a.report["payload"]["results"].dump(), b.report["payload"]["results"].dump());
}

TEST(Run, MuckSweepIsMonotoneInDepth) {
  const auto r = run_fixture("example-power-alpha-0.5", {std::nullopt, std::nullopt, std::nullopt, false});
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  const auto est = r.report["payload"]["results"]["estimates"].get<std::vector<double>>();
  ASSERT_EQ(est.size(), 5u);
  for (std::size_t k = 1; k < est.size(); ++k) EXPECT_GE(est[k], est[k - 1]);
  EXPECT_EQ(r.report["payload"]["results"]["final"].get<double>(), est.back());
}

TEST(Run, HarmonicFixtureConvergesAtSecondOrder) {
  const auto r = run_fixture("pde-harmonic-sanity", {std::nullopt, std::nullopt, std::nullopt, false});
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  for (double s : r.report["payload"]["results"]["slopes"].get<std::vector<double>>())
    EXPECT_NEAR(s, 2.0, 0.2);
}

TEST(Run, WritesReportTablesAndCheckpoints) {
  const auto dir = scratch("files");
  const auto r = run_fixture("pde-linear-exact", {dir.string(), std::nullopt, std::nullopt, true});
  ASSERT_EQ(r.exit_code, kExitPass) << r.message;
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "tables" / "solve.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "solve_N16.grid"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "solve_N32.json"));
  std::ifstream is(dir / "report.json");
  const auto j = nlohmann::json::parse(is);
  EXPECT_EQ(j["payload"].dump(), r.report["payload"].dump());
}

TEST(Run, RelativeGridPathsResolveAgainstTheConfigFile) {
  const auto dir = scratch("relative");
  const auto g = GridGeometry::cube(1, 8, 0.0, 1.0);
  write_grid_file((dir / "f.grid").string(), GridField(g, 1.0));
  std::ofstream(dir / "c.ini") << "task = norm\n[model]\np = 2\nq = 3\n[norm]\nfield_file = f.grid\n"
                                  "expect = 0.7071067811865476\n";
  const auto r = run_file((dir / "c.ini").string(), {(dir / "out").string(), std::nullopt, std::nullopt, false});
  EXPECT_EQ(r.exit_code, kExitPass) << r.message;
}

TEST(Fixtures, CatalogNamesAndStatements) {
  const std::string list = list_fixtures();
  for (const char* name : {"example-power-alpha-0.5", "pde-harmonic-sanity",
                           "maximal-outside-A-divergence"})
    EXPECT_NE(list.find(name), std::string::npos) << name;
  for (const auto& f : fixtures()) {
    EXPECT_FALSE(f.exercises.empty()) << f.name;
    const auto c = Config::parse_string(f.config, f.name);
    EXPECT_TRUE(c.has("", "about")) << f.name;
  }
}

TEST(Fixtures, EveryFixtureConfigParses) {
  // Reading validates every key; run() only reaches the task body on success.
  for (const auto& f : fixtures()) {
    auto c = Config::parse_string(f.config, f.name);
    c.string("", "about", "");
    c.string("", "task");
    EXPECT_NO_THROW({
      read_task(c, {});
      c.require_all_used();
    }) << f.name;
  }
}

TEST(Fixtures, SampleConfigsMatchTheCatalog) {
  for (const auto& f : fixtures()) {
    const auto path = std::filesystem::path(DPHASE_SOURCE_DIR) / "configs" / (f.name + ".ini");
    std::ifstream is(path);
    ASSERT_TRUE(is) << path;
    std::stringstream ss;
    ss << is.rdbuf();
    EXPECT_EQ(ss.str(), "# " + f.exercises + "\n" + f.config) << f.name;
  }
}

TEST(Binary, ExitStatuses) {
  const auto dir = scratch("binary");
  std::ofstream(dir / "bad.ini") << "task = norm\n[model]\np = two\n";
  const std::string bin = DPHASE_CLI_BINARY;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(bin + " fixtures"), 0);
  EXPECT_EQ(status(bin + " run --config " + (dir / "bad.ini").string()), 2);
  EXPECT_EQ(status(bin + " run --fixture norm-unit-square --out " + (dir / "o").string()), 0);
  EXPECT_EQ(status(bin + " run --fixture no-such-fixture"), 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "o" / "report.json"));
}
