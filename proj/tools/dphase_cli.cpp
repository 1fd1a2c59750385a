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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  namespace cli = dphase::cli;
  CLI::App app{"Numerical toolkit for double phase functionals"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment from a config file or fixture");
  std::string config, fixture, out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  auto* cfg_opt = run->add_option("-c,--config", config, "Config file")->check(CLI::ExistingFile);
  auto* fix_opt = run->add_option("--fixture", fixture, "Built-in fixture name");
  cfg_opt->excludes(fix_opt);
  auto* out_opt = run->add_option("-o,--out", out, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Seed override");
  auto* thr_opt = run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* fx = app.add_subcommand("fixtures", "List the built-in experiment catalog");
  std::string export_dir;
  fx->add_option("--export", export_dir, "Write every fixture config to <dir>/<name>.ini");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kExitConfigError;
  }

  if (fx->parsed()) {
    if (!export_dir.empty()) {
      std::filesystem::create_directories(export_dir);
      for (const auto& f : cli::fixtures()) {
        std::ofstream os(std::filesystem::path(export_dir) / (f.name + ".ini"));
        os << "# " << f.exercises << "\n" << f.config;
      }
    }
    std::cout << cli::list_fixtures();
    return 0;
  }

  if (cfg_opt->count() == 0 && fix_opt->count() == 0) {
    std::cerr << "run: one of --config or --fixture is required\n";
    return cli::kExitConfigError;
  }
  cli::RunOptions opt;
  if (out_opt->count()) opt.out_dir = out;
  if (seed_opt->count()) opt.seed = seed;
  if (thr_opt->count()) opt.threads = threads;
  const auto res = cfg_opt->count() ? cli::run_file(config, opt) : cli::run_fixture(fixture, opt);
  (res.exit_code == 0 ? std::cout : std::cerr) << res.message << '\n';
  return res.exit_code;
}
