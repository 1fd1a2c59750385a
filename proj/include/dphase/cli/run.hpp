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

// `dphase run`: config -> task -> report.json, tables/*.csv, checkpoints/*.
// Exit status 0 when every configured assertion holds, 1 when the task
// fails (the message names the invariant), 2 for configuration errors.

#include <dphase/cli/fixtures.hpp>
#include <dphase/cli/tasks.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>

#ifndef DPHASE_VERSION
#define DPHASE_VERSION "0.0.0"
#endif
#ifndef DPHASE_GIT_REVISION
#define DPHASE_GIT_REVISION "unknown"
#endif

namespace dphase::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitTaskFailure = 1;
inline constexpr int kExitConfigError = 2;

struct RunOptions {
  std::optional<std::string> out_dir;   // overrides the config's `out`
  std::optional<std::uint64_t> seed;    // overrides `seed`
  std::optional<unsigned> threads;      // 0 = hardware concurrency
  bool write_files = true;
};

struct RunResult {
  int exit_code = kExitPass;
  std::string message;  // summary line, or the error / failed invariants
  nlohmann::json report;  // {"payload": ..., "meta": ...}; empty on config errors
  std::string out_dir;
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw InputError("cannot write " + p.string());
  os << text;
}

}  // namespace detail

/// Runs a parsed config. `base_dir` anchors relative paths inside it.
inline RunResult run(Config cfg, const std::string& base_dir, const RunOptions& opt = {}) {
  RunResult res;
  if (opt.seed) cfg.set("", "seed", std::to_string(*opt.seed));
  if (opt.threads) set_thread_count(*opt.threads);
  TaskRunner runner;
  std::string task, about;
  try {
    task = cfg.string("", "task", "");
    about = cfg.string("", "about", "");
    res.out_dir = opt.out_dir ? *opt.out_dir : cfg.string("", "out", "out");
    runner = read_task(cfg, TaskContext{base_dir});
    cfg.require_all_used();
  } catch (const std::exception& e) {
    res.exit_code = kExitConfigError;
    res.message = std::string("config error: ") + e.what();
    return res;
  }

  TaskOutput out;
  try {
    out = runner();
  } catch (const std::exception& e) {
    out.failures.push_back(std::string("task error: ") + e.what());
  }

  nlohmann::json payload = {{"task", task},
                            {"config", cfg.flat()},
                            {"version", DPHASE_VERSION},
                            {"revision", DPHASE_GIT_REVISION},
                            {"results", out.results},
                            {"summary", out.summary},
                            {"failures", out.failures},
                            {"passed", out.failures.empty()}};
  if (!about.empty()) payload["about"] = about;
  res.report = {{"payload", payload},
                {"meta", {{"timestamp", detail::utc_timestamp()}, {"threads", thread_count()}}}};
  res.exit_code = out.failures.empty() ? kExitPass : kExitTaskFailure;
  if (out.failures.empty()) {
    res.message = task + ": " + out.summary;
  } else {
    res.message = task + " failed:";
    for (const auto& f : out.failures) res.message += "\n  " + f;
  }

  if (opt.write_files) {
    namespace fs = std::filesystem;
    const fs::path root(res.out_dir);
    fs::create_directories(root / "tables");
    fs::create_directories(root / "checkpoints");
    detail::write_text(root / "report.json", res.report.dump(2) + "\n");
    for (const auto& [name, text] : out.tables) detail::write_text(root / "tables" / name, text);
    for (const auto& [name, sol] : out.checkpoints)
      write_checkpoint(sol, (root / "checkpoints" / name).string());
  }
  return res;
}

inline RunResult run_file(const std::string& path, const RunOptions& opt = {}) {
  Config cfg;
  try {
    cfg = Config::load(path);
  } catch (const std::exception& e) {
    return {kExitConfigError, std::string("config error: ") + e.what(), {}, {}};
  }
  const auto parent = std::filesystem::path(path).parent_path().string();
  return run(std::move(cfg), parent, opt);
}

inline RunResult run_fixture(const std::string& name, const RunOptions& opt = {}) {
  const Fixture* f = find_fixture(name);
  if (!f) return {kExitConfigError, "config error: unknown fixture '" + name + "'", {}, {}};
  Config cfg;
  try {
    cfg = Config::parse_string(f->config, "fixture:" + name);
  } catch (const std::exception& e) {
    return {kExitConfigError, std::string("config error: ") + e.what(), {}, {}};
  }
  return run(std::move(cfg), {}, opt);
}

}  // namespace dphase::cli
