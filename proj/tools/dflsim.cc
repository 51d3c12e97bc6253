/*
 * Copyright 2026 The dflpool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// dflsim: run decentralized federated learning experiments from a JSON config.
//
//   dflsim run --config cfg.json [--aggregator fedep] [--seed 3] [--out DIR]
//   dflsim compare --config cfg.json --aggregators fedavg,fedep --seeds 1,2,3
//
// DFL_LOG_LEVEL (trace|debug|info|warn|error|off) sets log verbosity.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dfl/cli.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dflsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DFL_LOG_LEVEL")) {
    auto level = spdlog::level::from_str(env);
    // from_str maps anything unknown to off; only honor real names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Decentralized federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  dfl::RunOverrides overrides;
  std::string aggregator;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* agg_opt = run->add_option("--aggregator", aggregator, "fedavg | fedprox | fedep");
  auto* seed_opt = run->add_option("--seed", seed, "Master seed");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* thr_opt = run->add_option("--threads", threads, "Worker threads (0 = default)");

  std::vector<std::string> aggregators;
  std::vector<std::uint64_t> seeds;
  auto* compare = app.add_subcommand("compare", "Compare aggregators over several seeds");
  compare->add_option("--config", config_path, "Base config (JSON)")->required();
  compare->add_option("--aggregators", aggregators, "Comma-separated aggregators")
      ->required()
      ->delimiter(',');
  compare->add_option("--seeds", seeds, "Comma-separated seeds")->required()->delimiter(',');
  auto* cmp_out = compare->add_option("--out", out_dir, "Output directory");
  auto* cmp_thr = compare->add_option("--threads", threads, "Worker threads (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dfl::kExitOk : dfl::kExitConfigError;
  }

  if (run->parsed()) {
    if (*agg_opt) overrides.aggregator = aggregator;
    if (*seed_opt) overrides.seed = seed;
    if (*out_opt) overrides.output_dir = out_dir;
    if (*thr_opt) overrides.threads = threads;
    return dfl::cmd_run(config_path, overrides, std::cout, std::cerr);
  }
  if (*cmp_out) overrides.output_dir = out_dir;
  if (*cmp_thr) overrides.threads = threads;
  return dfl::cmd_compare(config_path, aggregators, seeds, overrides, std::cout, std::cerr);
}
