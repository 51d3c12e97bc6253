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

// The run and compare commands, callable from tests as well as from main.

#ifndef DFL_CLI_HPP_
#define DFL_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dfl/config.hpp"

namespace dfl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

struct RunOverrides {
  std::optional<std::string> aggregator;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

// Applies overrides and revalidates. Throws ConfigError.
ExperimentConfig apply_overrides(ExperimentConfig config, const RunOverrides& overrides);

// Writes <out>/rounds.csv and <out>/summary.json and prints a per-round mean
// F1 table to `out`. Diagnostics go to `err`.
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err);

struct CompareCell {
  std::string aggregator;
  std::uint64_t seed = 0;
  std::optional<double> final_f1;   // empty when the run failed
  std::vector<double> mean_f1;      // per round
  std::string error;
};

struct CompareRow {
  std::string aggregator;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over seeds
};

struct CompareReport {
  std::vector<CompareCell> cells;  // seed-major, aggregators in listed order
  std::vector<CompareRow> rows;    // one per listed aggregator
};

// Runs every (aggregator, seed) pair of the base config. The partition for a
// seed does not depend on the aggregator, so all aggregators see the same
// splits. Failed runs are kept as cells with an error.
CompareReport run_comparison(const ExperimentConfig& base,
                             const std::vector<std::string>& aggregators,
                             const std::vector<std::uint64_t>& seeds,
                             const std::function<void(const CompareCell&)>& on_cell = {});

std::string format_compare_table(const CompareReport& report);

// Prints the table and writes <out>/compare.csv, one line per run as it
// finishes, so a crash leaves the completed runs on disk.
int cmd_compare(const std::filesystem::path& config_path,
                const std::vector<std::string>& aggregators,
                const std::vector<std::uint64_t>& seeds, const RunOverrides& overrides,
                std::ostream& out, std::ostream& err);

}  // namespace dfl

#endif  // DFL_CLI_HPP_
