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

#include "dfl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "dfl/errors.hpp"
#include "dfl/experiment.hpp"

namespace dfl {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig config, const RunOverrides& overrides) {
  if (overrides.aggregator) {
    try {
      config.aggregator = parse_aggregator(*overrides.aggregator);
    } catch (const InvalidArgumentError& e) {
      throw ConfigError(std::string("--aggregator: ") + e.what());
    }
  }
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.threads) config.threads = *overrides.threads;
  config.validate();
  return config;
}

int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = apply_overrides(parse_config(config_path), overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  try {
    spdlog::info("running {} on {} nodes for {} rounds (seed {})", to_string(config.aggregator),
                 config.n_nodes, config.rounds, config.seed);
    out << "round  mean_f1  std_f1\n";
    ExperimentResult result = run_experiment(config, [&](const RoundRecord& r) {
      out << r.round << "  " << fixed(r.mean_f1()) << "  " << fixed(r.std_f1()) << '\n'
          << std::flush;
    });
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "rounds.csv", rounds_csv(result.records, config.record_timing));
    write_file(dir / "summary.json", summary_json(result).dump(2) + "\n");
    spdlog::info("wrote {} and {}", (dir / "rounds.csv").string(),
                 (dir / "summary.json").string());
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

CompareReport run_comparison(const ExperimentConfig& base,
                             const std::vector<std::string>& aggregators,
                             const std::vector<std::uint64_t>& seeds,
                             const std::function<void(const CompareCell&)>& on_cell) {
  if (aggregators.empty()) throw ConfigError("--aggregators: empty list");
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  for (const auto& a : aggregators) {
    try {
      parse_aggregator(a);
    } catch (const InvalidArgumentError& e) {
      throw ConfigError(std::string("--aggregators: ") + e.what());
    }
  }

  CompareReport report;
  for (std::uint64_t seed : seeds) {
    std::optional<Partition> shared;
    for (const auto& name : aggregators) {
      CompareCell cell;
      cell.aggregator = name;
      cell.seed = seed;
      try {
        ExperimentConfig config = base;
        config.aggregator = parse_aggregator(name);
        config.seed = seed;
        ExperimentResult result = run_experiment(config);
        if (!shared) {
          shared = result.partition;
        } else if (shared->assignments != result.partition.assignments) {
          throw ConsistencyError("partition for seed " + std::to_string(seed) +
                                 " differs between aggregators");
        }
        for (const auto& r : result.records) cell.mean_f1.push_back(r.mean_f1());
        cell.final_f1 = cell.mean_f1.empty() ? 0.0 : cell.mean_f1.back();
      } catch (const std::exception& e) {
        cell.error = e.what();
        spdlog::error("{} seed {}: {}", name, seed, e.what());
      }
      if (on_cell) on_cell(cell);
      report.cells.push_back(std::move(cell));
    }
  }

  for (const auto& name : aggregators) {
    CompareRow row;
    row.aggregator = name;
    std::vector<double> finals;
    // Cells for a repeated aggregator name are identical, so count each seed once.
    for (std::uint64_t seed : seeds) {
      for (const auto& cell : report.cells) {
        if (cell.aggregator == name && cell.seed == seed) {
          ++row.runs;
          if (cell.final_f1) {
            finals.push_back(*cell.final_f1);
          } else {
            ++row.failures;
          }
          break;
        }
      }
    }
    if (!finals.empty()) {
      double sum = 0.0;
      for (double f : finals) sum += f;
      row.mean = sum / static_cast<double>(finals.size());
      if (finals.size() > 1) {
        double sq = 0.0;
        for (double f : finals) sq += (f - row.mean) * (f - row.mean);
        row.std = std::sqrt(sq / static_cast<double>(finals.size() - 1));
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string format_compare_table(const CompareReport& report) {
  std::string s = "aggregator  runs  final F1\n";
  for (const auto& row : report.rows) {
    std::string name = row.aggregator;
    name.resize(std::max<std::size_t>(name.size(), 10), ' ');
    s += name + "  " + std::to_string(row.runs) + "     ";
    if (row.failures == row.runs) {
      s += "FAILED";
    } else {
      s += fixed(row.mean, 3) + " \xC2\xB1 " + fixed(row.std, 3);
      if (row.failures) s += "  (" + std::to_string(row.failures) + " failed)";
    }
    s += '\n';
  }
  return s;
}

int cmd_compare(const std::filesystem::path& config_path,
                const std::vector<std::string>& aggregators,
                const std::vector<std::uint64_t>& seeds, const RunOverrides& overrides,
                std::ostream& out, std::ostream& err) {
  ExperimentConfig base;
  try {
    RunOverrides o = overrides;
    o.aggregator.reset();
    o.seed.reset();
    base = apply_overrides(parse_config(config_path), o);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  std::ofstream csv;
  try {
    std::filesystem::create_directories(base.output_dir);
    csv.open(std::filesystem::path(base.output_dir) / "compare.csv", std::ios::binary);
    if (!csv) throw Error("cannot write compare.csv in " + base.output_dir);
    csv << "aggregator,seed,final_f1,status\n" << std::flush;
    CompareReport report = run_comparison(base, aggregators, seeds, [&](const CompareCell& c) {
      out << c.aggregator << " seed " << c.seed << ": "
          << (c.final_f1 ? fixed(*c.final_f1) : "FAILED (" + c.error + ")") << '\n'
          << std::flush;
      csv << c.aggregator << ',' << c.seed << ','
          << (c.final_f1 ? format_double(*c.final_f1) : "") << ','
          << (c.final_f1 ? "ok" : "failed") << '\n'
          << std::flush;
    });
    out << '\n' << format_compare_table(report);
    for (const auto& row : report.rows) {
      if (row.failures) return kExitRuntimeError;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace dfl
