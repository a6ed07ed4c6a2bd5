// Copyright 2026 The chi2mech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// chi2mech: design and audit chi^2-private disclosure mechanisms.
//
//   chi2mech design|sweep|adversary|provider <scenario.json>
//            [--out PATH] [--format json|csv] [--oracle-resolution N]
//            [--budget eps2|half-eps2] [--seed N]
//
// Exit codes: 0 ok, 1 parse or validation error, 2 infeasible epsilon,
// 3 numerical failure (singular matrix), 4 internal error.
// CHI2MECH_LOG sets the log level (trace, debug, info, warn, error, off).

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chi2mech/cli.hpp"

namespace {

void ConfigureLogging() {
  auto logger = spdlog::stderr_color_mt("chi2mech");
  logger->set_pattern("%^[%l]%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CHI2MECH_LOG"); env != nullptr && *env != '\0') {
    spdlog::cfg::helpers::load_levels(env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = chi2mech::cli;
  ConfigureLogging();

  CLI::App app{"Design and audit chi^2-private disclosure mechanisms"};
  app.require_subcommand(1);
  std::string scenario_path;
  std::string out_path;
  std::string format;
  std::optional<int> resolution;
  std::string budget;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    sub->add_option("--out", out_path, "Write the report here instead of stdout");
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--oracle-resolution", resolution, "Grid resolution of the exact oracle")
        ->check(CLI::PositiveNumber);
    sub->add_option("--budget", budget, "Per-letter budget convention")
        ->check(CLI::IsMember({"eps2", "half-eps2"}));
    sub->add_option("--seed", seed, "Seed of the randomized oracle");
    sub->add_option("--threads", threads, "Worker threads for the grid oracle (0 = all cores)");
  };
  CLI::App* design = app.add_subcommand("design", "Closed-form design for a base scenario");
  CLI::App* sweep = app.add_subcommand("sweep", "Epsilon (and crossover) sweep as CSV");
  CLI::App* adversary = app.add_subcommand("adversary", "Design against a noisy adversary channel");
  CLI::App* provider = app.add_subcommand("provider", "Design for a data provider protecting Z");
  for (CLI::App* sub : {design, sweep, adversary, provider}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cli::RunOptions options;
    options.format = format;
    options.oracle_resolution = resolution;
    if (!budget.empty()) options.budget = cli::ParseBudget(budget);
    options.seed = seed;
    options.threads = threads;

    spdlog::info("loading scenario {}", scenario_path);
    const cli::Scenario scenario = cli::LoadScenario(scenario_path);
    cli::CommandOutput output;
    if (*design) {
      output = cli::RunDesign(scenario, options);
    } else if (*sweep) {
      output = cli::RunSweep(scenario, options);
    } else if (*adversary) {
      output = cli::RunAdversary(scenario, options);
    } else {
      output = cli::RunProvider(scenario, options);
    }
    for (const std::string& w : output.warnings) spdlog::warn("{}", w);

    if (out_path.empty()) {
      std::cout << output.text;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        spdlog::error("cannot write {}", out_path);
        return 1;
      }
      out << output.text;
      spdlog::info("wrote {}", out_path);
    }
    return 0;
  } catch (const chi2mech::Error& e) {
    spdlog::error("{}", e.what());
    return cli::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 4;
  }
}
