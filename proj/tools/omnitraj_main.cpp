// Copyright 2026 The OmniTraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omnitraj/cli/commands.hpp"

namespace
{

using namespace omnitraj;

constexpr int kRuntimeFailure = 1;
constexpr int kConfigFailure = 2;

int fail(int code, const std::string & kind, const std::string & msg)
{
  std::string one_line = msg;
  for (auto & c : one_line) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  std::cerr << "omnitraj: " << kind << ": " << one_line << "\n";
  return code;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"omnitraj: frame-rate conditioned trajectory forecasting lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto add_common = [&](CLI::App * sub) {
    sub->add_option("--config", config_path, "run configuration JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override output_dir");
  };

  auto * gen = app.add_subcommand("gen", "generate synthetic scenes as NDJSON");
  add_common(gen);

  std::vector<std::string> inputs;
  std::string cache_out;
  auto * ingest = app.add_subcommand("ingest", "window NDJSON scenes into a sample cache");
  add_common(ingest);
  ingest->add_option("inputs", inputs, "NDJSON scene files (default: data.scenes)");
  ingest->add_option("--cache-out", cache_out, "cache path (default: <output_dir>/samples.cache)");

  auto * train_cmd = app.add_subcommand("train", "train a model; resumes from <output_dir>/train_state.bin");
  add_common(train_cmd);

  auto * eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
  add_common(eval);

  std::string which;
  auto * ablate = app.add_subcommand("ablate", "run one ablation table");
  add_common(ablate);
  ablate->add_option("--which", which, "fps | decoupled | mask | twoframe | fewshot")
    ->required()
    ->check(CLI::IsMember(cli::ablation_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    return fail(kConfigFailure, "usage error", e.what());
  }

  cli::RunConfig rc;
  try {
    rc = cli::load_run_config(config_path);
    if (seed) {
      rc.seed = *seed;
    }
    if (!out_dir.empty()) {
      rc.output_dir = out_dir;
    }
    cli::validate(rc);
  } catch (const ConfigError & e) {
    return fail(kConfigFailure, "config error", e.what());
  } catch (const std::exception & e) {
    return fail(kConfigFailure, "config error", e.what());
  }

  try {
    if (gen->parsed()) {
      return cli::cmd_gen(rc, std::cout);
    }
    if (ingest->parsed()) {
      return cli::cmd_ingest(rc, inputs, cache_out, std::cout);
    }
    if (train_cmd->parsed()) {
      return cli::cmd_train(rc, std::cout);
    }
    if (eval->parsed()) {
      return cli::cmd_eval(rc, std::cout);
    }
    return cli::cmd_ablate(rc, which, std::cout);
  } catch (const ConfigError & e) {
    return fail(kConfigFailure, "config error", e.what());
  } catch (const std::exception & e) {
    return fail(kRuntimeFailure, "error", e.what());
  }
}
