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

#ifndef OMNITRAJ__CLI__RUN_CONFIG_HPP_
#define OMNITRAJ__CLI__RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omnitraj/model/config.hpp"
#include "omnitraj/synthgen/benchmark.hpp"
#include "omnitraj/train/trainer.hpp"
#include "omnitraj/util/files.hpp"

namespace omnitraj::cli
{

using nlohmann::json;

/// Where samples come from and how they are split.
struct DataConfig
{
  std::string source = "generator";  // generator | cache
  synthgen::GenSpec generator;
  std::int64_t pose_keypoints = 0;   // 0: trajectory only
  std::string cache;                 // sample cache path when source = cache
  std::string scenes;                // NDJSON input for ingest
  std::string benchmark = "cross_setup";  // cross_setup | setup1 | setup2 | setup3
  std::vector<std::string> ingest_setups = {"setup1", "setup2", "setup3"};
  std::int64_t n_test_scenes = -1;
  double val_fraction = 0.1;
  double test_fraction = 0.15;       // cache source only
};

struct EvalConfig
{
  std::string split = "test";  // train | val | test
  std::string checkpoint;      // default: <output_dir>/model.ckpt
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<double> mask_ratios = {0.10, 0.25, 0.50, 0.75, 0.90};
  std::vector<std::int64_t> fewshot_n = {2, 8, 32, 128, 200};
  std::int64_t fewshot_epochs = 30;
  std::int64_t fewshot_samples_per_epoch = 256;
};

struct RunConfig
{
  std::uint64_t seed = 0;
  std::string output_dir = "omnitraj_out";
  DataConfig data;
  model::ModelConfig model;
  train::TrainPlan train;
  std::map<std::string, double> mixture;  // source name -> weight; empty means equal weights
  EvalConfig eval;

  /// Model config with the run seed applied.
  model::ModelConfig seeded_model() const
  {
    auto m = model;
    m.seed = seed;
    return m;
  }

  train::TrainPlan seeded_plan() const
  {
    auto p = train;
    p.seed = seed;
    return p;
  }

  synthgen::GenSpec seeded_generator() const
  {
    auto g = data.generator;
    g.seed = seed;
    return g;
  }
};

namespace detail
{

[[noreturn]] inline void unknown_key(const std::string & path)
{
  throw ConfigError("unknown config key '" + path + "'");
}

inline void require_object(const json & j, const std::string & where)
{
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
}

template <typename T>
T get_as(const json & v, const std::string & path)
{
  try {
    return v.get<T>();
  } catch (const json::exception & e) {
    throw ConfigError("invalid value for '" + path + "': " + e.what());
  }
}

inline model::Phase parse_phase(const std::string & s, const std::string & path)
{
  if (s == "pretrain") {
    return model::Phase::pretrain;
  }
  if (s == "finetune") {
    return model::Phase::finetune;
  }
  throw ConfigError("invalid value for '" + path + "': expected pretrain or finetune, got '" + s + "'");
}

inline std::string phase_name(model::Phase p)
{
  return p == model::Phase::pretrain ? "pretrain" : p == model::Phase::finetune ? "finetune" : "eval";
}

inline void parse_generator(const json & j, synthgen::GenSpec & g, const std::string & where)
{
  require_object(j, where);
  for (const auto & [key, v] : j.items()) {
    const auto path = where + "." + key;
    if (key == "kind") {
      g.kind = synthgen::parse_gen_kind(get_as<std::string>(v, path));
    } else if (key == "n_scenes") {
      g.n_scenes = get_as<std::int64_t>(v, path);
    } else if (key == "n_agents") {
      g.n_agents = get_as<std::int64_t>(v, path);
    } else if (key == "base_fps") {
      g.base_fps = get_as<double>(v, path);
    } else if (key == "duration_s") {
      g.duration_s = get_as<double>(v, path);
    } else if (key == "speed_range") {
      g.speed_range = get_as<std::array<double, 2>>(v, path);
    } else if (key == "turn_rate_range") {
      g.turn_rate_range = get_as<std::array<double, 2>>(v, path);
    } else if (key == "noise_std") {
      g.noise_std = get_as<double>(v, path);
    } else {
      unknown_key(path);
    }
  }
}

inline json generator_json(const synthgen::GenSpec & g)
{
  return {
    {"kind", synthgen::gen_kind_name(g.kind)},
    {"n_scenes", g.n_scenes},
    {"n_agents", g.n_agents},
    {"base_fps", g.base_fps},
    {"duration_s", g.duration_s},
    {"speed_range", g.speed_range},
    {"turn_rate_range", g.turn_rate_range},
    {"noise_std", g.noise_std},
  };
}

}  // namespace detail

/// Named setups accepted in configs.
inline synthgen::BenchmarkSetup setup_by_name(const std::string & name)
{
  if (name == "setup1") {
    return synthgen::setup1();
  }
  if (name == "setup2") {
    return synthgen::setup2();
  }
  if (name == "setup3") {
    return synthgen::setup3();
  }
  throw ConfigError("unknown setup '" + name + "' (expected setup1, setup2 or setup3)");
}

/// Strict parse: every key must be known; missing keys keep their defaults.
inline RunConfig parse_run_config(const json & j)
{
  using detail::get_as;
  using detail::unknown_key;
  detail::require_object(j, "config");
  RunConfig rc;
  for (const auto & [key, v] : j.items()) {
    if (key == "seed") {
      rc.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "output_dir") {
      rc.output_dir = get_as<std::string>(v, key);
    } else if (key == "data") {
      detail::require_object(v, "data");
      for (const auto & [dk, dv] : v.items()) {
        const auto path = "data." + dk;
        if (dk == "source") {
          rc.data.source = get_as<std::string>(dv, path);
        } else if (dk == "generator") {
          detail::parse_generator(dv, rc.data.generator, path);
        } else if (dk == "pose_keypoints") {
          rc.data.pose_keypoints = get_as<std::int64_t>(dv, path);
        } else if (dk == "cache") {
          rc.data.cache = get_as<std::string>(dv, path);
        } else if (dk == "scenes") {
          rc.data.scenes = get_as<std::string>(dv, path);
        } else if (dk == "benchmark") {
          rc.data.benchmark = get_as<std::string>(dv, path);
        } else if (dk == "ingest_setups") {
          rc.data.ingest_setups = get_as<std::vector<std::string>>(dv, path);
        } else if (dk == "n_test_scenes") {
          rc.data.n_test_scenes = get_as<std::int64_t>(dv, path);
        } else if (dk == "val_fraction") {
          rc.data.val_fraction = get_as<double>(dv, path);
        } else if (dk == "test_fraction") {
          rc.data.test_fraction = get_as<double>(dv, path);
        } else {
          unknown_key(path);
        }
      }
    } else if (key == "model") {
      rc.model = model::ModelConfig::from_json(v, "model");
    } else if (key == "train") {
      detail::require_object(v, "train");
      for (const auto & [tk, tv] : v.items()) {
        const auto path = "train." + tk;
        if (tk == "epochs") {
          rc.train.epochs = get_as<std::int64_t>(tv, path);
        } else if (tk == "batch_size") {
          rc.train.batch_size = get_as<std::int64_t>(tv, path);
        } else if (tk == "phase") {
          rc.train.phase = detail::parse_phase(get_as<std::string>(tv, path), path);
        } else if (tk == "lr") {
          rc.train.lr = get_as<double>(tv, path);
        } else if (tk == "lr_decay") {
          rc.train.lr_decay = get_as<double>(tv, path);
        } else if (tk == "lr_decay_fraction") {
          rc.train.lr_decay_fraction = get_as<double>(tv, path);
        } else if (tk == "samples_per_epoch") {
          rc.train.samples_per_epoch = get_as<std::int64_t>(tv, path);
        } else if (tk == "eval_every") {
          rc.train.eval_every = get_as<std::int64_t>(tv, path);
        } else if (tk == "mixture") {
          rc.mixture = get_as<std::map<std::string, double>>(tv, path);
        } else {
          unknown_key(path);
        }
      }
    } else if (key == "eval") {
      detail::require_object(v, "eval");
      for (const auto & [ek, ev] : v.items()) {
        const auto path = "eval." + ek;
        if (ek == "split") {
          rc.eval.split = get_as<std::string>(ev, path);
        } else if (ek == "checkpoint") {
          rc.eval.checkpoint = get_as<std::string>(ev, path);
        } else if (ek == "seeds") {
          rc.eval.seeds = get_as<std::vector<std::uint64_t>>(ev, path);
        } else if (ek == "mask_ratios") {
          rc.eval.mask_ratios = get_as<std::vector<double>>(ev, path);
        } else if (ek == "fewshot_n") {
          rc.eval.fewshot_n = get_as<std::vector<std::int64_t>>(ev, path);
        } else if (ek == "fewshot_epochs") {
          rc.eval.fewshot_epochs = get_as<std::int64_t>(ev, path);
        } else if (ek == "fewshot_samples_per_epoch") {
          rc.eval.fewshot_samples_per_epoch = get_as<std::int64_t>(ev, path);
        } else {
          unknown_key(path);
        }
      }
    } else {
      unknown_key(key);
    }
  }
  return rc;
}

/// Full validation; runs before any command does work.
inline void validate(const RunConfig & rc)
{
  if (rc.data.source != "generator" && rc.data.source != "cache") {
    throw ConfigError("data.source must be 'generator' or 'cache'");
  }
  if (rc.data.source == "cache" && rc.data.cache.empty()) {
    throw ConfigError("data.cache is required when data.source is 'cache'");
  }
  rc.seeded_generator().validate();
  if (rc.data.pose_keypoints < 0) {
    throw ConfigError("data.pose_keypoints must be >= 0");
  }
  if (rc.data.benchmark != "cross_setup") {
    setup_by_name(rc.data.benchmark);
  }
  for (const auto & s : rc.data.ingest_setups) {
    setup_by_name(s);
  }
  if (!(rc.data.val_fraction >= 0.0 && rc.data.val_fraction < 1.0) ||
      !(rc.data.test_fraction >= 0.0 && rc.data.test_fraction < 1.0) ||
      rc.data.val_fraction + rc.data.test_fraction >= 1.0) {
    throw ConfigError("data.val_fraction and data.test_fraction must lie in [0, 1) and sum below 1");
  }
  rc.seeded_model().validate();
  rc.seeded_plan().validate();
  for (const auto & [name, w] : rc.mixture) {
    if (!(w > 0.0)) {
      throw ConfigError("train.mixture['" + name + "'] must be positive");
    }
  }
  if (rc.eval.split != "train" && rc.eval.split != "val" && rc.eval.split != "test") {
    throw ConfigError("eval.split must be train, val or test");
  }
  if (rc.eval.seeds.empty()) {
    throw ConfigError("eval.seeds must not be empty");
  }
  for (double r : rc.eval.mask_ratios) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError("eval.mask_ratios entries must lie in [0, 1]");
    }
  }
  for (auto n : rc.eval.fewshot_n) {
    if (n < 1) {
      throw ConfigError("eval.fewshot_n entries must be >= 1");
    }
  }
  if (rc.eval.fewshot_epochs < 0 || rc.eval.fewshot_samples_per_epoch < 0) {
    throw ConfigError("eval.fewshot_epochs and eval.fewshot_samples_per_epoch must be >= 0");
  }
}

/// Resolved form with every default filled in.
inline json to_json(const RunConfig & rc)
{
  json mixture = json::object();
  for (const auto & [k, w] : rc.mixture) {
    mixture[k] = w;
  }
  return {
    {"seed", rc.seed},
    {"output_dir", rc.output_dir},
    {"data",
     {
       {"source", rc.data.source},
       {"generator", detail::generator_json(rc.data.generator)},
       {"pose_keypoints", rc.data.pose_keypoints},
       {"cache", rc.data.cache},
       {"scenes", rc.data.scenes},
       {"benchmark", rc.data.benchmark},
       {"ingest_setups", rc.data.ingest_setups},
       {"n_test_scenes", rc.data.n_test_scenes},
       {"val_fraction", rc.data.val_fraction},
       {"test_fraction", rc.data.test_fraction},
     }},
    {"model", rc.model.to_json()},
    {"train",
     {
       {"epochs", rc.train.epochs},
       {"batch_size", rc.train.batch_size},
       {"phase", detail::phase_name(rc.train.phase)},
       {"lr", rc.train.lr},
       {"lr_decay", rc.train.lr_decay},
       {"lr_decay_fraction", rc.train.lr_decay_fraction},
       {"samples_per_epoch", rc.train.samples_per_epoch},
       {"eval_every", rc.train.eval_every},
       {"mixture", mixture},
     }},
    {"eval",
     {
       {"split", rc.eval.split},
       {"checkpoint", rc.eval.checkpoint},
       {"seeds", rc.eval.seeds},
       {"mask_ratios", rc.eval.mask_ratios},
       {"fewshot_n", rc.eval.fewshot_n},
       {"fewshot_epochs", rc.eval.fewshot_epochs},
       {"fewshot_samples_per_epoch", rc.eval.fewshot_samples_per_epoch},
     }},
  };
}

inline RunConfig load_run_config(const std::filesystem::path & path)
{
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error & e) {
    throw ConfigError(path.string() + ": not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace omnitraj::cli

#endif  // OMNITRAJ__CLI__RUN_CONFIG_HPP_
