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

#ifndef OMNITRAJ__TRAIN__PROTOCOLS_HPP_
#define OMNITRAJ__TRAIN__PROTOCOLS_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "omnitraj/synthgen/benchmark.hpp"
#include "omnitraj/train/trainer.hpp"

namespace omnitraj::train
{

using Samples = std::vector<const SampleWindow *>;

template <typename Container>
Samples pointers(const Container & samples)
{
  Samples out;
  out.reserve(samples.size());
  for (const auto & s : samples) {
    out.push_back(&s);
  }
  return out;
}

/// Metrics of fixed weights on `test`; never touches the weights.
inline Metrics zero_shot_eval(const ParamStore & weights, const ModelConfig & cfg, const Samples & test)
{
  return compute_metrics(predict_all(weights, cfg, test), test);
}

/// Per-seed outcome of one table row.
struct TableEntry
{
  std::string row;
  std::uint64_t seed = 0;
  Metrics metrics;
};

struct RowSummary
{
  std::string row;
  double median_min_ade_k = 0.0;
  double min_min_ade_k = 0.0;
  double max_min_ade_k = 0.0;
  double median_min_fde_k = 0.0;
  double median_ade = 0.0;
  double median_fde = 0.0;
  std::int64_t seeds = 0;
};

inline double median(std::vector<double> v)
{
  if (v.empty()) {
    throw ContractError("median of an empty set");
  }
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Groups entries by row label, keeping first-appearance order.
inline std::vector<RowSummary> summarize(const std::vector<TableEntry> & entries)
{
  std::vector<std::string> order;
  for (const auto & e : entries) {
    if (std::find(order.begin(), order.end(), e.row) == order.end()) {
      order.push_back(e.row);
    }
  }
  std::vector<RowSummary> out;
  for (const auto & row : order) {
    std::vector<double> mink, minf, a, f;
    for (const auto & e : entries) {
      if (e.row == row) {
        mink.push_back(e.metrics.min_ade_k);
        minf.push_back(e.metrics.min_fde_k);
        a.push_back(e.metrics.ade);
        f.push_back(e.metrics.fde);
      }
    }
    RowSummary s;
    s.row = row;
    s.median_min_ade_k = median(mink);
    s.min_min_ade_k = *std::min_element(mink.begin(), mink.end());
    s.max_min_ade_k = *std::max_element(mink.begin(), mink.end());
    s.median_min_fde_k = median(minf);
    s.median_ade = median(a);
    s.median_fde = median(f);
    s.seeds = static_cast<std::int64_t>(mink.size());
    out.push_back(s);
  }
  return out;
}

inline const RowSummary & find_row(const std::vector<RowSummary> & rows, const std::string & label)
{
  for (const auto & r : rows) {
    if (r.row == label) {
      return r;
    }
  }
  throw ContractError("no table row '" + label + "'");
}

inline MetricsReport to_report(
  const std::vector<TableEntry> & entries, const std::string & protocol, const std::string & setup,
  const std::string & digest = "")
{
  MetricsReport rep;
  rep.config_digest = digest;
  for (const auto & e : entries) {
    rep.rows.push_back({protocol, setup, e.row, e.seed, e.metrics});
  }
  return rep;
}

/// Trains from fresh weights with cfg.seed and plan.seed both set to `seed`.
inline ParamStore train_from_scratch(
  ModelConfig cfg, TrainPlan plan, const std::vector<Source> & mixture, std::uint64_t seed)
{
  cfg.seed = seed;
  plan.seed = seed;
  return train(plan, cfg, mixture).weights;
}

struct FpsAblationInputs
{
  Samples setup1;
  Samples setup2;
  Samples setup3;
};

inline FpsAblationInputs split_benchmark(const synthgen::CrossSetupBenchmark & bench)
{
  FpsAblationInputs in;
  for (const auto & s : bench.train) {
    (s.t_obs == synthgen::setup1().t_obs ? in.setup1 : in.setup2).push_back(&s);
  }
  in.setup3 = pointers(bench.test);
  return in;
}

/// FPS-encoder variants in table order.
inline std::vector<model::FpsVariant> fps_table_variants()
{
  using model::FpsVariant;
  return {FpsVariant::none, FpsVariant::film, FpsVariant::codebook, FpsVariant::mlp_token, FpsVariant::mlp_sum};
}

/// Each variant trained on Setup 1 and 2 with identical seeds and budget, scored on Setup 3.
inline std::vector<TableEntry> run_ablation_fps(
  const FpsAblationInputs & in, const ModelConfig & cfg_base, const TrainPlan & plan,
  const std::vector<std::uint64_t> & seeds, const std::vector<model::FpsVariant> & variants = fps_table_variants())
{
  const std::vector<Source> mixture{{"setup1", in.setup1, 1.0}, {"setup2", in.setup2, 1.0}};
  std::vector<TableEntry> out;
  for (auto v : variants) {
    auto cfg = cfg_base;
    cfg.fps_variant = v;
    for (auto seed : seeds) {
      auto c = cfg;
      c.seed = seed;
      const auto w = train_from_scratch(cfg, plan, mixture, seed);
      out.push_back({model::fps_variant_name(v), seed, zero_shot_eval(w, c, in.setup3)});
    }
  }
  return out;
}

struct ModuleToggle
{
  std::string label;
  bool hie = false;
  bool decoder = false;
  bool ca = false;
};

/// Row grid of the decoupled-module table.
inline std::vector<ModuleToggle> decoupled_rows()
{
  return {
    {"backbone", false, false, false},
    {"hie", true, false, false},
    {"hie+decoder", true, true, false},
    {"decoder+ca", false, true, true},
    {"all", true, true, true},
  };
}

inline std::vector<TableEntry> run_ablation_decoupled(
  const Samples & train_set, const Samples & test_set, const ModelConfig & cfg_base, const TrainPlan & plan,
  const std::vector<std::uint64_t> & seeds)
{
  const std::vector<Source> mixture{{"train", train_set, 1.0}};
  std::vector<TableEntry> out;
  for (const auto & row : decoupled_rows()) {
    auto cfg = cfg_base;
    cfg.use_hie = row.hie;
    cfg.use_decoder = row.decoder;
    cfg.use_ca = row.ca;
    for (auto seed : seeds) {
      auto c = cfg;
      c.seed = seed;
      const auto w = train_from_scratch(cfg, plan, mixture, seed);
      out.push_back({row.label, seed, zero_shot_eval(w, c, test_set)});
    }
  }
  return out;
}

inline std::string ratio_label(double r)
{
  return "temporal=" + std::to_string(static_cast<int>(std::lround(r * 100.0))) + "%";
}

/// One pretraining run per temporal masking ratio; other ratios come from cfg_base.
inline std::vector<TableEntry> run_ablation_mask_ratio(
  const Samples & train_set, const Samples & test_set, const ModelConfig & cfg_base, TrainPlan plan,
  const std::vector<std::uint64_t> & seeds, const std::vector<double> & ratios = {0.10, 0.25, 0.50, 0.75, 0.90})
{
  plan.phase = Phase::pretrain;
  const std::vector<Source> mixture{{"train", train_set, 1.0}};
  std::vector<TableEntry> out;
  for (double r : ratios) {
    auto cfg = cfg_base;
    cfg.mask_ratios.temporal = r;
    for (auto seed : seeds) {
      auto c = cfg;
      c.seed = seed;
      const auto w = train_from_scratch(cfg, plan, mixture, seed);
      out.push_back({ratio_label(r), seed, zero_shot_eval(w, c, test_set)});
    }
  }
  return out;
}

/// Copy of `s` with every observed frame before the last two marked missing.
inline SampleWindow keep_last_two(const SampleWindow & s)
{
  SampleWindow out = s;
  for (std::int64_t a = 0; a < s.n_agents; ++a) {
    for (std::int64_t t = 0; t + 2 < s.t_obs; ++t) {
      out.obs_valid[static_cast<std::size_t>(a * s.t_obs + t)] = 0;
    }
  }
  return out;
}

struct TwoFrameResult
{
  Metrics full;
  Metrics two_frame;
  double ade_degradation_pct = 0.0;      // on min_ade_k
  double fde_degradation_pct = 0.0;      // on min_fde_k
};

inline TwoFrameResult two_frame_eval(const ParamStore & weights, const ModelConfig & cfg, const Samples & test)
{
  for (const auto * s : test) {
    if (s->t_obs < 2) {
      throw ContractError("two_frame_eval: sample '" + s->scene_id + "' has fewer than two observed frames");
    }
  }
  std::vector<SampleWindow> cut;
  cut.reserve(test.size());
  for (const auto * s : test) {
    cut.push_back(keep_last_two(*s));
  }
  TwoFrameResult r;
  r.full = zero_shot_eval(weights, cfg, test);
  r.two_frame = zero_shot_eval(weights, cfg, pointers(cut));
  r.ade_degradation_pct = 100.0 * (r.two_frame.min_ade_k - r.full.min_ade_k) / r.full.min_ade_k;
  r.fde_degradation_pct = 100.0 * (r.two_frame.min_fde_k - r.full.min_fde_k) / r.full.min_fde_k;
  return r;
}

/// Deterministic n-sample subset of `pool` under `seed`.
inline Samples few_shot_subset(const Samples & pool, std::int64_t n, std::uint64_t seed)
{
  if (n < 1 || n > static_cast<std::int64_t>(pool.size())) {
    throw ConfigError(
      "few-shot: n = " + std::to_string(n) + " outside [1, " + std::to_string(pool.size()) + "]");
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "fewshot"));
  std::shuffle(idx.begin(), idx.end(), rng);
  Samples out;
  for (std::int64_t i = 0; i < n; ++i) {
    out.push_back(pool[idx[static_cast<std::size_t>(i)]]);
  }
  return out;
}

struct FewShotPoint
{
  std::string init;  // "pretrained" or "scratch"
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
};

/// Fine-tunes all weights from `init` on n target samples for every n; scores on target_test.
inline std::vector<FewShotPoint> few_shot_finetune(
  const ParamStore & init, const std::string & init_label, const ModelConfig & cfg, const Samples & target_train,
  const Samples & target_test, const std::vector<std::int64_t> & ns, TrainPlan plan,
  const std::vector<std::uint64_t> & seeds)
{
  plan.phase = Phase::finetune;
  for (auto n : ns) {
    if (n < 1 || n > static_cast<std::int64_t>(target_train.size())) {
      throw ConfigError(
        "few-shot: n = " + std::to_string(n) + " exceeds the target split of " +
        std::to_string(target_train.size()));
    }
  }
  std::vector<FewShotPoint> out;
  for (auto seed : seeds) {
    for (auto n : ns) {
      const auto subset = few_shot_subset(target_train, n, seed);
      TrainPlan p = plan;
      p.seed = seed;
      TrainState st;
      st.weights = init;
      st = train(p, cfg, {{"target", subset, 1.0}}, {}, std::move(st));
      out.push_back({init_label, n, seed, zero_shot_eval(st.weights, cfg, target_test)});
    }
  }
  return out;
}

}  // namespace omnitraj::train

#endif  // OMNITRAJ__TRAIN__PROTOCOLS_HPP_
