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

#ifndef OMNITRAJ__TRAIN__TRAINER_HPP_
#define OMNITRAJ__TRAIN__TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "omnitraj/numerics/adam.hpp"
#include "omnitraj/train/loss.hpp"
#include "omnitraj/train/metrics.hpp"
#include "omnitraj/util/binio.hpp"
#include "omnitraj/util/hash.hpp"
#include "omnitraj/util/parallel.hpp"

namespace omnitraj::train
{

using model::ModelConfig;
using model::Phase;
using numerics::ParamStore;

class TrainingError : public Error
{
public:
  using Error::Error;
};

/// A named pool of samples drawn with relative weight.
struct Source
{
  std::string name;
  std::vector<const SampleWindow *> samples;
  double weight = 1.0;
};

struct TrainPlan
{
  std::int64_t epochs = 30;
  std::int64_t batch_size = 32;
  Phase phase = Phase::pretrain;
  std::uint64_t seed = 0;
  double lr = 1e-4;
  double lr_decay = 0.1;
  double lr_decay_fraction = 0.8;
  /// 0 means one pass worth of draws: the summed size of all sources.
  std::int64_t samples_per_epoch = 0;
  /// Validation loss is logged every eval_every epochs and after the last one.
  std::int64_t eval_every = 1;

  void validate() const
  {
    if (epochs < 0) {
      throw ConfigError("train.epochs must be >= 0");
    }
    if (batch_size < 1) {
      throw ConfigError("train.batch_size must be >= 1");
    }
    if (phase == Phase::eval) {
      throw ConfigError("train.phase must be pretrain or finetune");
    }
    if (!(lr > 0.0)) {
      throw ConfigError("train.lr must be positive");
    }
    if (samples_per_epoch < 0 || eval_every < 1) {
      throw ConfigError("train.samples_per_epoch must be >= 0 and train.eval_every >= 1");
    }
  }
};

struct LossPoint
{
  std::int64_t epoch = 0;
  std::string split;
  double loss = 0.0;
};

inline std::string loss_curve_csv(const std::vector<LossPoint> & curve)
{
  std::ostringstream os;
  os << "epoch,split,loss\n" << std::setprecision(17);
  for (const auto & p : curve) {
    os << p.epoch << ',' << p.split << ',' << p.loss << '\n';
  }
  return os.str();
}

/// Everything needed to continue training bit-exactly after an interruption.
struct TrainState
{
  ParamStore weights;
  numerics::AdamState adam;
  std::int64_t epochs_done = 0;
  std::vector<LossPoint> curve;
};

namespace detail
{

inline constexpr char kStateMagic[4] = {'O', 'T', 'T', 'S'};
inline constexpr std::uint32_t kStateVersion = 1;

inline void put_store(std::string & buf, const std::map<std::string, numerics::Tensor> & store)
{
  binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(store.size()));
  for (const auto & [name, t] : store) {
    binio::put_string(buf, name);
    binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) {
      binio::put<std::int64_t>(buf, d);
    }
    for (double v : t.values()) {
      binio::put<double>(buf, v);
    }
  }
}

inline std::map<std::string, numerics::Tensor> get_store(binio::Reader & r)
{
  std::map<std::string, numerics::Tensor> out;
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    numerics::Shape shape = r.get_array<std::int64_t>(rank);
    auto values = r.get_array<double>(static_cast<std::size_t>(numerics::numel(shape)));
    out.emplace(std::move(name), numerics::Tensor(shape, std::move(values)));
  }
  return out;
}

}  // namespace detail

/// Full-precision training state encoding (weights, optimizer moments, curve).
inline std::string encode_state(const TrainState & s)
{
  std::string buf(detail::kStateMagic, 4);
  binio::put<std::uint32_t>(buf, detail::kStateVersion);
  binio::put<std::int64_t>(buf, s.epochs_done);
  binio::put<std::int64_t>(buf, s.adam.step);
  detail::put_store(buf, s.weights.all());
  detail::put_store(buf, s.adam.first_moment);
  detail::put_store(buf, s.adam.second_moment);
  binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.curve.size()));
  for (const auto & p : s.curve) {
    binio::put<std::int64_t>(buf, p.epoch);
    binio::put_string(buf, p.split);
    binio::put<double>(buf, p.loss);
  }
  return buf;
}

inline TrainState decode_state(const std::string & bytes, const std::string & what = "train state")
{
  binio::Reader r(bytes.data(), bytes.size(), what);
  if (r.get_bytes(4) != std::string(detail::kStateMagic, 4)) {
    throw FormatError(what + ": bad magic");
  }
  if (r.get<std::uint32_t>() != detail::kStateVersion) {
    throw FormatError(what + ": incompatible version");
  }
  TrainState s;
  s.epochs_done = r.get<std::int64_t>();
  s.adam.step = r.get<std::int64_t>();
  for (auto & [name, t] : detail::get_store(r)) {
    s.weights.set(name, std::move(t));
  }
  s.adam.first_moment = detail::get_store(r);
  s.adam.second_moment = detail::get_store(r);
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    LossPoint p;
    p.epoch = r.get<std::int64_t>();
    p.split = r.get_string();
    p.loss = r.get<double>();
    s.curve.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw FormatError(what + ": trailing bytes");
  }
  return s;
}

/// Sample order for one epoch: per-source draw counts proportional to weight, each source
/// cycled through its own shuffle, then the combined list shuffled.
inline std::vector<const SampleWindow *> epoch_order(
  const std::vector<Source> & mixture, std::int64_t samples_per_epoch, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  double total_weight = 0.0;
  std::int64_t total_size = 0;
  for (const auto & s : mixture) {
    total_weight += s.weight;
    total_size += static_cast<std::int64_t>(s.samples.size());
  }
  const auto n = samples_per_epoch > 0 ? samples_per_epoch : total_size;
  std::vector<const SampleWindow *> order;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    const auto & src = mixture[i];
    const auto count = i + 1 == mixture.size()
                         ? n - assigned
                         : static_cast<std::int64_t>(std::llround(static_cast<double>(n) * src.weight / total_weight));
    assigned += count;
    std::vector<const SampleWindow *> pool = src.samples;
    for (std::int64_t drawn = 0; drawn < count;) {
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t j = 0; j < pool.size() && drawn < count; ++j, ++drawn) {
        order.push_back(pool[j]);
      }
    }
  }
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// Consecutive chunks of at most `size` samples.
inline std::vector<std::vector<const SampleWindow *>> chunks(
  const std::vector<const SampleWindow *> & samples, std::int64_t size)
{
  std::vector<std::vector<const SampleWindow *>> out;
  for (std::size_t first = 0; first < samples.size(); first += static_cast<std::size_t>(size)) {
    const auto last = std::min(samples.size(), first + static_cast<std::size_t>(size));
    out.emplace_back(samples.begin() + static_cast<std::ptrdiff_t>(first), samples.begin() + static_cast<std::ptrdiff_t>(last));
  }
  return out;
}

/// Mean eval-phase WTA loss over `samples`. Chunks run in parallel; the sum is taken in
/// chunk order so the result does not depend on the worker count.
inline double evaluate_loss(
  const ParamStore & weights, const ModelConfig & cfg, const std::vector<const SampleWindow *> & samples,
  std::int64_t batch_size = 64)
{
  if (samples.empty()) {
    return 0.0;
  }
  const auto parts = chunks(samples, batch_size);
  std::vector<double> sums(parts.size());
  parallel_for(parts.size(), [&](std::size_t i) {
    numerics::Tape tape;
    numerics::ParamBinding p(tape, weights);
    std::mt19937_64 rng(0);
    const Var pos = model::forward(p, cfg, parts[i], Phase::eval, rng);
    sums[i] = wta_l2_loss(pos, parts[i], cfg.n_modes).value()[0] * static_cast<double>(parts[i].size());
  });
  double acc = 0.0;
  for (double v : sums) {
    acc += v;
  }
  return acc / static_cast<double>(samples.size());
}

/// Predictions for many samples, chunked and run in parallel.
inline std::vector<Prediction> predict_all(
  const ParamStore & weights, const ModelConfig & cfg, const std::vector<const SampleWindow *> & samples,
  std::int64_t batch_size = 64)
{
  const auto parts = chunks(samples, batch_size);
  std::vector<std::vector<Prediction>> results(parts.size());
  parallel_for(parts.size(), [&](std::size_t i) { results[i] = model::predict_batch(weights, cfg, parts[i]); });
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (auto & r : results) {
    for (auto & pr : r) {
      out.push_back(std::move(pr));
    }
  }
  return out;
}

/// Called after every completed epoch with the state so far.
using EpochHook = std::function<void(const TrainState &)>;

/**
 * Adam training on a weighted mixture. Resumes from `state` (epochs_done > 0) or starts
 * from its weights. Per-epoch order and per-batch masking draws come from seeds derived
 * from plan.seed, so a resumed run matches an uninterrupted one.
 */
inline TrainState train(
  const TrainPlan & plan, const ModelConfig & cfg, const std::vector<Source> & mixture,
  const std::vector<const SampleWindow *> & val, TrainState state, const EpochHook & hook = {})
{
  plan.validate();
  cfg.validate();
  std::int64_t total = 0;
  for (const auto & s : mixture) {
    if (!(s.weight > 0.0)) {
      throw ConfigError("train: mixture weight for '" + s.name + "' must be positive");
    }
    total += static_cast<std::int64_t>(s.samples.size());
    if (s.samples.empty()) {
      throw ConfigError("train: mixture source '" + s.name + "' is empty");
    }
  }
  if (total == 0) {
    throw ConfigError("train: empty mixture");
  }
  state.adam.schedule = numerics::LrSchedule{plan.lr, plan.lr_decay, plan.lr_decay_fraction, plan.epochs};

  for (std::int64_t epoch = state.epochs_done; epoch < plan.epochs; ++epoch) {
    const auto order = epoch_order(mixture, plan.samples_per_epoch, derive_seed(derive_seed(plan.seed, "epoch"), static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    std::int64_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(plan.batch_size)) {
      const auto last = std::min(order.size(), first + static_cast<std::size_t>(plan.batch_size));
      std::vector<const SampleWindow *> batch(order.begin() + first, order.begin() + last);
      numerics::Tape tape;
      numerics::ParamBinding p(tape, state.weights);
      std::mt19937_64 rng(derive_seed(plan.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batches)));
      const Var pos = model::forward(p, cfg, batch, plan.phase, rng);
      const Var loss = wta_l2_loss(pos, batch, cfg.n_modes);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) {
        throw TrainingError(
          "non-finite loss at epoch " + std::to_string(epoch) + " batch " + std::to_string(batches) +
          " (first scene " + batch.front()->scene_id + ")");
      }
      tape.backward(loss);
      numerics::adam_step(state.weights, p.gradients(), state.adam, epoch);
      loss_sum += lv;
      ++batches;
    }
    state.curve.push_back({epoch, "train", loss_sum / static_cast<double>(std::max<std::int64_t>(1, batches))});
    if (!val.empty() && ((epoch + 1) % plan.eval_every == 0 || epoch + 1 == plan.epochs)) {
      state.curve.push_back({epoch, "val", evaluate_loss(state.weights, cfg, val)});
    }
    state.epochs_done = epoch + 1;
    if (hook) {
      hook(state);
    }
  }
  return state;
}

inline TrainState train(
  const TrainPlan & plan, const ModelConfig & cfg, const std::vector<Source> & mixture,
  const std::vector<const SampleWindow *> & val = {})
{
  TrainState s;
  s.weights = model::init_weights(cfg);
  return train(plan, cfg, mixture, val, std::move(s));
}

}  // namespace omnitraj::train

#endif  // OMNITRAJ__TRAIN__TRAINER_HPP_
