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

#ifndef OMNITRAJ__TRAIN__LOSS_HPP_
#define OMNITRAJ__TRAIN__LOSS_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "omnitraj/model/network.hpp"

namespace omnitraj::train
{

using model::Prediction;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;
using trajstore::SampleWindow;

/**
 * Winner-takes-all L2: per mode, the mean squared Euclidean error over frames whose mask
 * entry is set; the loss is the smallest of those. gt is [t_pred x 2] row-major.
 */
inline double wta_l2_loss(
  const Prediction & pred, const std::vector<double> & gt, const std::vector<std::uint8_t> & horizon_mask)
{
  const auto tp = pred.t_pred;
  if (static_cast<std::int64_t>(gt.size()) != 2 * tp ||
      static_cast<std::int64_t>(horizon_mask.size()) != tp) {
    throw ShapeError("wta_l2_loss: ground truth or mask does not match the prediction horizon");
  }
  const auto valid = std::count(horizon_mask.begin(), horizon_mask.end(), std::uint8_t{1});
  if (valid == 0) {
    throw ContractError("wta_l2_loss: empty valid horizon");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < pred.n_modes; ++k) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < tp; ++t) {
      if (!horizon_mask[static_cast<std::size_t>(t)]) {
        continue;
      }
      const double dx = pred.at(k, t, 0) - gt[static_cast<std::size_t>(2 * t)];
      const double dy = pred.at(k, t, 1) - gt[static_cast<std::size_t>(2 * t + 1)];
      acc += dx * dx + dy * dy;
    }
    best = std::min(best, acc / static_cast<double>(valid));
  }
  return best;
}

/**
 * Differentiable batch form of wta_l2_loss over the raw rollout [B*K, max_t_pred, 2].
 * Each sample contributes frames [0, t_pred); the result is the batch mean.
 */
inline Var wta_l2_loss(Var positions, const std::vector<const SampleWindow *> & samples, std::int64_t n_modes)
{
  const auto & shape = positions.value().shape();
  const auto b = static_cast<std::int64_t>(samples.size());
  if (b == 0 || shape.size() != 3 || shape[0] != b * n_modes || shape[2] != 2) {
    throw ShapeError("wta_l2_loss: rollout shape " + numerics::shape_str(shape) + " does not match the batch");
  }
  const auto t_max = shape[1];
  Tensor gt(shape);
  Tensor weight(shape);
  for (std::int64_t i = 0; i < b; ++i) {
    const auto & s = *samples[static_cast<std::size_t>(i)];
    if (s.t_pred <= 0) {
      throw ContractError("wta_l2_loss: empty valid horizon");
    }
    if (s.t_pred > t_max) {
      throw HorizonError("wta_l2_loss: sample horizon exceeds the rollout");
    }
    for (std::int64_t k = 0; k < n_modes; ++k) {
      const auto base = (i * n_modes + k) * t_max * 2;
      for (std::int64_t j = 0; j < 2 * s.t_pred; ++j) {
        gt[base + j] = s.future[static_cast<std::size_t>(j)];
        weight[base + j] = 1.0 / static_cast<double>(s.t_pred);
      }
    }
  }
  Tape & tape = *positions.tape;
  const Var err = numerics::mul(
    numerics::square(numerics::sub(positions, tape.constant(std::move(gt)))), tape.constant(std::move(weight)));
  const Var per_mode = numerics::sum_last(numerics::reshape(err, {b, n_modes, t_max * 2}));
  return numerics::mean(numerics::min_last(per_mode));
}

}  // namespace omnitraj::train

#endif  // OMNITRAJ__TRAIN__LOSS_HPP_
