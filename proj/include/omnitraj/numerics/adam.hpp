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

#ifndef OMNITRAJ__NUMERICS__ADAM_HPP_
#define OMNITRAJ__NUMERICS__ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "omnitraj/numerics/tape.hpp"

namespace omnitraj::numerics
{

/// Step learning-rate schedule: initial rate, multiplied by decay_factor once the
/// zero-based epoch reaches decay_fraction * total_epochs.
struct LrSchedule
{
  double initial = 1e-4;
  double decay_factor = 0.1;
  double decay_fraction = 0.8;
  std::int64_t total_epochs = 30;

  double at_epoch(std::int64_t epoch) const
  {
    const auto boundary = static_cast<double>(total_epochs) * decay_fraction;
    return static_cast<double>(epoch) >= boundary - 1e-9 ? initial * decay_factor : initial;
  }
};

struct AdamState
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  LrSchedule schedule;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

/// One Adam update of every parameter in `params` using `grads` (keyed by parameter name).
inline void adam_step(
  ParamStore & params, const std::map<std::string, Tensor> & grads, AdamState & state,
  std::int64_t epoch)
{
  const double lr = state.schedule.at_epoch(epoch);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto & [name, value] : params.all()) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw ContractError("adam_step: no gradient for parameter '" + name + "'");
    }
    const Tensor & g = git->second;
    if (g.shape() != value.shape()) {
      throw ShapeError(
        "adam_step: gradient shape " + shape_str(g.shape()) + " does not match parameter '" +
        name + "' " + shape_str(value.shape()));
    }
    auto [mit, m_new] = state.first_moment.try_emplace(name, Tensor(value.shape()));
    auto [vit, v_new] = state.second_moment.try_emplace(name, Tensor(value.shape()));
    Tensor & m = mit->second;
    Tensor & v = vit->second;
    for (std::int64_t i = 0; i < value.size(); ++i) {
      const double gi = g[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__ADAM_HPP_
