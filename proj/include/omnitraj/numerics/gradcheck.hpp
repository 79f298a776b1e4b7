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

#ifndef OMNITRAJ__NUMERICS__GRADCHECK_HPP_
#define OMNITRAJ__NUMERICS__GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "omnitraj/numerics/tape.hpp"

namespace omnitraj::numerics
{

/// A scalar-valued function of the parameters in a store, evaluated on a fresh tape.
using ScalarFn = std::function<Var(ParamBinding &)>;

struct GradCheckResult
{
  double max_rel_error = 0.0;
  std::int64_t coordinates_checked = 0;
  std::string worst_parameter;
  std::int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from reporting
/// roundoff as a large relative error.
inline double relative_error(double analytic, double numeric, double floor = 1e-6)
{
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Runs f once and returns (value, gradients of every stored parameter).
inline std::pair<double, std::map<std::string, Tensor>> value_and_gradients(
  const ScalarFn & f, const ParamStore & params)
{
  Tape tape;
  ParamBinding binding(tape, params);
  Var loss = f(binding);
  tape.backward(loss);
  return {loss.value().item(), binding.gradients()};
}

/**
 * Compares reverse-mode gradients of f against central differences with step eps.
 *
 * At most max_coordinates parameter coordinates are checked; when the parameters hold more,
 * a uniform sample (deterministic under seed) is drawn. f must be deterministic.
 *
 * The relative-error floor is the larger of 1e-6 and 1e5 times the roundoff resolution of the
 * difference quotient, DBL_EPSILON * max(1, |f|) / eps: a gradient that is zero analytically
 * then reports about 1e-5 rather than an arbitrarily large ratio of rounding noise.
 */
inline GradCheckResult finite_diff_check(
  const ScalarFn & f, ParamStore & params, double eps = 1e-5,
  std::int64_t max_coordinates = 2000, std::uint64_t seed = 0)
{
  const auto [f0, analytic] = value_and_gradients(f, params);
  const double floor = std::max(
    1e-6, 1e5 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0)) / eps);

  std::vector<std::pair<std::string, std::int64_t>> coords;
  for (const auto & [name, t] : params.all()) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      coords.emplace_back(name, i);
    }
  }
  if (static_cast<std::int64_t>(coords.size()) > max_coordinates) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(max_coordinates));
  }

  auto eval = [&f, &params]() {
    Tape tape;
    ParamBinding binding(tape, params);
    return f(binding).value().item();
  };

  GradCheckResult result;
  for (const auto & [name, idx] : coords) {
    Tensor & t = params.get(name);
    const double orig = t[idx];
    t[idx] = orig + eps;
    const double fp = eval();
    t[idx] = orig - eps;
    const double fm = eval();
    t[idx] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic.at(name)[idx];
    const double err = relative_error(a, numeric, floor);
    ++result.coordinates_checked;
    if (err > result.max_rel_error || result.worst_index < 0) {
      result.max_rel_error = err;
      result.worst_parameter = name;
      result.worst_index = idx;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__GRADCHECK_HPP_
