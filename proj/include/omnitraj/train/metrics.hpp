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

#ifndef OMNITRAJ__TRAIN__METRICS_HPP_
#define OMNITRAJ__TRAIN__METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omnitraj/model/network.hpp"

namespace omnitraj::train
{

using model::Prediction;

/// One mode's positions, [t_pred x 2] row-major.
using Path = std::vector<double>;

inline void check_same_horizon(const Path & a, const Path & b)
{
  if (a.size() != b.size() || a.size() % 2 != 0) {
    throw HorizonError(
      "metric: horizon mismatch (" + std::to_string(a.size() / 2) + " vs " + std::to_string(b.size() / 2) +
      " frames)");
  }
  if (a.empty()) {
    throw HorizonError("metric: empty horizon");
  }
}

inline double ade(const Path & pred, const Path & gt)
{
  check_same_horizon(pred, gt);
  double acc = 0.0;
  for (std::size_t t = 0; t < gt.size(); t += 2) {
    acc += std::hypot(pred[t] - gt[t], pred[t + 1] - gt[t + 1]);
  }
  return acc / static_cast<double>(gt.size() / 2);
}

inline double fde(const Path & pred, const Path & gt)
{
  check_same_horizon(pred, gt);
  const auto t = gt.size() - 2;
  return std::hypot(pred[t] - gt[t], pred[t + 1] - gt[t + 1]);
}

inline Path mode_path(const Prediction & pred, std::int64_t k)
{
  const auto n = static_cast<std::size_t>(2 * pred.t_pred);
  const auto first = pred.modes.begin() + static_cast<std::ptrdiff_t>(k) * static_cast<std::ptrdiff_t>(n);
  return Path(first, first + static_cast<std::ptrdiff_t>(n));
}

inline double min_ade_k(const Prediction & pred, const Path & gt)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < pred.n_modes; ++k) {
    best = std::min(best, ade(mode_path(pred, k), gt));
  }
  return best;
}

inline double min_fde_k(const Prediction & pred, const Path & gt)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < pred.n_modes; ++k) {
    best = std::min(best, fde(mode_path(pred, k), gt));
  }
  return best;
}

inline Path future_path(const trajstore::SampleWindow & s)
{
  return Path(s.future.begin(), s.future.end());
}

/// Averages over samples; ade/fde are taken on mode 0.
struct Metrics
{
  double ade = 0.0;
  double fde = 0.0;
  double min_ade_k = 0.0;
  double min_fde_k = 0.0;
  std::int64_t n = 0;
};

inline Metrics compute_metrics(
  const std::vector<Prediction> & preds, const std::vector<const trajstore::SampleWindow *> & samples)
{
  if (preds.size() != samples.size()) {
    throw ContractError("compute_metrics: prediction and sample counts differ");
  }
  Metrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Path gt = future_path(*samples[i]);
    const Path first = mode_path(preds[i], 0);
    m.ade += ade(first, gt);
    m.fde += fde(first, gt);
    m.min_ade_k += min_ade_k(preds[i], gt);
    m.min_fde_k += min_fde_k(preds[i], gt);
  }
  m.n = static_cast<std::int64_t>(preds.size());
  if (m.n > 0) {
    const auto n = static_cast<double>(m.n);
    m.ade /= n;
    m.fde /= n;
    m.min_ade_k /= n;
    m.min_fde_k /= n;
  }
  return m;
}

struct MetricsRow
{
  std::string protocol;
  std::string setup;
  std::string variant;
  std::uint64_t seed = 0;
  Metrics metrics;
};

/// Report rows plus the digest of the model configuration that produced them.
struct MetricsReport
{
  std::string config_digest;
  std::vector<MetricsRow> rows;

  static constexpr const char * kCsvHeader = "protocol,setup,variant,seed,ade,fde,min_ade_k,min_fde_k,n";

  std::string to_csv() const
  {
    std::ostringstream os;
    os << kCsvHeader << '\n' << std::setprecision(17);
    for (const auto & r : rows) {
      os << r.protocol << ',' << r.setup << ',' << r.variant << ',' << r.seed << ',' << r.metrics.ade << ','
         << r.metrics.fde << ',' << r.metrics.min_ade_k << ',' << r.metrics.min_fde_k << ',' << r.metrics.n
         << '\n';
    }
    return os.str();
  }

  nlohmann::json to_json() const
  {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto & r : rows) {
      rows_json.push_back({
        {"protocol", r.protocol},
        {"setup", r.setup},
        {"variant", r.variant},
        {"seed", r.seed},
        {"ade", r.metrics.ade},
        {"fde", r.metrics.fde},
        {"min_ade_k", r.metrics.min_ade_k},
        {"min_fde_k", r.metrics.min_fde_k},
        {"n", r.metrics.n},
      });
    }
    return {{"config_digest", config_digest}, {"units", "meters"}, {"rows", rows_json}};
  }
};

}  // namespace omnitraj::train

#endif  // OMNITRAJ__TRAIN__METRICS_HPP_
