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

#ifndef OMNITRAJ__SYNTHGEN__BENCHMARK_HPP_
#define OMNITRAJ__SYNTHGEN__BENCHMARK_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "omnitraj/synthgen/generator.hpp"
#include "omnitraj/trajstore/resample.hpp"
#include "omnitraj/trajstore/windows.hpp"

namespace omnitraj::synthgen
{

using trajstore::SampleWindow;

struct BenchmarkSetup
{
  std::string name;
  double fps = 0.0;
  std::int64_t t_obs = 0;
  std::int64_t t_pred = 0;
};

/// 10 observed -> 20 predicted frames at 5 fps.
inline BenchmarkSetup setup1() { return {"setup1", 5.0, 10, 20}; }
/// 4 observed -> 8 predicted frames at 2.5 fps.
inline BenchmarkSetup setup2() { return {"setup2", 2.5, 4, 8}; }
/// 3 observed -> 3 predicted frames at 1 fps; never seen in training.
inline BenchmarkSetup setup3() { return {"setup3", 1.0, 3, 3}; }

/// Resamples each scene to the setup's rate and cuts normalized windows. stride 0 means
/// non-overlapping windows (t_obs + t_pred).
inline std::vector<SampleWindow> build_windows(
  const std::vector<SceneRecord> & scenes, const BenchmarkSetup & setup, std::int64_t stride = 0)
{
  if (stride <= 0) {
    stride = setup.t_obs + setup.t_pred;
  }
  std::vector<SampleWindow> out;
  for (const auto & scene : scenes) {
    const auto rs = trajstore::resample(scene, setup.fps);
    for (auto & w : trajstore::extract_windows(rs, setup.t_obs, setup.t_pred, stride)) {
      out.push_back(trajstore::normalize(std::move(w)));
    }
  }
  return out;
}

struct CrossSetupBenchmark
{
  std::vector<SampleWindow> train;  // Setup 1 and Setup 2 windows
  std::vector<SampleWindow> test;   // Setup 3 windows
  std::vector<std::string> train_scene_ids;
  std::vector<std::string> test_scene_ids;
};

/// Cross-setup split over already generated scenes (see the GenSpec overload).
inline CrossSetupBenchmark build_cross_setup_benchmark(
  const std::vector<SceneRecord> & scenes, std::int64_t n_test_scenes)
{
  const auto n_scenes = static_cast<std::int64_t>(scenes.size());
  if (n_test_scenes < 1 || n_test_scenes >= n_scenes) {
    throw ConfigError("cross-setup benchmark needs more scenes than test scenes");
  }
  const std::int64_t n_train = n_scenes - n_test_scenes;
  std::vector<SceneRecord> s1;
  std::vector<SceneRecord> s2;
  std::vector<SceneRecord> s3;
  CrossSetupBenchmark out;
  for (std::int64_t i = 0; i < n_scenes; ++i) {
    const auto & sc = scenes[static_cast<std::size_t>(i)];
    if (i >= n_train) {
      s3.push_back(sc);
      out.test_scene_ids.push_back(sc.scene_id);
    } else {
      (i % 2 == 0 ? s1 : s2).push_back(sc);
      out.train_scene_ids.push_back(sc.scene_id);
    }
  }
  out.train = build_windows(s1, setup1());
  auto w2 = build_windows(s2, setup2());
  out.train.insert(out.train.end(), w2.begin(), w2.end());
  out.test = build_windows(s3, setup3());
  return out;
}

/**
 * Zero-shot cross-setup split. The last n_test_scenes scenes form the Setup 3 test split;
 * the remaining scenes alternate between Setup 1 (even position) and Setup 2 (odd).
 */
inline CrossSetupBenchmark build_cross_setup_benchmark(
  const GenSpec & spec, std::int64_t n_test_scenes = -1)
{
  spec.validate();
  if (n_test_scenes < 0) {
    n_test_scenes = std::max<std::int64_t>(1, spec.n_scenes / 7);
  }
  if (n_test_scenes >= spec.n_scenes) {
    throw ConfigError("cross-setup benchmark needs more scenes than test scenes");
  }
  // fail early on a base rate that cannot be decimated to every setup
  for (const auto & s : {setup1(), setup2(), setup3()}) {
    trajstore::decimation_factor(spec.base_fps, s.fps);
  }
  return build_cross_setup_benchmark(generate(spec), n_test_scenes);
}

}  // namespace omnitraj::synthgen

#endif  // OMNITRAJ__SYNTHGEN__BENCHMARK_HPP_
