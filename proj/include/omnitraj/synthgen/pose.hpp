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

#ifndef OMNITRAJ__SYNTHGEN__POSE_HPP_
#define OMNITRAJ__SYNTHGEN__POSE_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "omnitraj/synthgen/generator.hpp"

namespace omnitraj::synthgen
{

/// Static skeleton template, facing +x, with zero centroid. [e_keypoints x 3]
inline std::vector<double> skeleton_template(std::int64_t e_keypoints, std::uint64_t seed)
{
  std::mt19937_64 rng(mix_seed(seed ^ 0x5ce1e70aULL));
  std::vector<double> pts(static_cast<std::size_t>(e_keypoints * 3));
  for (std::int64_t k = 0; k < e_keypoints; ++k) {
    pts[k * 3 + 0] = detail::uniform(rng, -0.15, 0.15);
    pts[k * 3 + 1] = detail::uniform(rng, -0.25, 0.25);
    pts[k * 3 + 2] = detail::uniform(rng, 0.0, 1.8);
  }
  for (int c = 0; c < 3; ++c) {
    double m = 0.0;
    for (std::int64_t k = 0; k < e_keypoints; ++k) {
      m += pts[k * 3 + c];
    }
    m /= static_cast<double>(e_keypoints);
    for (std::int64_t k = 0; k < e_keypoints; ++k) {
      pts[k * 3 + c] -= m;
    }
  }
  return pts;
}

/**
 * Adds a 3D pose cue to every agent: the template rotated to the heading of motion plus a
 * forward/backward gait swing whose phase follows distance walked and whose amplitude grows
 * with speed. Offsets are relative to the trajectory point and keep a zero centroid.
 */
inline SceneRecord attach_synthetic_pose(
  SceneRecord scene, std::int64_t e_keypoints, std::uint64_t seed)
{
  constexpr double pi = 3.14159265358979323846;
  constexpr double stride_length = 1.4;
  constexpr double max_swing = 0.08;
  const auto tmpl = skeleton_template(e_keypoints, seed);
  std::mt19937_64 rng(mix_seed(seed ^ 0x9a17ULL));
  std::vector<double> swing_weight(static_cast<std::size_t>(e_keypoints));
  std::vector<double> swing_phase(static_cast<std::size_t>(e_keypoints));
  for (std::int64_t k = 0; k < e_keypoints; ++k) {
    swing_weight[k] = detail::uniform(rng, -1.0, 1.0);
    swing_phase[k] = detail::uniform(rng, 0.0, 2.0 * pi);
  }

  for (auto & agent : scene.agents) {
    const std::size_t n = agent.frames.size();
    CueArray pose{{e_keypoints, 3}, std::vector<double>(n * static_cast<std::size_t>(e_keypoints) * 3, 0.0)};
    double walked = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!agent.present[i]) {
        continue;
      }
      // heading from the neighbouring present frame
      double dx = 0.0;
      double dy = 0.0;
      double dt_frames = 1.0;
      if (i + 1 < n && agent.present[i + 1]) {
        dx = agent.xy_at(i + 1)[0] - agent.xy_at(i)[0];
        dy = agent.xy_at(i + 1)[1] - agent.xy_at(i)[1];
        dt_frames = static_cast<double>(agent.frames[i + 1] - agent.frames[i]);
      } else if (i > 0 && agent.present[i - 1]) {
        dx = agent.xy_at(i)[0] - agent.xy_at(i - 1)[0];
        dy = agent.xy_at(i)[1] - agent.xy_at(i - 1)[1];
        dt_frames = static_cast<double>(agent.frames[i] - agent.frames[i - 1]);
      }
      const double step = std::hypot(dx, dy);
      const double speed = step * scene.base_fps / dt_frames;
      const double heading = speed > 1e-6 ? std::atan2(dy, dx) : 0.0;
      const double c = std::cos(heading);
      const double s = std::sin(heading);
      const double amp = max_swing * std::min(speed, 1.0);
      const double phase = 2.0 * pi * walked / stride_length;

      std::vector<double> fwd(static_cast<std::size_t>(e_keypoints));
      double mean_fwd = 0.0;
      for (std::int64_t k = 0; k < e_keypoints; ++k) {
        fwd[k] = amp * swing_weight[k] * (std::sin(phase + swing_phase[k]) - std::sin(swing_phase[k]));
        mean_fwd += fwd[k];
      }
      mean_fwd /= static_cast<double>(e_keypoints);
      double * dst = pose.frame(i);
      for (std::int64_t k = 0; k < e_keypoints; ++k) {
        const double lx = tmpl[k * 3 + 0] + (fwd[k] - mean_fwd);
        const double ly = tmpl[k * 3 + 1];
        dst[k * 3 + 0] = c * lx - s * ly;
        dst[k * 3 + 1] = s * lx + c * ly;
        dst[k * 3 + 2] = tmpl[k * 3 + 2];
      }
      if (i + 1 < n && agent.present[i + 1]) {
        walked += step;
      }
    }
    agent.cues[CueKind::P3] = std::move(pose);
  }
  return scene;
}

}  // namespace omnitraj::synthgen

#endif  // OMNITRAJ__SYNTHGEN__POSE_HPP_
