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

#ifndef OMNITRAJ__TRAJSTORE__RESAMPLE_HPP_
#define OMNITRAJ__TRAJSTORE__RESAMPLE_HPP_

#include <cmath>
#include <cstdint>

#include "omnitraj/trajstore/types.hpp"

namespace omnitraj::trajstore
{

/// Integer decimation factor base_fps / target_fps, or an error if it is not an integer >= 1.
inline std::int64_t decimation_factor(double base_fps, double target_fps)
{
  if (!(target_fps > 0.0)) {
    throw DomainError("resample: target_fps must be positive");
  }
  const double ratio = base_fps / target_fps;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * ratio) {
    throw DomainError("resample requires integer decimation");
  }
  return static_cast<std::int64_t>(k);
}

/**
 * Keeps every k-th frame of the global grid (frames whose index is a multiple of k) and
 * renumbers them index / k. Cue values are copied unchanged.
 */
inline SceneRecord resample(const SceneRecord & scene, double target_fps)
{
  const std::int64_t k = decimation_factor(scene.base_fps, target_fps);
  if (k == 1) {
    SceneRecord same = scene;
    same.base_fps = target_fps;
    return same;
  }
  SceneRecord out;
  out.scene_id = scene.scene_id;
  out.source_tag = scene.source_tag;
  out.base_fps = target_fps;
  out.agents.reserve(scene.agents.size());
  for (const auto & a : scene.agents) {
    AgentTrack t;
    t.agent_id = a.agent_id;
    for (const auto & [kind, arr] : a.cues) {
      t.cues.emplace(kind, CueArray{arr.layout, {}});
    }
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      const std::int64_t f = a.frames[i];
      // floor-mod so negative frame indices decimate on the same grid
      if (((f % k) + k) % k != 0) {
        continue;
      }
      t.frames.push_back(f >= 0 ? f / k : -((-f) / k));
      t.present.push_back(a.present[i]);
      for (const auto & [kind, arr] : a.cues) {
        const double * src = arr.frame(i);
        auto & dst = t.cues.at(kind).values;
        dst.insert(dst.end(), src, src + arr.layout.frame_size());
      }
    }
    out.agents.push_back(std::move(t));
  }
  return out;
}

}  // namespace omnitraj::trajstore

#endif  // OMNITRAJ__TRAJSTORE__RESAMPLE_HPP_
