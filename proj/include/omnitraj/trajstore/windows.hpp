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

#ifndef OMNITRAJ__TRAJSTORE__WINDOWS_HPP_
#define OMNITRAJ__TRAJSTORE__WINDOWS_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "omnitraj/trajstore/types.hpp"

namespace omnitraj::trajstore
{

/**
 * Cuts a scene into observation/prediction windows.
 *
 * Start frames run from the first scene frame in steps of `stride`. Every agent is tried as
 * ego; a window is kept when the ego is present at its last observed frame and at every
 * future frame. The ego is placed at index 0, followed by the other agents (scene order)
 * that are present in at least one observed frame. A non-trajectory cue is carried only if
 * every kept agent has it.
 */
inline std::vector<SampleWindow> extract_windows(
  const SceneRecord & scene, std::int64_t t_obs, std::int64_t t_pred, std::int64_t stride)
{
  if (t_obs < 2 || t_pred < 1 || stride < 1) {
    throw ContractError("extract_windows: requires t_obs >= 2, t_pred >= 1, stride >= 1");
  }
  std::vector<SampleWindow> out;
  const auto [first, last] = scene.frame_range();
  if (last - first + 1 < t_obs + t_pred) {
    return out;
  }
  for (std::int64_t s = first; s + t_obs + t_pred - 1 <= last; s += stride) {
    for (std::size_t e = 0; e < scene.agents.size(); ++e) {
      const AgentTrack & ego = scene.agents[e];
      bool ok = ego.present_at(s + t_obs - 1);
      for (std::int64_t f = s + t_obs; ok && f < s + t_obs + t_pred; ++f) {
        ok = ego.present_at(f);
      }
      if (!ok) {
        continue;
      }
      std::vector<const AgentTrack *> kept{&ego};
      for (std::size_t o = 0; o < scene.agents.size(); ++o) {
        if (o == e) {
          continue;
        }
        for (std::int64_t f = s; f < s + t_obs; ++f) {
          if (scene.agents[o].present_at(f)) {
            kept.push_back(&scene.agents[o]);
            break;
          }
        }
      }

      SampleWindow w;
      w.scene_id = scene.scene_id;
      w.fps = scene.base_fps;
      w.t_obs = t_obs;
      w.t_pred = t_pred;
      w.ego_index = 0;
      w.n_agents = static_cast<std::int64_t>(kept.size());
      w.obs_valid.assign(static_cast<std::size_t>(w.n_agents * t_obs), 0);
      for (const auto & [kind, arr] : ego.cues) {
        bool all = true;
        for (const auto * a : kept) {
          auto it = a->cues.find(kind);
          all = all && it != a->cues.end() && it->second.layout == arr.layout;
        }
        if (all) {
          w.obs.emplace(
            kind, ObsCue{
                    arr.layout, std::vector<float>(
                                  static_cast<std::size_t>(w.n_agents * t_obs * arr.layout.frame_size()),
                                  0.0f)});
        }
      }
      for (std::int64_t a = 0; a < w.n_agents; ++a) {
        const AgentTrack & track = *kept[static_cast<std::size_t>(a)];
        for (std::int64_t t = 0; t < t_obs; ++t) {
          const auto idx = track.index_of(s + t);
          if (!idx || !track.present[*idx]) {
            continue;
          }
          w.obs_valid[static_cast<std::size_t>(a * t_obs + t)] = 1;
          for (auto & [kind, cue] : w.obs) {
            const auto fs = cue.layout.frame_size();
            const double * src = track.cues.at(kind).frame(*idx);
            float * dst = cue.values.data() + (a * t_obs + t) * fs;
            for (std::int64_t c = 0; c < fs; ++c) {
              dst[c] = static_cast<float>(src[c]);
            }
          }
        }
      }
      w.future.reserve(static_cast<std::size_t>(2 * t_pred));
      for (std::int64_t f = s + t_obs; f < s + t_obs + t_pred; ++f) {
        const double * p = ego.xy_at(*ego.index_of(f));
        w.future.push_back(static_cast<float>(p[0]));
        w.future.push_back(static_cast<float>(p[1]));
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

/**
 * Translates the window so the ego's last observed position is the origin. Planar cues
 * (trajectory, 3D box) move by the same offset at valid frames; the accumulated offset is
 * kept in normalization_offset.
 */
inline SampleWindow normalize(SampleWindow sample)
{
  const float * ego_last = sample.xy(sample.ego_index, sample.t_obs - 1);
  const float ox = ego_last[0];
  const float oy = ego_last[1];
  for (auto & [kind, cue] : sample.obs) {
    if (!translates_with_trajectory(kind)) {
      continue;
    }
    const auto fs = cue.layout.frame_size();
    const auto f = cue.layout.features;
    for (std::int64_t a = 0; a < sample.n_agents; ++a) {
      for (std::int64_t t = 0; t < sample.t_obs; ++t) {
        if (!sample.valid(a, t)) {
          continue;
        }
        float * v = cue.values.data() + (a * sample.t_obs + t) * fs;
        for (std::int64_t e = 0; e < cue.layout.elements; ++e) {
          v[e * f] -= ox;
          v[e * f + 1] -= oy;
        }
      }
    }
  }
  for (std::size_t i = 0; i < sample.future.size(); i += 2) {
    sample.future[i] -= ox;
    sample.future[i + 1] -= oy;
  }
  sample.normalization_offset[0] += ox;
  sample.normalization_offset[1] += oy;
  return sample;
}

/// Maps a position in the normalized frame back to raw coordinates.
inline std::array<double, 2> denormalize(const SampleWindow & sample, double x, double y)
{
  return {x + sample.normalization_offset[0], y + sample.normalization_offset[1]};
}

}  // namespace omnitraj::trajstore

#endif  // OMNITRAJ__TRAJSTORE__WINDOWS_HPP_
