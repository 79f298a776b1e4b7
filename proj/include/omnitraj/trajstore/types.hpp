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

#ifndef OMNITRAJ__TRAJSTORE__TYPES_HPP_
#define OMNITRAJ__TRAJSTORE__TYPES_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omnitraj/util/error.hpp"

namespace omnitraj::trajstore
{

/// Input cue channels: trajectory, 3D pose, 2D pose, 3D box, 2D box.
enum class CueKind : std::uint8_t { T = 0, P3 = 1, P2 = 2, B3 = 3, B2 = 4 };

inline constexpr std::array<CueKind, 5> kAllCues = {
  CueKind::T, CueKind::P3, CueKind::P2, CueKind::B3, CueKind::B2};

inline std::string_view cue_name(CueKind c)
{
  switch (c) {
    case CueKind::T:
      return "T";
    case CueKind::P3:
      return "P3";
    case CueKind::P2:
      return "P2";
    case CueKind::B3:
      return "B3";
    case CueKind::B2:
      return "B2";
  }
  return "?";
}

inline CueKind parse_cue(std::string_view s)
{
  for (auto c : kAllCues) {
    if (cue_name(c) == s) {
      return c;
    }
  }
  throw ConfigError("unknown cue kind '" + std::string(s) + "'");
}

inline bool is_pose(CueKind c) { return c == CueKind::P3 || c == CueKind::P2; }

/// Key used for each cue in the scene NDJSON schema.
inline std::string_view cue_json_key(CueKind c)
{
  switch (c) {
    case CueKind::T:
      return "xy";
    case CueKind::P3:
      return "pose3d";
    case CueKind::P2:
      return "pose2d";
    case CueKind::B3:
      return "box3d";
    case CueKind::B2:
      return "box2d";
  }
  return "";
}

/// Elements x features per frame for a cue.
struct CueLayout
{
  std::int64_t elements = 1;
  std::int64_t features = 2;

  std::int64_t frame_size() const { return elements * features; }
  friend bool operator==(const CueLayout &, const CueLayout &) = default;
};

/// Feature count is fixed per cue; element count of pose cues is configurable.
inline std::int64_t cue_features(CueKind c)
{
  switch (c) {
    case CueKind::T:
    case CueKind::P2:
    case CueKind::B2:
      return 2;
    case CueKind::P3:
    case CueKind::B3:
      return 3;
  }
  return 0;
}

/// Whether the cue's first two features are planar world coordinates that move with the
/// trajectory under translation. 3D pose is stored relative to the trajectory point; 2D pose
/// and 2D boxes live in image coordinates.
inline bool translates_with_trajectory(CueKind c) { return c == CueKind::T || c == CueKind::B3; }

/// Per-frame cue values [n_frames x elements x features].
struct CueArray
{
  CueLayout layout;
  std::vector<double> values;

  const double * frame(std::size_t i) const
  {
    return values.data() + i * static_cast<std::size_t>(layout.frame_size());
  }
  double * frame(std::size_t i)
  {
    return values.data() + i * static_cast<std::size_t>(layout.frame_size());
  }
  friend bool operator==(const CueArray &, const CueArray &) = default;
};

struct AgentTrack
{
  std::string agent_id;
  std::vector<std::int64_t> frames;     // strictly increasing
  std::vector<std::uint8_t> present;    // one flag per entry of frames
  std::map<CueKind, CueArray> cues;

  std::size_t n_frames() const { return frames.size(); }

  /// Position in `frames` of a global frame index.
  std::optional<std::size_t> index_of(std::int64_t frame) const
  {
    auto it = std::lower_bound(frames.begin(), frames.end(), frame);
    if (it == frames.end() || *it != frame) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - frames.begin());
  }

  bool present_at(std::int64_t frame) const
  {
    const auto i = index_of(frame);
    return i && present[*i] != 0;
  }

  const double * xy_at(std::size_t i) const { return cues.at(CueKind::T).frame(i); }

  void validate() const
  {
    if (present.size() != frames.size()) {
      throw SchemaError("agent '" + agent_id + "': present mask length differs from frames");
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
      if (frames[i] <= frames[i - 1]) {
        throw SchemaError("agent '" + agent_id + "': frames must be strictly increasing");
      }
    }
    auto t = cues.find(CueKind::T);
    if (t == cues.end()) {
      throw SchemaError("agent '" + agent_id + "': trajectory cue missing");
    }
    if (t->second.layout != CueLayout{1, 2}) {
      throw SchemaError("agent '" + agent_id + "': trajectory cue must be 1 x 2");
    }
    for (const auto & [kind, arr] : cues) {
      if (arr.layout.features != cue_features(kind) || arr.layout.elements < 1) {
        throw SchemaError(
          "agent '" + agent_id + "': cue " + std::string(cue_name(kind)) + " has wrong layout");
      }
      if (arr.values.size() != frames.size() * static_cast<std::size_t>(arr.layout.frame_size())) {
        throw SchemaError(
          "agent '" + agent_id + "': cue " + std::string(cue_name(kind)) +
          " first dimension must equal the number of frames");
      }
    }
  }

  friend bool operator==(const AgentTrack &, const AgentTrack &) = default;
};

/// A multi-agent scene on one global frame grid at base_fps.
struct SceneRecord
{
  std::string scene_id;
  double base_fps = 0.0;
  std::vector<AgentTrack> agents;
  std::string source_tag;

  void validate() const
  {
    if (!(base_fps > 0.0)) {
      throw SchemaError("base_fps must be positive");
    }
    if (agents.empty()) {
      throw SchemaError("scene '" + scene_id + "': at least one agent required");
    }
    for (const auto & a : agents) {
      a.validate();
    }
  }

  /// Inclusive [first, last] global frame range over all agents.
  std::pair<std::int64_t, std::int64_t> frame_range() const
  {
    std::int64_t lo = 0;
    std::int64_t hi = -1;
    bool first = true;
    for (const auto & a : agents) {
      if (a.frames.empty()) {
        continue;
      }
      if (first) {
        lo = a.frames.front();
        hi = a.frames.back();
        first = false;
      } else {
        lo = std::min(lo, a.frames.front());
        hi = std::max(hi, a.frames.back());
      }
    }
    return {lo, hi};
  }

  friend bool operator==(const SceneRecord &, const SceneRecord &) = default;
};

/// Observed cue values of every agent in a window, [n_agents x t_obs x elements x features].
struct ObsCue
{
  CueLayout layout;
  std::vector<float> values;
  friend bool operator==(const ObsCue &, const ObsCue &) = default;
};

/**
 * @brief One training or evaluation example.
 *
 * Values use 32-bit storage so cache round trips are exact. Agent 0..n_agents-1 follow the
 * order chosen at extraction; ego_index names the agent whose future is in `future`.
 */
struct SampleWindow
{
  std::string scene_id;
  double fps = 0.0;
  std::int64_t t_obs = 0;
  std::int64_t t_pred = 0;
  std::int64_t ego_index = 0;
  std::int64_t n_agents = 0;
  std::map<CueKind, ObsCue> obs;
  std::vector<std::uint8_t> obs_valid;  // [n_agents x t_obs]
  std::vector<float> future;            // [t_pred x 2], ego only
  std::array<float, 2> normalization_offset{0.0f, 0.0f};

  bool valid(std::int64_t agent, std::int64_t t) const
  {
    return obs_valid[static_cast<std::size_t>(agent * t_obs + t)] != 0;
  }

  const float * xy(std::int64_t agent, std::int64_t t) const
  {
    return obs.at(CueKind::T).values.data() + (agent * t_obs + t) * 2;
  }
  float * xy(std::int64_t agent, std::int64_t t)
  {
    return obs.at(CueKind::T).values.data() + (agent * t_obs + t) * 2;
  }

  void validate() const
  {
    if (!(fps > 0.0) || t_obs < 2 || t_pred < 1 || n_agents < 1 || ego_index < 0 ||
        ego_index >= n_agents) {
      throw SchemaError("sample '" + scene_id + "': invalid window metadata");
    }
    if (obs.count(CueKind::T) == 0) {
      throw SchemaError("sample '" + scene_id + "': trajectory observations missing");
    }
    for (const auto & [kind, cue] : obs) {
      if (cue.values.size() !=
          static_cast<std::size_t>(n_agents * t_obs * cue.layout.frame_size())) {
        throw SchemaError(
          "sample '" + scene_id + "': cue " + std::string(cue_name(kind)) + " has wrong size");
      }
    }
    if (obs_valid.size() != static_cast<std::size_t>(n_agents * t_obs) ||
        future.size() != static_cast<std::size_t>(t_pred * 2)) {
      throw SchemaError("sample '" + scene_id + "': mask or future has wrong size");
    }
    if (!valid(ego_index, t_obs - 1)) {
      throw SchemaError("sample '" + scene_id + "': ego last observed frame is missing");
    }
  }

  friend bool operator==(const SampleWindow &, const SampleWindow &) = default;
};

}  // namespace omnitraj::trajstore

#endif  // OMNITRAJ__TRAJSTORE__TYPES_HPP_
