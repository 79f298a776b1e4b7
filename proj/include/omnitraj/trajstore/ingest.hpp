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

#ifndef OMNITRAJ__TRAJSTORE__INGEST_HPP_
#define OMNITRAJ__TRAJSTORE__INGEST_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omnitraj/trajstore/types.hpp"
#include "omnitraj/util/error.hpp"

// Scene NDJSON: one scene per line,
//   {"scene_id": str, "fps": number, "source": str?,
//    "agents": [{"id": str, "frames": [int], "xy": [[x, y] | null],
//                "pose3d": [[[x, y, z] x e] | null]?, "pose2d": ..., "box3d": ..., "box2d": ...}]}
// A null entry in "xy" marks the frame as not present.

namespace omnitraj::trajstore
{

namespace detail
{

inline const nlohmann::json & require(
  const nlohmann::json & obj, const char * key, const std::string & where)
{
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + "missing required field '" + key + "'");
  }
  return *it;
}

inline double as_number(const nlohmann::json & v, const std::string & where, const char * field)
{
  if (!v.is_number()) {
    throw SchemaError(where + "field '" + field + "' must be a number");
  }
  return v.get<double>();
}

/// Reads one frame of a cue: [x, y] for the trajectory, [[f...] x e] otherwise.
inline void read_cue_frame(
  const nlohmann::json & v, CueKind kind, CueArray & arr, std::size_t frame,
  const std::string & where)
{
  const char * field = cue_json_key(kind).data();
  double * dst = arr.frame(frame);
  const auto f = static_cast<std::size_t>(arr.layout.features);
  if (kind == CueKind::T) {
    if (!v.is_array() || v.size() != 2) {
      throw SchemaError(where + "field 'xy' entries must be [x, y]");
    }
    dst[0] = as_number(v[0], where, field);
    dst[1] = as_number(v[1], where, field);
    return;
  }
  if (!v.is_array() || static_cast<std::int64_t>(v.size()) != arr.layout.elements) {
    throw SchemaError(
      where + "field '" + field + "' frames must have " + std::to_string(arr.layout.elements) +
      " elements");
  }
  for (std::size_t e = 0; e < v.size(); ++e) {
    if (!v[e].is_array() || v[e].size() != f) {
      throw SchemaError(
        where + "field '" + field + "' elements must have " + std::to_string(f) + " features");
    }
    for (std::size_t c = 0; c < f; ++c) {
      dst[e * f + c] = as_number(v[e][c], where, field);
    }
  }
}

}  // namespace detail

/// Parses one scene object. `where` prefixes error messages (e.g. "line 3: ").
inline SceneRecord parse_scene(const nlohmann::json & j, const std::string & where = "")
{
  if (!j.is_object()) {
    throw SchemaError(where + "scene must be a JSON object");
  }
  SceneRecord scene;
  const auto & id = detail::require(j, "scene_id", where);
  if (!id.is_string()) {
    throw SchemaError(where + "field 'scene_id' must be a string");
  }
  scene.scene_id = id.get<std::string>();
  scene.base_fps = detail::as_number(detail::require(j, "fps", where), where, "fps");
  if (!(scene.base_fps > 0.0) || !std::isfinite(scene.base_fps)) {
    throw SchemaError(where + "base_fps must be positive");
  }
  if (auto it = j.find("source"); it != j.end() && it->is_string()) {
    scene.source_tag = it->get<std::string>();
  }
  const auto & agents = detail::require(j, "agents", where);
  if (!agents.is_array()) {
    throw SchemaError(where + "field 'agents' must be an array");
  }
  for (const auto & aj : agents) {
    if (!aj.is_object()) {
      throw SchemaError(where + "agent entries must be objects");
    }
    AgentTrack track;
    const auto & aid = detail::require(aj, "id", where);
    track.agent_id = aid.is_string() ? aid.get<std::string>() : aid.dump();
    const auto & frames = detail::require(aj, "frames", where);
    if (!frames.is_array()) {
      throw SchemaError(where + "field 'frames' must be an array");
    }
    for (const auto & f : frames) {
      if (!f.is_number_integer()) {
        throw SchemaError(where + "field 'frames' must contain integers");
      }
      track.frames.push_back(f.get<std::int64_t>());
    }
    const std::size_t n = track.frames.size();
    track.present.assign(n, 1);
    for (auto kind : kAllCues) {
      const char * key = cue_json_key(kind).data();
      auto it = aj.find(key);
      if (it == aj.end()) {
        if (kind == CueKind::T) {
          throw SchemaError(where + "missing required field 'xy'");
        }
        continue;
      }
      if (!it->is_array() || it->size() != n) {
        throw SchemaError(
          where + "field '" + key + "' must have one entry per frame (" + std::to_string(n) + ")");
      }
      CueArray arr;
      arr.layout.features = cue_features(kind);
      arr.layout.elements = 1;
      if (kind != CueKind::T) {
        for (const auto & fr : *it) {
          if (fr.is_array()) {
            arr.layout.elements = static_cast<std::int64_t>(fr.size());
            break;
          }
        }
      }
      arr.values.assign(n * static_cast<std::size_t>(arr.layout.frame_size()), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto & v = (*it)[i];
        if (v.is_null()) {
          if (kind == CueKind::T) {
            track.present[i] = 0;
          }
          continue;
        }
        detail::read_cue_frame(v, kind, arr, i, where);
      }
      track.cues.emplace(kind, std::move(arr));
    }
    scene.agents.push_back(std::move(track));
  }
  try {
    scene.validate();
  } catch (const SchemaError & e) {
    throw SchemaError(where + e.what());
  }
  return scene;
}

inline nlohmann::json scene_to_json(const SceneRecord & scene)
{
  nlohmann::json j;
  j["scene_id"] = scene.scene_id;
  j["fps"] = scene.base_fps;
  if (!scene.source_tag.empty()) {
    j["source"] = scene.source_tag;
  }
  j["agents"] = nlohmann::json::array();
  for (const auto & a : scene.agents) {
    nlohmann::json aj;
    aj["id"] = a.agent_id;
    aj["frames"] = a.frames;
    for (const auto & [kind, arr] : a.cues) {
      nlohmann::json col = nlohmann::json::array();
      const auto f = static_cast<std::size_t>(arr.layout.features);
      for (std::size_t i = 0; i < a.frames.size(); ++i) {
        if (!a.present[i]) {
          col.push_back(nullptr);
          continue;
        }
        const double * v = arr.frame(i);
        if (kind == CueKind::T) {
          col.push_back({v[0], v[1]});
          continue;
        }
        nlohmann::json fr = nlohmann::json::array();
        for (std::int64_t e = 0; e < arr.layout.elements; ++e) {
          fr.push_back(std::vector<double>(v + e * f, v + (e + 1) * f));
        }
        col.push_back(std::move(fr));
      }
      aj[std::string(cue_json_key(kind))] = std::move(col);
    }
    j["agents"].push_back(std::move(aj));
  }
  return j;
}

/// Calls fn for every scene in an NDJSON file, in file order. Blank lines are skipped.
inline void for_each_scene(
  const std::filesystem::path & path, const std::function<void(SceneRecord &&)> & fn)
{
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error & e) {
      throw SchemaError(where + "malformed JSON (" + e.what() + ")");
    }
    fn(parse_scene(j, where));
  }
}

inline std::vector<SceneRecord> ingest_ndjson(const std::filesystem::path & path)
{
  std::vector<SceneRecord> out;
  for_each_scene(path, [&out](SceneRecord && s) { out.push_back(std::move(s)); });
  return out;
}

inline void write_ndjson(const std::filesystem::path & path, const std::vector<SceneRecord> & scenes)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  for (const auto & s : scenes) {
    out << scene_to_json(s).dump() << '\n';
  }
}

}  // namespace omnitraj::trajstore

#endif  // OMNITRAJ__TRAJSTORE__INGEST_HPP_
