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

#ifndef OMNITRAJ__TRAJSTORE__CACHE_HPP_
#define OMNITRAJ__TRAJSTORE__CACHE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "omnitraj/trajstore/types.hpp"
#include "omnitraj/util/binio.hpp"
#include "omnitraj/util/files.hpp"

// Sample cache layout (little-endian):
//   header (16 bytes): "UHM2" | u32 version | u32 sample count | u32 reserved (0)
//   records: u32 payload length | payload
//   payload: string scene_id | f64 fps | i64 t_obs, t_pred, ego_index, n_agents
//            | f32 offset[2] | u32 n_cues
//            | n_cues x { u8 kind | i64 elements | i64 features | f32 values[...] }
//            | u8 obs_valid[n_agents * t_obs] | f32 future[t_pred * 2]

namespace omnitraj::trajstore
{

inline constexpr char kCacheMagic[4] = {'U', 'H', 'M', '2'};
inline constexpr std::uint32_t kCacheVersion = 1;

inline std::string encode_samples(const std::vector<SampleWindow> & samples)
{
  std::string buf(kCacheMagic, 4);
  binio::put<std::uint32_t>(buf, kCacheVersion);
  binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(samples.size()));
  binio::put<std::uint32_t>(buf, 0);
  std::string rec;
  for (const auto & s : samples) {
    rec.clear();
    binio::put_string(rec, s.scene_id);
    binio::put<double>(rec, s.fps);
    binio::put<std::int64_t>(rec, s.t_obs);
    binio::put<std::int64_t>(rec, s.t_pred);
    binio::put<std::int64_t>(rec, s.ego_index);
    binio::put<std::int64_t>(rec, s.n_agents);
    binio::put<float>(rec, s.normalization_offset[0]);
    binio::put<float>(rec, s.normalization_offset[1]);
    binio::put<std::uint32_t>(rec, static_cast<std::uint32_t>(s.obs.size()));
    for (const auto & [kind, cue] : s.obs) {
      binio::put<std::uint8_t>(rec, static_cast<std::uint8_t>(kind));
      binio::put<std::int64_t>(rec, cue.layout.elements);
      binio::put<std::int64_t>(rec, cue.layout.features);
      for (float v : cue.values) {
        binio::put<float>(rec, v);
      }
    }
    for (auto v : s.obs_valid) {
      binio::put<std::uint8_t>(rec, v);
    }
    for (float v : s.future) {
      binio::put<float>(rec, v);
    }
    binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(rec.size()));
    buf += rec;
  }
  return buf;
}

inline std::vector<SampleWindow> decode_samples(
  const std::string & bytes, const std::string & what = "cache")
{
  binio::Reader r(bytes.data(), bytes.size(), what);
  if (r.get_bytes(4) != std::string(kCacheMagic, 4)) {
    throw FormatError(what + ": bad magic, not a sample cache");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCacheVersion) {
    throw FormatError(
      what + ": incompatible cache version " + std::to_string(version) + " (reader supports " +
      std::to_string(kCacheVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  std::vector<SampleWindow> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    const std::string payload = r.get_bytes(len);
    binio::Reader p(payload.data(), payload.size(), what + " record " + std::to_string(i));
    SampleWindow s;
    s.scene_id = p.get_string();
    s.fps = p.get<double>();
    s.t_obs = p.get<std::int64_t>();
    s.t_pred = p.get<std::int64_t>();
    s.ego_index = p.get<std::int64_t>();
    s.n_agents = p.get<std::int64_t>();
    if (s.t_obs < 0 || s.t_pred < 0 || s.n_agents < 0 || s.t_obs > (1 << 20) ||
        s.n_agents > (1 << 20) || s.t_pred > (1 << 20)) {
      throw FormatError(what + ": corrupt record " + std::to_string(i));
    }
    s.normalization_offset[0] = p.get<float>();
    s.normalization_offset[1] = p.get<float>();
    const auto n_cues = p.get<std::uint32_t>();
    for (std::uint32_t c = 0; c < n_cues; ++c) {
      const auto kind = p.get<std::uint8_t>();
      if (kind > static_cast<std::uint8_t>(CueKind::B2)) {
        throw FormatError(what + ": unknown cue kind in record " + std::to_string(i));
      }
      ObsCue cue;
      cue.layout.elements = p.get<std::int64_t>();
      cue.layout.features = p.get<std::int64_t>();
      if (cue.layout.elements < 0 || cue.layout.features < 0 || cue.layout.elements > 4096 ||
          cue.layout.features > 16) {
        throw FormatError(what + ": corrupt cue layout in record " + std::to_string(i));
      }
      cue.values = p.get_array<float>(
        static_cast<std::size_t>(s.n_agents * s.t_obs * cue.layout.frame_size()));
      s.obs.emplace(static_cast<CueKind>(kind), std::move(cue));
    }
    s.obs_valid = p.get_array<std::uint8_t>(static_cast<std::size_t>(s.n_agents * s.t_obs));
    s.future = p.get_array<float>(static_cast<std::size_t>(s.t_pred * 2));
    if (p.remaining() != 0) {
      throw FormatError(what + ": record " + std::to_string(i) + " has trailing bytes");
    }
    out.push_back(std::move(s));
  }
  if (r.remaining() != 0) {
    throw FormatError(what + ": trailing bytes after " + std::to_string(count) + " records");
  }
  return out;
}

inline void cache_write(const std::vector<SampleWindow> & samples, const std::filesystem::path & path)
{
  write_file(path, encode_samples(samples));
}

inline std::vector<SampleWindow> cache_read(const std::filesystem::path & path)
{
  return decode_samples(read_file(path), path.string());
}

}  // namespace omnitraj::trajstore

#endif  // OMNITRAJ__TRAJSTORE__CACHE_HPP_
