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

#ifndef OMNITRAJ__NUMERICS__CHECKPOINT_HPP_
#define OMNITRAJ__NUMERICS__CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "omnitraj/numerics/tape.hpp"
#include "omnitraj/util/binio.hpp"
#include "omnitraj/util/files.hpp"
#include "omnitraj/util/hash.hpp"

namespace omnitraj::numerics
{

// Layout (little-endian):
//   "OTCK" | u32 version | u64 config digest | string config_json | u32 n_params
//   n_params x { string name | u32 rank | i64 dims[rank] | f32 data[numel] }
// where string = u32 length + bytes.

inline constexpr char kCheckpointMagic[4] = {'O', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint
{
  std::uint64_t config_digest = 0;
  std::string config_json;
  ParamStore params;
};

inline std::string encode_checkpoint(const Checkpoint & ck)
{
  std::string buf(kCheckpointMagic, 4);
  binio::put<std::uint32_t>(buf, kCheckpointVersion);
  binio::put<std::uint64_t>(buf, ck.config_digest);
  binio::put_string(buf, ck.config_json);
  binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(ck.params.size()));
  for (const auto & [name, t] : ck.params.all()) {
    binio::put_string(buf, name);
    binio::put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) {
      binio::put<std::int64_t>(buf, d);
    }
    for (double v : t.values()) {
      binio::put<float>(buf, static_cast<float>(v));
    }
  }
  return buf;
}

inline Checkpoint decode_checkpoint(const std::string & bytes, const std::string & what = "checkpoint")
{
  binio::Reader r(bytes.data(), bytes.size(), what);
  if (r.get_bytes(4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError(what + ": bad magic, not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(
      what + ": incompatible checkpoint version " + std::to_string(version) + " (expected " +
      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.config_digest = r.get<std::uint64_t>();
  ck.config_json = r.get_string();
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    Shape shape = r.get_array<std::int64_t>(rank);
    for (auto d : shape) {
      if (d < 0) {
        throw FormatError(what + ": negative dimension in parameter '" + name + "'");
      }
    }
    const auto data = r.get_array<float>(static_cast<std::size_t>(numel(shape)));
    ck.params.set(name, Tensor::from_f32(shape, data));
  }
  if (r.remaining() != 0) {
    throw FormatError(what + ": trailing bytes after last parameter");
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path & path, const Checkpoint & ck)
{
  write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__CHECKPOINT_HPP_
