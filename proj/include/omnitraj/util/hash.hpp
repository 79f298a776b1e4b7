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

#ifndef OMNITRAJ__UTIL__HASH_HPP_
#define OMNITRAJ__UTIL__HASH_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace omnitraj
{

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL)
{
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// splitmix64 finalizer; used to derive independent stream seeds from one root seed.
inline std::uint64_t mix_seed(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0)
{
  return mix_seed(mix_seed(root ^ mix_seed(a)) ^ mix_seed(b + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag)
{
  return mix_seed(root ^ fnv1a64(tag));
}

inline std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace omnitraj

#endif  // OMNITRAJ__UTIL__HASH_HPP_
