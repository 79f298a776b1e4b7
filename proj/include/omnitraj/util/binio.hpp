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

#ifndef OMNITRAJ__UTIL__BINIO_HPP_
#define OMNITRAJ__UTIL__BINIO_HPP_

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "omnitraj/util/error.hpp"

// Little-endian binary encoding helpers shared by the sample cache and checkpoints.

namespace omnitraj::binio
{

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <typename T>
void put(std::string & buf, T v)
{
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
#if __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  std::reverse(bytes, bytes + sizeof(T));
#endif
  buf.append(reinterpret_cast<const char *>(bytes), sizeof(T));
}

inline void put_string(std::string & buf, const std::string & s)
{
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

/// Bounds-checked reader over an in-memory byte range.
class Reader
{
public:
  Reader(const char * data, std::size_t size, std::string what)
  : data_(data), size_(size), what_(std::move(what))
  {
  }

  template <typename T>
  T get()
  {
    static_assert(std::is_arithmetic_v<T>);
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_ + pos_, sizeof(T));
#if __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    std::reverse(bytes, bytes + sizeof(T));
#endif
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }

  std::string get_string()
  {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

  std::string get_bytes(std::size_t n)
  {
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
  std::vector<T> get_array(std::size_t n)
  {
    if (n > (size_ - pos_) / sizeof(T)) {
      throw FormatError(what_ + ": truncated (array of " + std::to_string(n) + " elements)");
    }
    std::vector<T> out(n);
    for (auto & v : out) {
      v = get<T>();
    }
    return out;
  }

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

private:
  void need(std::size_t n) const
  {
    if (n > size_ - pos_) {
      throw FormatError(
        what_ + ": truncated at byte " + std::to_string(pos_) + " (need " + std::to_string(n) +
        " more)");
    }
  }

  const char * data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace omnitraj::binio

#endif  // OMNITRAJ__UTIL__BINIO_HPP_
