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

#ifndef OMNITRAJ__NUMERICS__LAYERS_HPP_
#define OMNITRAJ__NUMERICS__LAYERS_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "omnitraj/numerics/ops.hpp"
#include "omnitraj/numerics/tape.hpp"

namespace omnitraj::numerics
{

// Parameter naming convention: <prefix>.w / <prefix>.b for linear maps, <prefix>.g /
// <prefix>.b for layer norms.

inline Tensor xavier_uniform(std::int64_t fan_in, std::int64_t fan_out, std::mt19937_64 & rng)
{
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w(Shape{fan_in, fan_out});
  for (auto & v : w.values()) {
    v = dist(rng);
  }
  return w;
}

inline void init_linear(
  ParamStore & store, const std::string & prefix, std::int64_t in, std::int64_t out,
  std::mt19937_64 & rng, bool zero = false)
{
  store.set(prefix + ".w", zero ? Tensor(Shape{in, out}) : xavier_uniform(in, out, rng));
  store.set(prefix + ".b", Tensor(Shape{out}));
}

inline void init_layer_norm(ParamStore & store, const std::string & prefix, std::int64_t d)
{
  store.set(prefix + ".g", Tensor(Shape{d}, 1.0));
  store.set(prefix + ".b", Tensor(Shape{d}));
}

inline Var apply_linear(ParamBinding & p, const std::string & prefix, Var x)
{
  return linear(x, p(prefix + ".w"), p(prefix + ".b"));
}

inline Var apply_layer_norm(ParamBinding & p, const std::string & prefix, Var x)
{
  return layer_norm(x, p(prefix + ".g"), p(prefix + ".b"));
}

/// Two-layer perceptron: linear -> gelu -> linear.
inline void init_mlp2(
  ParamStore & store, const std::string & prefix, std::int64_t in, std::int64_t hidden,
  std::int64_t out, std::mt19937_64 & rng, bool zero_output = false)
{
  init_linear(store, prefix + ".fc1", in, hidden, rng);
  init_linear(store, prefix + ".fc2", hidden, out, rng, zero_output);
}

inline Var apply_mlp2(ParamBinding & p, const std::string & prefix, Var x)
{
  return apply_linear(p, prefix + ".fc2", gelu(apply_linear(p, prefix + ".fc1", x)));
}

inline void init_mha(
  ParamStore & store, const std::string & prefix, std::int64_t d, std::mt19937_64 & rng,
  bool zero_output = false)
{
  init_linear(store, prefix + ".q", d, d, rng);
  init_linear(store, prefix + ".k", d, d, rng);
  init_linear(store, prefix + ".v", d, d, rng);
  init_linear(store, prefix + ".o", d, d, rng, zero_output);
}

/**
 * Multi-head attention with input and output projections.
 * query [G, Lq, D], key/value [G, Lk, D].
 */
inline Var mha(
  ParamBinding & p, const std::string & prefix, Var query, Var key, Var value,
  std::int64_t n_heads, const AttnMask & mask = {})
{
  const Var q = apply_linear(p, prefix + ".q", query);
  const Var k = apply_linear(p, prefix + ".k", key);
  const Var v = apply_linear(p, prefix + ".v", value);
  return apply_linear(p, prefix + ".o", attention(q, k, v, n_heads, mask));
}

inline void init_encoder_block(
  ParamStore & store, const std::string & prefix, std::int64_t d, std::mt19937_64 & rng)
{
  init_layer_norm(store, prefix + ".ln1", d);
  init_mha(store, prefix + ".attn", d, rng);
  init_layer_norm(store, prefix + ".ln2", d);
  init_mlp2(store, prefix + ".ff", d, 4 * d, d, rng);
}

/// Pre-norm transformer encoder block over grouped sequences x [G, L, D].
inline Var encoder_block(
  ParamBinding & p, const std::string & prefix, Var x, std::int64_t n_heads,
  const AttnMask & mask)
{
  const Var h = apply_layer_norm(p, prefix + ".ln1", x);
  x = add(x, mha(p, prefix + ".attn", h, h, h, n_heads, mask));
  const Var h2 = apply_layer_norm(p, prefix + ".ln2", x);
  return add(x, apply_mlp2(p, prefix + ".ff", h2));
}

inline void init_decoder_block(
  ParamStore & store, const std::string & prefix, std::int64_t d, std::mt19937_64 & rng)
{
  init_layer_norm(store, prefix + ".ln1", d);
  init_mha(store, prefix + ".self", d, rng);
  init_layer_norm(store, prefix + ".ln2", d);
  init_mha(store, prefix + ".cross", d, rng);
  init_layer_norm(store, prefix + ".ln3", d);
  init_mlp2(store, prefix + ".ff", d, 4 * d, d, rng);
}

/// Pre-norm transformer decoder block: query self-attention, cross-attention to memory, FFN.
inline Var decoder_block(
  ParamBinding & p, const std::string & prefix, Var x, Var memory, std::int64_t n_heads,
  const AttnMask & memory_mask)
{
  const Var h = apply_layer_norm(p, prefix + ".ln1", x);
  x = add(x, mha(p, prefix + ".self", h, h, h, n_heads));
  const Var h2 = apply_layer_norm(p, prefix + ".ln2", x);
  x = add(x, mha(p, prefix + ".cross", h2, memory, memory, n_heads, memory_mask));
  const Var h3 = apply_layer_norm(p, prefix + ".ln3", x);
  return add(x, apply_mlp2(p, prefix + ".ff", h3));
}

}  // namespace omnitraj::numerics

#endif  // OMNITRAJ__NUMERICS__LAYERS_HPP_
