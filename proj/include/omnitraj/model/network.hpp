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

#ifndef OMNITRAJ__MODEL__NETWORK_HPP_
#define OMNITRAJ__MODEL__NETWORK_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "omnitraj/model/config.hpp"
#include "omnitraj/model/tokens.hpp"
#include "omnitraj/model/weights.hpp"
#include "omnitraj/numerics/layers.hpp"
#include "omnitraj/numerics/ops.hpp"

namespace omnitraj::model
{

using numerics::AttnMask;

/// Padded grouping of ragged rows: index[g * len + i] is a row or -1 (padding).
struct Grouping
{
  std::int64_t groups = 0;
  std::int64_t len = 0;
  std::vector<std::int64_t> index;
  std::vector<std::uint8_t> mask;

  static Grouping build(
    const std::vector<std::vector<std::int64_t>> & members, const std::vector<std::uint8_t> & row_mask)
  {
    Grouping g;
    g.groups = static_cast<std::int64_t>(members.size());
    for (const auto & m : members) {
      g.len = std::max<std::int64_t>(g.len, static_cast<std::int64_t>(m.size()));
    }
    g.index.assign(static_cast<std::size_t>(g.groups * g.len), -1);
    g.mask.assign(g.index.size(), 0);
    for (std::int64_t i = 0; i < g.groups; ++i) {
      const auto & m = members[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < m.size(); ++j) {
        const auto slot = static_cast<std::size_t>(i * g.len) + j;
        g.index[slot] = m[j];
        g.mask[slot] = row_mask[static_cast<std::size_t>(m[j])];
      }
    }
    return g;
  }

  Var gather(Var rows) const
  {
    const std::int64_t d = rows.shape().back();
    return numerics::reshape(numerics::gather_rows(rows, index), Shape{groups, len, d});
  }
};

/// Refined trajectory tokens mH^T, one row per (sample, agent, frame).
struct TrajectoryTokens
{
  Var rows;
  std::vector<TokenMeta> meta;
  std::vector<std::uint8_t> key_mask;
  std::int64_t n_samples = 0;
};

/**
 * Shared per-agent encoder. Every agent of every sample forms one sequence of its own tokens
 * (all cues, plus the sample's frame-rate token when present); outputs at trajectory positions
 * are kept.
 */
inline TrajectoryTokens cme_forward(ParamBinding & p, const ModelConfig & cfg, const TokenBatch & tb)
{
  std::map<std::pair<int, int>, std::vector<std::int64_t>> by_agent;
  std::map<int, std::vector<std::int64_t>> fps_rows;
  for (std::size_t i = 0; i < tb.meta.size(); ++i) {
    const auto & m = tb.meta[i];
    if (m.fps_token) {
      fps_rows[m.sample].push_back(static_cast<std::int64_t>(i));
    } else {
      by_agent[{m.sample, m.agent}].push_back(static_cast<std::int64_t>(i));
    }
  }
  std::vector<std::vector<std::int64_t>> members;
  for (auto & [key, rows] : by_agent) {
    auto it = fps_rows.find(key.first);
    if (it != fps_rows.end()) {
      rows.insert(rows.end(), it->second.begin(), it->second.end());
    }
    members.push_back(rows);
  }
  const Grouping g = Grouping::build(members, tb.key_mask);
  const AttnMask mask = AttnMask::keys(g.mask);
  Var x = g.gather(tb.tokens);
  for (std::int64_t l = 0; l < cfg.cme_layers; ++l) {
    x = numerics::encoder_block(p, layer_prefix("cme", l), x, cfg.n_heads, mask);
  }
  const Var flat = numerics::reshape(x, Shape{g.groups * g.len, cfg.d_model});

  TrajectoryTokens out;
  out.n_samples = tb.n_samples;
  std::vector<std::int64_t> keep;
  for (std::size_t slot = 0; slot < g.index.size(); ++slot) {
    if (g.index[slot] < 0) {
      continue;
    }
    const auto & m = tb.meta[static_cast<std::size_t>(g.index[slot])];
    if (!m.fps_token && m.cue == CueKind::T) {
      keep.push_back(static_cast<std::int64_t>(slot));
      out.meta.push_back(m);
      out.key_mask.push_back(g.mask[slot]);
    }
  }
  out.rows = numerics::apply_layer_norm(p, "cme.ln_f", numerics::gather_rows(flat, keep));
  return out;
}

/// Unified encoder output H, padded per sample: memory [B x L x d] with key mask [B x L].
struct EncoderOutput
{
  Var memory;
  Grouping grouping;
  std::vector<TokenMeta> meta;  // per row of the ungrouped trajectory tokens
};

inline Grouping group_by_sample(const TrajectoryTokens & tr)
{
  std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(tr.n_samples));
  for (std::size_t i = 0; i < tr.meta.size(); ++i) {
    members[static_cast<std::size_t>(tr.meta[i].sample)].push_back(static_cast<std::int64_t>(i));
  }
  return Grouping::build(members, tr.key_mask);
}

/**
 * Cross-agent, cross-time encoder over all trajectory tokens of a sample. With use_hie off,
 * H is mH^T itself.
 */
inline EncoderOutput hie_forward(ParamBinding & p, const ModelConfig & cfg, const TrajectoryTokens & tr)
{
  EncoderOutput out;
  out.grouping = group_by_sample(tr);
  out.meta = tr.meta;
  Var x = out.grouping.gather(tr.rows);
  if (cfg.use_hie) {
    const AttnMask mask = AttnMask::keys(out.grouping.mask);
    for (std::int64_t l = 0; l < cfg.hie_layers; ++l) {
      x = numerics::encoder_block(p, layer_prefix("hie", l), x, cfg.n_heads, mask);
    }
    x = numerics::apply_layer_norm(p, "hie.ln_f", x);
  }
  out.memory = x;
  return out;
}

/// Rows [first, first + count) of each of `groups` blocks of `stride` rows.
inline std::vector<std::int64_t> block_rows(
  std::int64_t groups, std::int64_t stride, std::int64_t first, std::int64_t count)
{
  std::vector<std::int64_t> idx;
  idx.reserve(static_cast<std::size_t>(groups * count));
  for (std::int64_t g = 0; g < groups; ++g) {
    for (std::int64_t i = 0; i < count; ++i) {
      idx.push_back(g * stride + first + i);
    }
  }
  return idx;
}

/**
 * Decoder over [Q_ego; Q_ctx] attending to H, then ego-centric cross-attention of Z_ego onto
 * Z_ctx with a residual connection. Returns Z*_ego as [B * K x d], sample-major.
 *
 * Without the decoder, each mode vector is the masked mean of the sample's ego rows of H plus
 * its ego query.
 */
inline Var pid_forward(ParamBinding & p, const ModelConfig & cfg, const EncoderOutput & enc)
{
  const std::int64_t b = enc.grouping.groups;
  const std::int64_t k = cfg.n_modes;
  const std::int64_t d = cfg.d_model;
  const Var queries = p("pid.queries");

  if (!cfg.use_decoder) {
    const std::int64_t len = enc.grouping.len;
    Tensor pool(Shape{b, 1, len});
    for (std::int64_t g = 0; g < b; ++g) {
      std::int64_t n = 0;
      for (std::int64_t i = 0; i < len; ++i) {
        const auto slot = static_cast<std::size_t>(g * len + i);
        const auto row = enc.grouping.index[slot];
        if (row >= 0 && enc.grouping.mask[slot] && enc.meta[static_cast<std::size_t>(row)].ego) {
          ++n;
        }
      }
      for (std::int64_t i = 0; i < len && n > 0; ++i) {
        const auto slot = static_cast<std::size_t>(g * len + i);
        const auto row = enc.grouping.index[slot];
        if (row >= 0 && enc.grouping.mask[slot] && enc.meta[static_cast<std::size_t>(row)].ego) {
          pool[slot] = 1.0 / static_cast<double>(n);
        }
      }
    }
    const Var pooled = numerics::reshape(
      numerics::matmul(p.tape().constant(std::move(pool)), enc.memory), Shape{b, d});
    std::vector<std::int64_t> per_mode;
    for (std::int64_t g = 0; g < b; ++g) {
      per_mode.insert(per_mode.end(), static_cast<std::size_t>(k), g);
    }
    return numerics::add(
      numerics::gather_rows(pooled, per_mode), numerics::gather_rows(queries, block_rows(b, 0, 0, k)));
  }

  const std::int64_t n_q = queries.shape()[0];
  const std::int64_t c = n_q - k;
  Var x = numerics::reshape(numerics::gather_rows(queries, block_rows(b, 0, 0, n_q)), Shape{b, n_q, d});
  const AttnMask mask = AttnMask::keys(enc.grouping.mask);
  for (std::int64_t l = 0; l < cfg.pid_decoder_layers; ++l) {
    x = numerics::decoder_block(p, layer_prefix("pid.dec", l), x, enc.memory, cfg.n_heads, mask);
  }
  x = numerics::apply_layer_norm(p, "pid.ln_f", x);
  const Var flat = numerics::reshape(x, Shape{b * n_q, d});
  Var z_ego = numerics::gather_rows(flat, block_rows(b, n_q, 0, k));
  if (!cfg.use_ca || c == 0) {
    return z_ego;
  }
  const Var z_ctx = numerics::reshape(
    numerics::gather_rows(flat, block_rows(b, n_q, k, c)), Shape{b, c, d});
  const Var ego3 = numerics::reshape(z_ego, Shape{b, k, d});
  const Var q = numerics::apply_layer_norm(p, "pid.ca.ln_q", ego3);
  const Var kv = numerics::apply_layer_norm(p, "pid.ca.ln_kv", z_ctx);
  const Var refined = numerics::add(ego3, numerics::mha(p, "pid.ca.attn", q, kv, kv, cfg.n_heads));
  return numerics::reshape(refined, Shape{b * k, d});
}

/// Lower-triangular ones [n x n]; multiplying displacements by it yields positions.
inline Tensor cumsum_matrix(std::int64_t n)
{
  Tensor m(Shape{n, n});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j <= i; ++j) {
      m[static_cast<std::size_t>(i * n + j)] = 1.0;
    }
  }
  return m;
}

/// Prediction head: positions [rows x max_t_pred x 2] in the normalized frame.
inline Var rollout(ParamBinding & p, const ModelConfig & cfg, Var z)
{
  const std::int64_t rows = z.shape()[0];
  Var h = numerics::apply_layer_norm(p, "head.ln", z);
  h = numerics::apply_mlp2(p, "head.mlp", h);
  const Var disp = numerics::reshape(h, Shape{rows, cfg.max_t_pred, 2});
  return numerics::matmul(p.tape().constant(cumsum_matrix(cfg.max_t_pred)), disp);
}

/// K predicted futures of one ego agent, modes [K x t_pred x 2].
struct Prediction
{
  std::int64_t n_modes = 0;
  std::int64_t t_pred = 0;
  std::vector<double> modes;

  double at(std::int64_t k, std::int64_t t, std::int64_t c) const
  {
    return modes[static_cast<std::size_t>((k * t_pred + t) * 2 + c)];
  }
};

inline void check_horizon(const ModelConfig & cfg, std::int64_t t_pred)
{
  if (t_pred < 1 || t_pred > cfg.max_t_pred) {
    throw HorizonError(
      "requested horizon " + std::to_string(t_pred) + " outside [1, " +
      std::to_string(cfg.max_t_pred) + "]");
  }
}

/// Truncates the rollout rows of sample `b` to t_pred frames.
inline Prediction slice_prediction(
  const Tensor & positions, std::int64_t b, std::int64_t n_modes, std::int64_t t_pred)
{
  const std::int64_t t_max = positions.shape()[1];
  Prediction out;
  out.n_modes = n_modes;
  out.t_pred = t_pred;
  out.modes.resize(static_cast<std::size_t>(n_modes * t_pred * 2));
  for (std::int64_t k = 0; k < n_modes; ++k) {
    const std::int64_t row = b * n_modes + k;
    for (std::int64_t t = 0; t < t_pred; ++t) {
      for (std::int64_t c = 0; c < 2; ++c) {
        out.modes[static_cast<std::size_t>((k * t_pred + t) * 2 + c)] =
          positions[static_cast<std::size_t>((row * t_max + t) * 2 + c)];
      }
    }
  }
  return out;
}

/// Head applied to one sample's Z*_ego [K x d], truncated to t_pred.
inline Prediction predict(ParamBinding & p, const ModelConfig & cfg, Var z_ego, std::int64_t t_pred)
{
  check_horizon(cfg, t_pred);
  const Var pos = rollout(p, cfg, z_ego);
  return slice_prediction(pos.value(), 0, z_ego.shape()[0], t_pred);
}

/// Every intermediate of one forward pass, for inspection.
struct ForwardTrace
{
  TokenBatch tokens;
  TrajectoryTokens trajectory;
  EncoderOutput encoded;
  Var z_ego;      // [B * K x d]
  Var positions;  // [B * K x max_t_pred x 2]
};

inline ForwardTrace forward_trace(
  ParamBinding & p, const ModelConfig & cfg, const std::vector<const SampleWindow *> & samples,
  Phase phase, std::mt19937_64 & rng)
{
  if (samples.empty()) {
    throw ContractError("forward: empty batch");
  }
  ForwardTrace tr;
  TokenBatch tb = embed_cues(p, cfg, samples);
  std::vector<double> fps;
  for (const auto * s : samples) {
    fps.push_back(s->fps);
  }
  tb = apply_fps(std::move(tb), encode_fps(p, cfg, fps), cfg.fps_variant);
  tr.tokens = apply_masks(std::move(tb), samples, phase, cfg.mask_ratios, rng);
  tr.trajectory = cme_forward(p, cfg, tr.tokens);
  tr.encoded = hie_forward(p, cfg, tr.trajectory);
  tr.z_ego = pid_forward(p, cfg, tr.encoded);
  tr.positions = rollout(p, cfg, tr.z_ego);
  return tr;
}

/// Full pipeline on a batch; returns positions [B * K x max_t_pred x 2], sample-major.
inline Var forward(
  ParamBinding & p, const ModelConfig & cfg, const std::vector<const SampleWindow *> & samples,
  Phase phase, std::mt19937_64 & rng)
{
  return forward_trace(p, cfg, samples, phase, rng).positions;
}

/// Inference on a batch with immutable weights; each sample truncated to its own t_pred.
inline std::vector<Prediction> predict_batch(
  const ParamStore & weights, const ModelConfig & cfg,
  const std::vector<const SampleWindow *> & samples)
{
  for (const auto * s : samples) {
    check_horizon(cfg, s->t_pred);
  }
  numerics::Tape tape;
  ParamBinding p(tape, weights);
  std::mt19937_64 rng(0);
  const Var pos = forward(p, cfg, samples, Phase::eval, rng);
  std::vector<Prediction> out;
  for (std::size_t b = 0; b < samples.size(); ++b) {
    out.push_back(slice_prediction(
      pos.value(), static_cast<std::int64_t>(b), cfg.n_modes, samples[b]->t_pred));
  }
  return out;
}

inline Prediction predict_sample(
  const ParamStore & weights, const ModelConfig & cfg, const SampleWindow & sample,
  std::int64_t t_pred = -1)
{
  SampleWindow s = sample;
  if (t_pred > 0) {
    s.t_pred = t_pred;
  }
  return predict_batch(weights, cfg, {&s}).front();
}

}  // namespace omnitraj::model

#endif  // OMNITRAJ__MODEL__NETWORK_HPP_
