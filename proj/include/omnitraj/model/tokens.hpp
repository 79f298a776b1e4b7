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

#ifndef OMNITRAJ__MODEL__TOKENS_HPP_
#define OMNITRAJ__MODEL__TOKENS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "omnitraj/model/config.hpp"
#include "omnitraj/model/weights.hpp"
#include "omnitraj/numerics/layers.hpp"
#include "omnitraj/numerics/ops.hpp"
#include "omnitraj/trajstore/types.hpp"

namespace omnitraj::model
{

using numerics::ParamBinding;
using numerics::Tape;
using numerics::Var;
using trajstore::SampleWindow;

enum class Phase { pretrain, finetune, eval };

struct TokenMeta
{
  std::int32_t sample = 0;
  std::int32_t agent = -1;  // -1 for the frame-rate token
  CueKind cue = CueKind::T;
  std::int32_t time = -1;
  std::int32_t element = 0;
  bool fps_token = false;
  bool ego = false;
};

/**
 * @brief Embedded tokens of a batch of samples.
 *
 * Tokens of all samples are stacked along the first axis of `tokens` [n_tokens x d_model];
 * `meta` says where each came from. A token whose key_mask entry is 0 is never attended.
 */
struct TokenBatch
{
  Var tokens;
  std::vector<TokenMeta> meta;
  std::vector<std::uint8_t> key_mask;
  std::int64_t n_samples = 0;

  std::int64_t count(std::int64_t sample) const
  {
    return std::count_if(meta.begin(), meta.end(), [sample](const TokenMeta & m) {
      return m.sample == sample;
    });
  }
};

/// Sinusoidal encoding of frame order, [max_len x d].
inline Tensor positional_table(std::int64_t max_len, std::int64_t d)
{
  Tensor pe(Shape{max_len, d});
  for (std::int64_t t = 0; t < max_len; ++t) {
    for (std::int64_t i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe[t * d + i] = std::sin(static_cast<double>(t) * freq);
      if (i + 1 < d) {
        pe[t * d + i + 1] = std::cos(static_cast<double>(t) * freq);
      }
    }
  }
  return pe;
}

/**
 * Per-cue two-layer perceptron embedding of every (agent, frame, element) feature vector,
 * plus the positional encoding of the frame index, a two-class identity embedding (ego or
 * neighbour) and, for pose cues, a per-keypoint embedding. Tokens of invalid frames are
 * emitted with key_mask 0.
 */
inline TokenBatch embed_cues(
  ParamBinding & p, const ModelConfig & cfg, const std::vector<const SampleWindow *> & samples)
{
  Tape & tape = p.tape();
  const std::int64_t d = cfg.d_model;
  TokenBatch tb;
  tb.n_samples = static_cast<std::int64_t>(samples.size());
  for (const auto * s : samples) {
    for (const auto & [kind, cue] : s->obs) {
      if (cfg.cues_enabled.count(kind) == 0) {
        throw ConfigError(
          "cue " + std::string(trajstore::cue_name(kind)) +
          " present in sample but disabled in the model config");
      }
      if (cue.layout.elements != cfg.elements(kind)) {
        throw ConfigError(
          "cue " + std::string(trajstore::cue_name(kind)) + " has " +
          std::to_string(cue.layout.elements) + " elements, model expects " +
          std::to_string(cfg.elements(kind)));
      }
    }
    if (s->t_obs > cfg.max_t_obs) {
      throw ConfigError(
        "sample t_obs " + std::to_string(s->t_obs) + " exceeds max_t_obs " +
        std::to_string(cfg.max_t_obs));
    }
  }

  const Var pe = tape.constant(positional_table(cfg.max_t_obs, d));
  const Var identity = p("embed.identity");
  std::vector<Var> parts;
  for (auto c : trajstore::kAllCues) {
    if (cfg.cues_enabled.count(c) == 0) {
      continue;
    }
    const std::int64_t f = trajstore::cue_features(c);
    const std::int64_t e_c = cfg.elements(c);
    std::vector<double> feats;
    std::vector<std::int64_t> pe_idx;
    std::vector<std::int64_t> id_idx;
    std::vector<std::int64_t> kp_idx;
    for (std::size_t b = 0; b < samples.size(); ++b) {
      const SampleWindow & s = *samples[b];
      auto it = s.obs.find(c);
      if (it == s.obs.end()) {
        continue;
      }
      const auto & values = it->second.values;
      for (std::int64_t a = 0; a < s.n_agents; ++a) {
        for (std::int64_t t = 0; t < s.t_obs; ++t) {
          for (std::int64_t e = 0; e < e_c; ++e) {
            const float * src = values.data() + ((a * s.t_obs + t) * e_c + e) * f;
            feats.insert(feats.end(), src, src + f);
            pe_idx.push_back(t);
            id_idx.push_back(a == s.ego_index ? 0 : 1);
            kp_idx.push_back(e);
            tb.meta.push_back(TokenMeta{
              static_cast<std::int32_t>(b), static_cast<std::int32_t>(a), c,
              static_cast<std::int32_t>(t), static_cast<std::int32_t>(e), false,
              a == s.ego_index});
            tb.key_mask.push_back(s.valid(a, t) ? 1 : 0);
          }
        }
      }
    }
    if (pe_idx.empty()) {
      continue;
    }
    const auto n = static_cast<std::int64_t>(pe_idx.size());
    const Var x = tape.constant(Tensor(Shape{n, f}, std::move(feats)));
    Var h = numerics::apply_mlp2(p, cue_prefix(c) + ".mlp", x);
    h = numerics::add(h, numerics::gather_rows(pe, pe_idx));
    h = numerics::add(h, numerics::gather_rows(identity, id_idx));
    if (trajstore::is_pose(c)) {
      h = numerics::add(h, numerics::gather_rows(p(cue_prefix(c) + ".keypoint"), kp_idx));
    }
    parts.push_back(h);
  }
  tb.tokens = parts.size() == 1 ? parts.front() : numerics::concat_rows(parts);
  return tb;
}

/// Frame-rate conditioning of a batch, one row per sample.
struct FpsConditioning
{
  FpsVariant variant = FpsVariant::none;
  Var embedding;  // mlp_sum, mlp_token, codebook: [B x d]
  Var gamma;      // film: [B x d]
  Var beta;       // film: [B x d]
  std::vector<std::int64_t> codebook_index;
};

/// Index of the codebook key closest to r (first one on ties).
inline std::int64_t nearest_codebook_key(const std::vector<double> & keys, double r)
{
  std::int64_t best = 0;
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (std::abs(keys[i] - r) < std::abs(keys[static_cast<std::size_t>(best)] - r)) {
      best = static_cast<std::int64_t>(i);
    }
  }
  return best;
}

inline FpsConditioning encode_fps(
  ParamBinding & p, const ModelConfig & cfg, const std::vector<double> & fps)
{
  for (double r : fps) {
    if (!(r > 0.0)) {
      throw DomainError("encode_fps: frame rate must be positive");
    }
  }
  FpsConditioning cond;
  cond.variant = cfg.fps_variant;
  const auto b = static_cast<std::int64_t>(fps.size());
  auto scalar_input = [&]() {
    std::vector<double> x;
    for (double r : fps) {
      x.push_back(r / cfg.fps_reference);
    }
    return p.tape().constant(Tensor(Shape{b, 1}, std::move(x)));
  };
  switch (cfg.fps_variant) {
    case FpsVariant::none:
      break;
    case FpsVariant::mlp_sum:
    case FpsVariant::mlp_token:
      cond.embedding = numerics::apply_mlp2(p, "fps.mlp", scalar_input());
      break;
    case FpsVariant::film: {
      const Var x = scalar_input();
      const Var ones = p.tape().constant(Tensor(Shape{b, cfg.d_model}, 1.0));
      cond.gamma = numerics::add(ones, numerics::apply_mlp2(p, "fps.gamma", x));
      cond.beta = numerics::apply_mlp2(p, "fps.beta", x);
      break;
    }
    case FpsVariant::codebook:
      for (double r : fps) {
        cond.codebook_index.push_back(nearest_codebook_key(cfg.codebook_keys, r));
      }
      cond.embedding = numerics::gather_rows(p("fps.codebook"), cond.codebook_index);
      break;
  }
  return cond;
}

inline TokenBatch apply_fps(TokenBatch tb, const FpsConditioning & cond, FpsVariant variant)
{
  if (cond.variant != variant) {
    throw ContractError(
      "apply_fps: conditioning built for " + fps_variant_name(cond.variant) + ", model uses " +
      fps_variant_name(variant));
  }
  std::vector<std::int64_t> rows;
  rows.reserve(tb.meta.size());
  for (const auto & m : tb.meta) {
    rows.push_back(m.sample);
  }
  switch (variant) {
    case FpsVariant::none:
      break;
    case FpsVariant::mlp_sum:
    case FpsVariant::codebook:
      tb.tokens = numerics::add(tb.tokens, numerics::gather_rows(cond.embedding, rows));
      break;
    case FpsVariant::film:
      tb.tokens = numerics::add(
        numerics::mul(tb.tokens, numerics::gather_rows(cond.gamma, rows)),
        numerics::gather_rows(cond.beta, rows));
      break;
    case FpsVariant::mlp_token:
      tb.tokens = numerics::concat_rows({tb.tokens, cond.embedding});
      for (std::int64_t b = 0; b < tb.n_samples; ++b) {
        TokenMeta m;
        m.sample = static_cast<std::int32_t>(b);
        m.fps_token = true;
        tb.meta.push_back(m);
        tb.key_mask.push_back(1);
      }
      break;
  }
  return tb;
}

/// Number of frames temporal masking removes from an agent with t_obs observed frames.
inline std::int64_t temporal_drop_count(std::int64_t t_obs, double ratio)
{
  return t_obs <= 2 ? 0 : std::lround(ratio * static_cast<double>(t_obs - 2));
}

/**
 * Stochastic token dropping for pre-training; other phases return the batch unchanged.
 *
 * Per agent: each non-trajectory cue is dropped with probability `modality`; per frame,
 * round(spatial * e) keypoint tokens of each pose cue are dropped; round(temporal * (t_obs-2))
 * frames among all but the last two are dropped with all their tokens. Dropping clears the
 * key_mask entry, so the last two observed trajectory tokens of every agent survive.
 */
inline TokenBatch apply_masks(
  TokenBatch tb, const std::vector<const SampleWindow *> & samples, Phase phase,
  const MaskRatios & ratios, std::mt19937_64 & rng)
{
  if (phase != Phase::pretrain) {
    return tb;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // drop decisions keyed by (sample, agent, ...)
  std::map<std::tuple<int, int, int>, bool> cue_dropped;
  std::map<std::tuple<int, int, int, int, int>, bool> kp_dropped;
  std::map<std::tuple<int, int, int>, bool> frame_dropped;
  std::map<int, std::set<CueKind>> cues_of_sample;
  for (const auto & m : tb.meta) {
    if (!m.fps_token) {
      cues_of_sample[m.sample].insert(m.cue);
    }
  }
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const SampleWindow & s = *samples[b];
    const int bi = static_cast<int>(b);
    const auto & cues = cues_of_sample[bi];
    for (std::int64_t a = 0; a < s.n_agents; ++a) {
      const int ai = static_cast<int>(a);
      for (auto c : cues) {
        if (c != CueKind::T && unit(rng) < ratios.modality) {
          cue_dropped[{bi, ai, static_cast<int>(c)}] = true;
        }
      }
      for (auto c : cues) {
        if (!trajstore::is_pose(c)) {
          continue;
        }
        const std::int64_t e = s.obs.at(c).layout.elements;
        const std::int64_t n_drop = std::lround(ratios.spatial * static_cast<double>(e));
        std::vector<int> kps(static_cast<std::size_t>(e));
        std::iota(kps.begin(), kps.end(), 0);
        for (std::int64_t t = 0; t < s.t_obs; ++t) {
          std::shuffle(kps.begin(), kps.end(), rng);
          for (std::int64_t k = 0; k < n_drop; ++k) {
            kp_dropped[{bi, ai, static_cast<int>(c), static_cast<int>(t), kps[k]}] = true;
          }
        }
      }
      const std::int64_t n_drop = temporal_drop_count(s.t_obs, ratios.temporal);
      std::vector<int> frames(static_cast<std::size_t>(std::max<std::int64_t>(0, s.t_obs - 2)));
      std::iota(frames.begin(), frames.end(), 0);
      std::shuffle(frames.begin(), frames.end(), rng);
      for (std::int64_t k = 0; k < n_drop; ++k) {
        frame_dropped[{bi, ai, frames[k]}] = true;
      }
    }
  }
  for (std::size_t i = 0; i < tb.meta.size(); ++i) {
    const auto & m = tb.meta[i];
    if (m.fps_token) {
      continue;
    }
    bool drop = frame_dropped.count({m.sample, m.agent, m.time}) != 0;
    if (m.cue != CueKind::T) {
      drop = drop || cue_dropped.count({m.sample, m.agent, static_cast<int>(m.cue)}) != 0;
    }
    if (trajstore::is_pose(m.cue)) {
      drop = drop ||
             kp_dropped.count({m.sample, m.agent, static_cast<int>(m.cue), m.time, m.element}) != 0;
    }
    if (drop) {
      tb.key_mask[i] = 0;
    }
  }
  return tb;
}

}  // namespace omnitraj::model

#endif  // OMNITRAJ__MODEL__TOKENS_HPP_
