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

#ifndef OMNITRAJ__MODEL__WEIGHTS_HPP_
#define OMNITRAJ__MODEL__WEIGHTS_HPP_

#include <cstdint>
#include <random>
#include <string>

#include "omnitraj/model/config.hpp"
#include "omnitraj/numerics/layers.hpp"
#include "omnitraj/numerics/tape.hpp"

namespace omnitraj::model
{

using numerics::ParamStore;
using numerics::Shape;
using numerics::Tensor;

inline std::string cue_prefix(CueKind c) { return "embed." + std::string(trajstore::cue_name(c)); }
inline std::string layer_prefix(const std::string & stack, std::int64_t l)
{
  return stack + "." + std::to_string(l);
}

/**
 * Initial parameters for a configuration.
 *
 * Each parameter group draws from its own stream seeded by (config seed, group name), so two
 * configurations that differ only in optional components share every common weight.
 * Projections are Xavier-uniform; biases zero; layer norms identity; the ego-centric
 * cross-attention output projection and the FiLM output layers start at zero.
 */
inline ParamStore init_weights(const ModelConfig & cfg)
{
  cfg.validate();
  ParamStore store;
  const std::int64_t d = cfg.d_model;
  auto rng_for = [&cfg](const std::string & group) {
    return std::mt19937_64(derive_seed(cfg.seed, group));
  };

  for (auto c : cfg.cues_enabled) {
    const auto prefix = cue_prefix(c);
    auto rng = rng_for(prefix);
    numerics::init_mlp2(store, prefix + ".mlp", trajstore::cue_features(c), d, d, rng);
    if (trajstore::is_pose(c)) {
      store.set(prefix + ".keypoint", numerics::xavier_uniform(cfg.elements(c), d, rng));
    }
  }
  {
    auto rng = rng_for("embed.identity");
    store.set("embed.identity", numerics::xavier_uniform(2, d, rng));
  }

  switch (cfg.fps_variant) {
    case FpsVariant::none:
      break;
    case FpsVariant::mlp_sum:
    case FpsVariant::mlp_token: {
      auto rng = rng_for("fps.mlp");
      numerics::init_mlp2(store, "fps.mlp", 1, d, d, rng);
      break;
    }
    case FpsVariant::film: {
      auto rng = rng_for("fps.film");
      numerics::init_mlp2(store, "fps.gamma", 1, d, d, rng, true);
      numerics::init_mlp2(store, "fps.beta", 1, d, d, rng, true);
      break;
    }
    case FpsVariant::codebook: {
      auto rng = rng_for("fps.codebook");
      store.set(
        "fps.codebook",
        numerics::xavier_uniform(static_cast<std::int64_t>(cfg.codebook_keys.size()), d, rng));
      break;
    }
  }

  for (std::int64_t l = 0; l < cfg.cme_layers; ++l) {
    auto rng = rng_for(layer_prefix("cme", l));
    numerics::init_encoder_block(store, layer_prefix("cme", l), d, rng);
  }
  numerics::init_layer_norm(store, "cme.ln_f", d);

  if (cfg.use_hie) {
    for (std::int64_t l = 0; l < cfg.hie_layers; ++l) {
      auto rng = rng_for(layer_prefix("hie", l));
      numerics::init_encoder_block(store, layer_prefix("hie", l), d, rng);
    }
    numerics::init_layer_norm(store, "hie.ln_f", d);
  }

  {
    auto rng = rng_for("pid.queries");
    const std::int64_t n_queries = cfg.n_modes + (cfg.use_decoder ? cfg.n_ctx_queries : 0);
    store.set("pid.queries", numerics::xavier_uniform(n_queries, d, rng));
  }
  if (cfg.use_decoder) {
    for (std::int64_t l = 0; l < cfg.pid_decoder_layers; ++l) {
      auto rng = rng_for(layer_prefix("pid.dec", l));
      numerics::init_decoder_block(store, layer_prefix("pid.dec", l), d, rng);
    }
    numerics::init_layer_norm(store, "pid.ln_f", d);
    if (cfg.use_ca) {
      auto rng = rng_for("pid.ca");
      numerics::init_layer_norm(store, "pid.ca.ln_q", d);
      numerics::init_layer_norm(store, "pid.ca.ln_kv", d);
      numerics::init_mha(store, "pid.ca.attn", d, rng, true);
    }
  }

  {
    auto rng = rng_for("head");
    numerics::init_layer_norm(store, "head.ln", d);
    numerics::init_mlp2(store, "head.mlp", d, d, cfg.max_t_pred * 2, rng);
  }
  return store;
}

}  // namespace omnitraj::model

#endif  // OMNITRAJ__MODEL__WEIGHTS_HPP_
