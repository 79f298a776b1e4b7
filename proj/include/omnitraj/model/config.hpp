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

#ifndef OMNITRAJ__MODEL__CONFIG_HPP_
#define OMNITRAJ__MODEL__CONFIG_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omnitraj/trajstore/types.hpp"
#include "omnitraj/util/error.hpp"
#include "omnitraj/util/hash.hpp"

namespace omnitraj::model
{

using trajstore::CueKind;

/// How the frame rate enters the network.
enum class FpsVariant { none, mlp_sum, mlp_token, film, codebook };

inline const std::vector<FpsVariant> & all_fps_variants()
{
  static const std::vector<FpsVariant> v{
    FpsVariant::none, FpsVariant::film, FpsVariant::codebook, FpsVariant::mlp_token,
    FpsVariant::mlp_sum};
  return v;
}

inline std::string fps_variant_name(FpsVariant v)
{
  switch (v) {
    case FpsVariant::none:
      return "none";
    case FpsVariant::mlp_sum:
      return "mlp_sum";
    case FpsVariant::mlp_token:
      return "mlp_token";
    case FpsVariant::film:
      return "film";
    case FpsVariant::codebook:
      return "codebook";
  }
  return "?";
}

inline FpsVariant parse_fps_variant(const std::string & s)
{
  for (auto v : all_fps_variants()) {
    if (fps_variant_name(v) == s) {
      return v;
    }
  }
  throw ConfigError("unknown fps_variant '" + s + "'");
}

struct MaskRatios
{
  double modality = 0.3;
  double spatial = 0.5;
  double temporal = 0.75;
};

struct ModelConfig
{
  std::int64_t d_model = 64;
  std::int64_t n_heads = 4;
  std::int64_t cme_layers = 6;
  std::int64_t hie_layers = 4;
  std::int64_t pid_decoder_layers = 2;
  std::int64_t n_modes = 20;
  std::int64_t max_t_obs = 16;
  std::int64_t max_t_pred = 20;
  std::set<CueKind> cues_enabled{CueKind::T};
  /// Element count per non-trajectory cue.
  std::map<CueKind, std::int64_t> cue_elements{
    {CueKind::P3, 17}, {CueKind::P2, 17}, {CueKind::B3, 2}, {CueKind::B2, 2}};
  FpsVariant fps_variant = FpsVariant::mlp_sum;
  MaskRatios mask_ratios;
  std::int64_t n_ctx_queries = 8;
  double fps_reference = 25.0;
  /// Frame rates with a learned codebook entry (codebook variant only).
  std::vector<double> codebook_keys{5.0, 2.5};
  bool use_hie = true;
  bool use_decoder = true;
  bool use_ca = true;
  std::uint64_t seed = 0;

  std::int64_t elements(CueKind c) const
  {
    return c == CueKind::T ? 1 : cue_elements.at(c);
  }

  void validate() const
  {
    if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
      throw ConfigError("model: d_model must be a positive multiple of n_heads");
    }
    if (cme_layers < 0 || hie_layers < 0 || pid_decoder_layers < 0) {
      throw ConfigError("model: layer counts must be >= 0");
    }
    if (n_modes < 1) {
      throw ConfigError("model: n_modes must be >= 1");
    }
    if (max_t_obs < 2 || max_t_pred < 1) {
      throw ConfigError("model: max_t_obs must be >= 2 and max_t_pred >= 1");
    }
    if (n_ctx_queries < 0) {
      throw ConfigError("model: n_ctx_queries must be >= 0");
    }
    if (!(fps_reference > 0.0)) {
      throw ConfigError("model: fps_reference must be positive");
    }
    if (cues_enabled.count(CueKind::T) == 0) {
      throw ConfigError("model: the trajectory cue must be enabled");
    }
    for (auto c : {CueKind::P3, CueKind::P2, CueKind::B3, CueKind::B2}) {
      if (cue_elements.count(c) == 0 || cue_elements.at(c) < 1) {
        throw ConfigError("model: cue_elements must give a positive count for every cue");
      }
    }
    for (double r : {mask_ratios.modality, mask_ratios.spatial, mask_ratios.temporal}) {
      if (r < 0.0 || r > 1.0) {
        throw ConfigError("model: mask ratios must lie in [0, 1]");
      }
    }
    if (fps_variant == FpsVariant::codebook) {
      if (codebook_keys.empty()) {
        throw ConfigError("model: codebook variant needs at least one key");
      }
      for (double k : codebook_keys) {
        if (!(k > 0.0)) {
          throw ConfigError("model: codebook keys must be positive");
        }
      }
    }
    if (use_ca && !use_decoder) {
      throw ConfigError("model: use_ca requires use_decoder");
    }
  }

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["d_model"] = d_model;
    j["n_heads"] = n_heads;
    j["cme_layers"] = cme_layers;
    j["hie_layers"] = hie_layers;
    j["pid_decoder_layers"] = pid_decoder_layers;
    j["n_modes"] = n_modes;
    j["max_t_obs"] = max_t_obs;
    j["max_t_pred"] = max_t_pred;
    std::vector<std::string> cues;
    for (auto c : cues_enabled) {
      cues.emplace_back(trajstore::cue_name(c));
    }
    j["cues_enabled"] = cues;
    nlohmann::json ce = nlohmann::json::object();
    for (const auto & [c, n] : cue_elements) {
      ce[std::string(trajstore::cue_name(c))] = n;
    }
    j["cue_elements"] = ce;
    j["fps_variant"] = fps_variant_name(fps_variant);
    j["mask_ratios"] = {
      {"modality", mask_ratios.modality},
      {"spatial", mask_ratios.spatial},
      {"temporal", mask_ratios.temporal}};
    j["n_ctx_queries"] = n_ctx_queries;
    j["fps_reference"] = fps_reference;
    j["codebook_keys"] = codebook_keys;
    j["use_hie"] = use_hie;
    j["use_decoder"] = use_decoder;
    j["use_ca"] = use_ca;
    j["seed"] = seed;
    return j;
  }

  /// Fills fields present in j; unknown keys are rejected with the key named.
  static ModelConfig from_json(const nlohmann::json & j, const std::string & where = "model")
  {
    ModelConfig c;
    if (!j.is_object()) {
      throw ConfigError(where + ": expected an object");
    }
    for (const auto & [key, v] : j.items()) {
      const std::string path = where + "." + key;
      try {
        if (key == "d_model") {
          c.d_model = v.get<std::int64_t>();
        } else if (key == "n_heads") {
          c.n_heads = v.get<std::int64_t>();
        } else if (key == "cme_layers") {
          c.cme_layers = v.get<std::int64_t>();
        } else if (key == "hie_layers") {
          c.hie_layers = v.get<std::int64_t>();
        } else if (key == "pid_decoder_layers") {
          c.pid_decoder_layers = v.get<std::int64_t>();
        } else if (key == "n_modes") {
          c.n_modes = v.get<std::int64_t>();
        } else if (key == "max_t_obs") {
          c.max_t_obs = v.get<std::int64_t>();
        } else if (key == "max_t_pred") {
          c.max_t_pred = v.get<std::int64_t>();
        } else if (key == "cues_enabled") {
          c.cues_enabled.clear();
          for (const auto & s : v) {
            c.cues_enabled.insert(trajstore::parse_cue(s.get<std::string>()));
          }
        } else if (key == "cue_elements") {
          for (const auto & [ck, n] : v.items()) {
            const auto cue = trajstore::parse_cue(ck);
            if (cue == CueKind::T) {
              throw ConfigError(path + ": trajectory element count is fixed");
            }
            c.cue_elements[cue] = n.get<std::int64_t>();
          }
        } else if (key == "fps_variant") {
          c.fps_variant = parse_fps_variant(v.get<std::string>());
        } else if (key == "mask_ratios") {
          for (const auto & [mk, mv] : v.items()) {
            if (mk == "modality") {
              c.mask_ratios.modality = mv.get<double>();
            } else if (mk == "spatial") {
              c.mask_ratios.spatial = mv.get<double>();
            } else if (mk == "temporal") {
              c.mask_ratios.temporal = mv.get<double>();
            } else {
              throw ConfigError("unknown config key '" + path + "." + mk + "'");
            }
          }
        } else if (key == "n_ctx_queries") {
          c.n_ctx_queries = v.get<std::int64_t>();
        } else if (key == "fps_reference") {
          c.fps_reference = v.get<double>();
        } else if (key == "codebook_keys") {
          c.codebook_keys = v.get<std::vector<double>>();
        } else if (key == "use_hie") {
          c.use_hie = v.get<bool>();
        } else if (key == "use_decoder") {
          c.use_decoder = v.get<bool>();
        } else if (key == "use_ca") {
          c.use_ca = v.get<bool>();
        } else if (key == "seed") {
          c.seed = v.get<std::uint64_t>();
        } else {
          throw ConfigError("unknown config key '" + path + "'");
        }
      } catch (const nlohmann::json::exception & e) {
        throw ConfigError("invalid value for '" + path + "': " + e.what());
      }
    }
    c.validate();
    return c;
  }

  /// Digest of the canonical JSON form of the architecture (seed and training-time mask
  /// ratios excluded); checkpoints carry it.
  std::uint64_t digest() const
  {
    auto j = to_json();
    j.erase("seed");
    j.erase("mask_ratios");
    return fnv1a64(j.dump());
  }
};

}  // namespace omnitraj::model

#endif  // OMNITRAJ__MODEL__CONFIG_HPP_
