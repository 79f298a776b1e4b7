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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "omnitraj/model/network.hpp"
#include "omnitraj/numerics/gradcheck.hpp"
#include "omnitraj/trajstore/windows.hpp"

namespace
{

using namespace omnitraj;
using namespace omnitraj::model;
using numerics::Tape;
using trajstore::ObsCue;

ModelConfig tiny_config(FpsVariant v = FpsVariant::none)
{
  ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.cme_layers = 1;
  c.hie_layers = 1;
  c.pid_decoder_layers = 1;
  c.n_modes = 3;
  c.max_t_obs = 10;
  c.max_t_pred = 6;
  c.n_ctx_queries = 2;
  c.fps_variant = v;
  c.seed = 17;
  return c;
}

// Normalized random window; pose_elements > 0 adds a P3 cue.
SampleWindow random_window(
  std::mt19937_64 & rng, std::int64_t n_agents, std::int64_t t_obs, std::int64_t t_pred,
  std::int64_t pose_elements = 0, double fps = 5.0)
{
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  std::bernoulli_distribution gap(0.2);
  SampleWindow s;
  s.scene_id = "w";
  s.fps = fps;
  s.t_obs = t_obs;
  s.t_pred = t_pred;
  s.n_agents = n_agents;
  s.obs[CueKind::T] = ObsCue{{1, 2}, std::vector<float>(static_cast<std::size_t>(n_agents * t_obs * 2))};
  if (pose_elements > 0) {
    s.obs[CueKind::P3] = ObsCue{
      {pose_elements, 3}, std::vector<float>(static_cast<std::size_t>(n_agents * t_obs * pose_elements * 3))};
  }
  for (auto & [k, c] : s.obs) {
    for (auto & v : c.values) {
      v = u(rng);
    }
  }
  for (std::int64_t a = 0; a < n_agents; ++a) {
    for (std::int64_t t = 0; t < t_obs; ++t) {
      s.obs_valid.push_back(a == 0 || !gap(rng) ? 1 : 0);
    }
  }
  for (std::int64_t i = 0; i < 2 * t_pred; ++i) {
    s.future.push_back(u(rng));
  }
  // masked entries hold zeros, as extraction leaves them
  for (auto & [k, c] : s.obs) {
    const auto fs = c.layout.frame_size();
    for (std::int64_t i = 0; i < n_agents * t_obs; ++i) {
      if (!s.obs_valid[static_cast<std::size_t>(i)]) {
        std::fill(c.values.begin() + i * fs, c.values.begin() + (i + 1) * fs, 0.0f);
      }
    }
  }
  return trajstore::normalize(s);
}

// Same window with agents reordered; ego stays first.
SampleWindow permute_agents(const SampleWindow & s, const std::vector<std::int64_t> & order)
{
  SampleWindow p = s;
  for (auto & [k, c] : p.obs) {
    const auto fs = c.layout.frame_size() * s.t_obs;
    for (std::size_t a = 0; a < order.size(); ++a) {
      std::copy(
        s.obs.at(k).values.begin() + order[a] * fs, s.obs.at(k).values.begin() + (order[a] + 1) * fs,
        c.values.begin() + static_cast<std::int64_t>(a) * fs);
    }
  }
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::int64_t t = 0; t < s.t_obs; ++t) {
      p.obs_valid[a * s.t_obs + t] = s.obs_valid[order[a] * s.t_obs + t];
    }
  }
  p.ego_index = std::find(order.begin(), order.end(), s.ego_index) - order.begin();
  return p;
}

Tensor forward_value(const ParamStore & w, const ModelConfig & cfg, const std::vector<const SampleWindow *> & b,
                     Phase phase = Phase::eval, std::uint64_t seed = 0)
{
  Tape t;
  ParamBinding p(t, w);
  std::mt19937_64 rng(seed);
  return forward(p, cfg, b, phase, rng).value();
}

void expect_near(const Tensor & a, const Tensor & b, double tol)
{
  ASSERT_EQ(a.shape(), b.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) {
    ASSERT_NEAR(a[i], b[i], tol) << "index " << i;
  }
}

// ---------- config / weights ----------

TEST(Config, RejectsIndivisibleHeadsAndZeroModes)
{
  auto c = tiny_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.n_modes = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_config();
  c.use_decoder = false;
  EXPECT_THROW(c.validate(), ConfigError);  // CA needs the decoder
}

TEST(Config, DefaultsMirrorReferenceArchitecture)
{
  ModelConfig c;
  EXPECT_EQ(c.cme_layers, 6);
  EXPECT_EQ(c.n_heads, 4);
  EXPECT_EQ(c.hie_layers, 4);
  EXPECT_EQ(c.pid_decoder_layers, 2);
  EXPECT_EQ(c.n_modes, 20);
  EXPECT_EQ(c.n_ctx_queries, 8);
  EXPECT_EQ(c.fps_reference, 25.0);
  EXPECT_EQ(c.mask_ratios.modality, 0.3);
  EXPECT_EQ(c.mask_ratios.spatial, 0.5);
  EXPECT_EQ(c.mask_ratios.temporal, 0.75);
}

TEST(Config, JsonRoundTripAndStrictKeys)
{
  auto c = tiny_config(FpsVariant::film);
  c.cues_enabled.insert(CueKind::P3);
  const auto back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  auto j = c.to_json();
  j["dmodel"] = 3;
  try {
    ModelConfig::from_json(j);
    FAIL();
  } catch (const ConfigError & e) {
    EXPECT_NE(std::string(e.what()).find("dmodel"), std::string::npos);
  }
}

TEST(Weights, InitIsDeterministicAndSharedAcrossVariants)
{
  const auto a = init_weights(tiny_config(FpsVariant::none));
  EXPECT_EQ(a, init_weights(tiny_config(FpsVariant::none)));
  const auto b = init_weights(tiny_config(FpsVariant::mlp_sum));
  for (const auto & [name, t] : a.all()) {
    EXPECT_EQ(b.get(name), t) << name;
  }
  EXPECT_TRUE(b.contains("fps.mlp.fc1.w"));
}

// ---------- embed_cues ----------

TEST(Embed, TrajectoryOnlyTokenCount)
{
  std::mt19937_64 rng(1);
  const auto s = random_window(rng, 3, 10, 4);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s});
  EXPECT_EQ(tb.meta.size(), 30u);
  EXPECT_EQ(tb.tokens.shape(), (Shape{30, 16}));
}

TEST(Embed, DisabledCueIsConfigError)
{
  std::mt19937_64 rng(2);
  const auto s = random_window(rng, 2, 4, 2, 17);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  EXPECT_THROW(embed_cues(p, cfg, {&s}), ConfigError);
}

TEST(Embed, SwappedNeighborsGiveSameTokenMultiset)
{
  std::mt19937_64 rng(3);
  const auto s = random_window(rng, 3, 5, 2, 4);
  const auto sw = permute_agents(s, {0, 2, 1});
  auto cfg = tiny_config();
  cfg.cues_enabled.insert(CueKind::P3);
  cfg.cue_elements[CueKind::P3] = 4;
  const auto w = init_weights(cfg);
  auto rows = [&](const SampleWindow & x) {
    Tape t;
    ParamBinding p(t, w);
    const auto tb = embed_cues(p, cfg, {&x});
    std::vector<std::vector<double>> out;
    const auto & v = tb.tokens.value();
    for (std::size_t i = 0; i < tb.meta.size(); ++i) {
      std::vector<double> r(v.data() + i * 16, v.data() + (i + 1) * 16);
      r.push_back(tb.key_mask[i]);
      out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(rows(s), rows(sw));
}

TEST(Embed, InvalidNeighborFrameDoesNotInfluenceOutput)
{
  std::mt19937_64 rng(4);
  auto s = random_window(rng, 3, 6, 3);
  s.obs_valid[1 * 6 + 2] = 0;
  auto cfg = tiny_config(FpsVariant::mlp_sum);
  const auto w = init_weights(cfg);
  const Tensor base = forward_value(w, cfg, {&s});
  s.xy(1, 2)[0] = 1234.5f;
  s.xy(1, 2)[1] = -99.0f;
  EXPECT_EQ(forward_value(w, cfg, {&s}), base);
}

// ---------- frame-rate conditioning ----------

TEST(Fps, ZeroMlpGivesZeroEmbedding)
{
  auto cfg = tiny_config(FpsVariant::mlp_sum);
  auto w = init_weights(cfg);
  for (auto & [name, t] : w.all()) {
    if (name.rfind("fps.mlp", 0) == 0) {
      t = Tensor(t.shape());
    }
  }
  Tape t;
  ParamBinding p(t, w);
  const auto cond = encode_fps(p, cfg, {0.5, 1.0, 5.0, 60.0});
  for (double v : cond.embedding.value().values()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Fps, FilmStartsAtIdentity)
{
  auto cfg = tiny_config(FpsVariant::film);
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto cond = encode_fps(p, cfg, {1.0, 2.5, 5.0});
  for (double v : cond.gamma.value().values()) {
    EXPECT_EQ(v, 1.0);
  }
  for (double v : cond.beta.value().values()) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Fps, CodebookUsesNearestKey)
{
  auto cfg = tiny_config(FpsVariant::codebook);
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto cond = encode_fps(p, cfg, {1.0, 5.0, 4.0, 2.5});
  EXPECT_EQ(cond.codebook_index, (std::vector<std::int64_t>{1, 0, 0, 1}));
  const auto & table = w.get("fps.codebook");
  for (int c = 0; c < 16; ++c) {
    EXPECT_EQ(cond.embedding.value()[c], table[16 + c]);
  }
}

TEST(Fps, NonPositiveRateIsDomainError)
{
  for (auto v : all_fps_variants()) {
    auto cfg = tiny_config(v);
    const auto w = init_weights(cfg);
    Tape t;
    ParamBinding p(t, w);
    EXPECT_THROW(encode_fps(p, cfg, {0.0}), DomainError);
    EXPECT_THROW(encode_fps(p, cfg, {-1.0}), DomainError);
  }
}

TEST(Fps, ApplyNoneIsBitIdentical)
{
  std::mt19937_64 rng(5);
  const auto s = random_window(rng, 2, 4, 2);
  const auto cfg = tiny_config(FpsVariant::none);
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s});
  const auto out = apply_fps(tb, encode_fps(p, cfg, {s.fps}), FpsVariant::none);
  EXPECT_EQ(out.tokens.value(), tb.tokens.value());
  EXPECT_EQ(out.key_mask, tb.key_mask);
}

TEST(Fps, TokenVariantAddsOneTokenPerSample)
{
  std::mt19937_64 rng(6);
  const auto s1 = random_window(rng, 2, 4, 2);
  const auto s2 = random_window(rng, 3, 3, 2, 0, 2.5);
  const auto cfg = tiny_config(FpsVariant::mlp_token);
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s1, &s2});
  const auto out = apply_fps(tb, encode_fps(p, cfg, {s1.fps, s2.fps}), cfg.fps_variant);
  EXPECT_EQ(out.count(0), tb.count(0) + 1);
  EXPECT_EQ(out.count(1), tb.count(1) + 1);
  EXPECT_EQ(out.key_mask.back(), 1);
}

TEST(Fps, VariantMismatchIsContractError)
{
  std::mt19937_64 rng(7);
  const auto s = random_window(rng, 1, 3, 2);
  const auto cfg = tiny_config(FpsVariant::mlp_sum);
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s});
  EXPECT_THROW(apply_fps(tb, encode_fps(p, cfg, {5.0}), FpsVariant::film), ContractError);
}

TEST(Fps, IdentityAtInitIsBitExact)
{
  std::mt19937_64 rng(8);
  std::vector<SampleWindow> data;
  for (int i = 0; i < 4; ++i) {
    data.push_back(random_window(rng, 1 + i % 3, 3 + i, 1 + i, 0, i % 2 ? 2.5 : 1.0));
  }
  std::vector<const SampleWindow *> batch;
  for (const auto & s : data) {
    batch.push_back(&s);
  }
  const auto base_cfg = tiny_config(FpsVariant::none);
  const auto base_w = init_weights(base_cfg);
  const Tensor ref = forward_value(base_w, base_cfg, batch);

  auto sum_cfg = tiny_config(FpsVariant::mlp_sum);
  auto sum_w = init_weights(sum_cfg);
  sum_w.get("fps.mlp.fc2.w") = Tensor(sum_w.get("fps.mlp.fc2.w").shape());
  EXPECT_EQ(forward_value(sum_w, sum_cfg, batch), ref);

  const auto film_cfg = tiny_config(FpsVariant::film);
  EXPECT_EQ(forward_value(init_weights(film_cfg), film_cfg, batch), ref);
}

// ---------- masking ----------

TEST(Masks, ShortWindowHasNoTemporalDrops)
{
  EXPECT_EQ(temporal_drop_count(2, 0.75), 0);
  EXPECT_EQ(temporal_drop_count(10, 0.75), 6);
  EXPECT_EQ(temporal_drop_count(3, 0.75), 1);
}

TEST(Masks, PretrainDropsExactTemporalCountAndKeepsLastTwo)
{
  std::mt19937_64 rng(9);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_window(rng, 2, 10, 2);
    std::fill(s.obs_valid.begin(), s.obs_valid.end(), 1);
    Tape t;
    ParamBinding p(t, w);
    const auto tb = embed_cues(p, cfg, {&s});
    const auto m = apply_masks(tb, {&s}, Phase::pretrain, cfg.mask_ratios, rng);
    for (int a = 0; a < 2; ++a) {
      int dropped = 0;
      for (std::size_t i = 0; i < m.meta.size(); ++i) {
        if (m.meta[i].agent != a) {
          continue;
        }
        if (m.meta[i].time >= 8) {
          EXPECT_EQ(m.key_mask[i], 1);
        }
        dropped += m.key_mask[i] == 0 ? 1 : 0;
      }
      EXPECT_EQ(dropped, 6);
    }
  }
}

TEST(Masks, ModalityAndSpatialRates)
{
  std::mt19937_64 rng(10);
  auto cfg = tiny_config();
  cfg.cues_enabled.insert(CueKind::P3);
  cfg.mask_ratios.temporal = 0.0;
  const auto w = init_weights(cfg);
  int agents = 0;
  int cue_dropped = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto s = random_window(rng, 2, 3, 1, 17);
    std::fill(s.obs_valid.begin(), s.obs_valid.end(), 1);
    Tape t;
    ParamBinding p(t, w);
    const auto m = apply_masks(embed_cues(p, cfg, {&s}), {&s}, Phase::pretrain, cfg.mask_ratios, rng);
    for (int a = 0; a < 2; ++a) {
      for (int tt = 0; tt < 3; ++tt) {
        int kept = 0;
        for (std::size_t i = 0; i < m.meta.size(); ++i) {
          if (m.meta[i].agent == a && m.meta[i].time == tt && m.meta[i].cue == CueKind::P3) {
            kept += m.key_mask[i];
          }
          if (m.meta[i].agent == a && m.meta[i].time == tt && m.meta[i].cue == CueKind::T) {
            EXPECT_EQ(m.key_mask[i], 1);
          }
        }
        // either the whole cue is gone or exactly round(0.5 * 17) = 9 keypoints are
        EXPECT_TRUE(kept == 0 || kept == 17 - 9) << kept;
        if (tt == 0) {
          ++agents;
          cue_dropped += kept == 0 ? 1 : 0;
        }
      }
    }
  }
  const double rate = static_cast<double>(cue_dropped) / agents;
  EXPECT_NEAR(rate, 0.3, 0.05);
}

TEST(Masks, EvalAndFinetuneLeaveMaskUnchanged)
{
  std::mt19937_64 rng(11);
  const auto s = random_window(rng, 3, 8, 2);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s});
  for (auto phase : {Phase::eval, Phase::finetune}) {
    const auto m = apply_masks(tb, {&s}, phase, cfg.mask_ratios, rng);
    EXPECT_EQ(m.key_mask, tb.key_mask);
  }
  for (std::size_t i = 0; i < tb.meta.size(); ++i) {
    EXPECT_EQ(tb.key_mask[i], s.valid(tb.meta[i].agent, tb.meta[i].time) ? 1 : 0);
  }
}

TEST(Masks, DroppedTokensNeverInfluenceOutput)
{
  std::mt19937_64 rng(12);
  auto cfg = tiny_config(FpsVariant::mlp_token);
  cfg.cues_enabled.insert(CueKind::P3);
  cfg.cue_elements[CueKind::P3] = 5;
  const auto w = init_weights(cfg);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = random_window(rng, 3, 6, 3, 5);
    std::mt19937_64 r1(trial);
    Tape t1;
    ParamBinding p1(t1, w);
    const auto tr = forward_trace(p1, cfg, {&s}, Phase::pretrain, r1);
    auto perturbed = s;
    for (std::size_t i = 0; i < tr.tokens.meta.size(); ++i) {
      const auto & m = tr.tokens.meta[i];
      if (m.fps_token || tr.tokens.key_mask[i]) {
        continue;
      }
      auto & cue = perturbed.obs.at(m.cue);
      const auto f = cue.layout.features;
      float * v = cue.values.data() + ((m.agent * s.t_obs + m.time) * cue.layout.elements + m.element) * f;
      for (std::int64_t c = 0; c < f; ++c) {
        v[c] = 50.0f + static_cast<float>(trial + c);
      }
    }
    std::mt19937_64 r2(trial);
    Tape t2;
    ParamBinding p2(t2, w);
    const auto tr2 = forward_trace(p2, cfg, {&perturbed}, Phase::pretrain, r2);
    EXPECT_EQ(tr2.tokens.key_mask, tr.tokens.key_mask);
    EXPECT_EQ(tr2.positions.value(), tr.positions.value());
  }
}

// ---------- encoders ----------

TEST(Cme, TrajectoryOnlyIsPerAgentTemporalAttention)
{
  std::mt19937_64 rng(13);
  auto s = random_window(rng, 3, 5, 2);
  std::fill(s.obs_valid.begin(), s.obs_valid.end(), 1);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  const auto tb = embed_cues(p, cfg, {&s});
  const auto tr = cme_forward(p, cfg, tb);
  // oracle: run the encoder block on [A, T, d] directly
  Var x = numerics::reshape(tb.tokens, Shape{3, 5, 16});
  x = numerics::encoder_block(p, "cme.0", x, 2, {});
  x = numerics::apply_layer_norm(p, "cme.ln_f", numerics::reshape(x, Shape{15, 16}));
  expect_near(tr.rows.value(), x.value(), 1e-12);
}

TEST(Cme, IdenticalAgentsGetIdenticalOutputs)
{
  std::mt19937_64 rng(14);
  auto s = random_window(rng, 2, 4, 2);
  std::fill(s.obs_valid.begin(), s.obs_valid.end(), 1);
  auto & xy = s.obs.at(CueKind::T).values;
  std::copy(xy.begin(), xy.begin() + 8, xy.begin() + 8);
  auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  auto tb = embed_cues(p, cfg, {&s});
  // identity embedding differs between ego and neighbour; give both the neighbour class
  const Var nb = numerics::gather_rows(p("embed.identity"), {1, 1, 1, 1, 1, 1, 1, 1});
  const Var eg = numerics::gather_rows(p("embed.identity"), {0, 0, 0, 0, 1, 1, 1, 1});
  tb.tokens = numerics::add(numerics::sub(tb.tokens, eg), nb);
  const auto tr = cme_forward(p, cfg, tb);
  const auto & v = tr.rows.value();
  for (int i = 0; i < 4 * 16; ++i) {
    EXPECT_NEAR(v[i], v[4 * 16 + i], 1e-12);
  }
}

TEST(Cme, MaskedPoseTokenValueIsIgnored)
{
  std::mt19937_64 rng(15);
  auto s = random_window(rng, 1, 3, 2, 4);
  auto cfg = tiny_config();
  cfg.cues_enabled.insert(CueKind::P3);
  cfg.cue_elements[CueKind::P3] = 4;
  const auto w = init_weights(cfg);
  auto run = [&](const SampleWindow & x) {
    Tape t;
    ParamBinding p(t, w);
    auto tb = embed_cues(p, cfg, {&x});
    for (std::size_t i = 0; i < tb.meta.size(); ++i) {
      if (tb.meta[i].cue == CueKind::P3 && tb.meta[i].element == 2 && tb.meta[i].time == 1) {
        tb.key_mask[i] = 0;
      }
    }
    return cme_forward(p, cfg, tb).rows.value();
  };
  const Tensor base = run(s);
  auto & pose = s.obs.at(CueKind::P3).values;
  for (int c = 0; c < 3; ++c) {
    pose[(1 * 4 + 2) * 3 + c] = 42.0f;
  }
  EXPECT_EQ(run(s), base);
}

Tensor ego_rows(const EncoderOutput & enc, std::int64_t d)
{
  std::vector<double> out;
  const auto & v = enc.memory.value();
  for (std::size_t slot = 0; slot < enc.grouping.index.size(); ++slot) {
    const auto row = enc.grouping.index[slot];
    if (row >= 0 && enc.meta[static_cast<std::size_t>(row)].ego) {
      out.insert(out.end(), v.data() + slot * d, v.data() + (slot + 1) * d);
    }
  }
  return Tensor(Shape{static_cast<std::int64_t>(out.size()) / d, d}, out);
}

EncoderOutput encode(const ParamStore & w, const ModelConfig & cfg, const SampleWindow & s, Tape & t)
{
  ParamBinding p(t, w);
  std::mt19937_64 rng(0);
  return forward_trace(p, cfg, {&s}, Phase::eval, rng).encoded;
}

TEST(Hie, NeighborPermutationLeavesEgoRowsUnchanged)
{
  std::mt19937_64 rng(16);
  const auto s = random_window(rng, 4, 5, 2);
  const auto sp = permute_agents(s, {0, 3, 1, 2});
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t1, t2;
  const auto e1 = encode(w, cfg, s, t1);
  const auto e2 = encode(w, cfg, sp, t2);
  expect_near(ego_rows(e1, 16), ego_rows(e2, 16), 1e-12);
  // neighbour rows move with their agent
  const auto & m1 = e1.memory.value();
  const auto & m2 = e2.memory.value();
  for (int tt = 0; tt < 5; ++tt) {
    for (int c = 0; c < 16; ++c) {
      EXPECT_NEAR(m1[(3 * 5 + tt) * 16 + c], m2[(1 * 5 + tt) * 16 + c], 1e-12);
    }
  }
}

TEST(Hie, FullyMaskedNeighborsMatchSingleAgent)
{
  std::mt19937_64 rng(17);
  auto s = random_window(rng, 3, 5, 2);
  for (std::int64_t i = 5; i < 15; ++i) {
    s.obs_valid[static_cast<std::size_t>(i)] = 0;
  }
  SampleWindow solo = s;
  solo.n_agents = 1;
  solo.obs_valid.resize(5);
  solo.obs.at(CueKind::T).values.resize(10);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  Tape t1, t2;
  EXPECT_EQ(ego_rows(encode(w, cfg, s, t1), 16), ego_rows(encode(w, cfg, solo, t2), 16));
}

// ---------- decoder ----------

Tensor z_ego(const ParamStore & w, const ModelConfig & cfg, const SampleWindow & s)
{
  Tape t;
  ParamBinding p(t, w);
  std::mt19937_64 rng(0);
  return forward_trace(p, cfg, {&s}, Phase::eval, rng).z_ego.value();
}

TEST(Pid, ZeroCrossAttentionProjectionIsResidualIdentity)
{
  std::mt19937_64 rng(18);
  const auto s = random_window(rng, 2, 4, 2);
  auto cfg = tiny_config();
  const auto w = init_weights(cfg);  // CA output projection starts at zero
  auto no_ca = cfg;
  no_ca.use_ca = false;
  EXPECT_EQ(z_ego(w, cfg, s), z_ego(w, no_ca, s));
}

TEST(Pid, EmptyContextIsIdentity)
{
  std::mt19937_64 rng(19);
  const auto s = random_window(rng, 2, 4, 2);
  auto cfg = tiny_config();
  cfg.n_ctx_queries = 0;
  auto w = init_weights(cfg);
  auto & o = w.get("pid.ca.attn.o.w");
  std::normal_distribution<double> n;
  for (auto & v : o.values()) {
    v = n(rng);
  }
  auto no_ca = cfg;
  no_ca.use_ca = false;
  EXPECT_EQ(z_ego(w, cfg, s), z_ego(w, no_ca, s));
}

TEST(Pid, PermutingContextQueriesLeavesEgoUnchanged)
{
  std::mt19937_64 rng(20);
  const auto s = random_window(rng, 3, 4, 2);
  auto cfg = tiny_config();
  cfg.n_ctx_queries = 4;
  auto w = init_weights(cfg);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto & v : w.get("pid.ca.attn.o.w").values()) {
    v = n(rng);
  }
  auto wp = w;
  auto & q = wp.get("pid.queries");
  const auto & q0 = w.get("pid.queries");
  const std::vector<int> perm = {2, 0, 3, 1};
  const int k = 3;
  for (int c = 0; c < 4; ++c) {
    for (int j = 0; j < 16; ++j) {
      q[(k + c) * 16 + j] = q0[(k + perm[c]) * 16 + j];
    }
  }
  expect_near(z_ego(w, cfg, s), z_ego(wp, cfg, s), 1e-12);
}

// ---------- head ----------

TEST(Head, ZeroWeightsFreezeEgoAtOrigin)
{
  std::mt19937_64 rng(21);
  const auto s = random_window(rng, 2, 4, 5);
  const auto cfg = tiny_config();
  auto w = init_weights(cfg);
  for (auto & [name, t] : w.all()) {
    if (name.rfind("head.mlp", 0) == 0) {
      t = Tensor(t.shape());
    }
  }
  const auto pred = predict_sample(w, cfg, s);
  EXPECT_EQ(pred.n_modes, 3);
  EXPECT_EQ(pred.t_pred, 5);
  EXPECT_EQ(pred.modes.size(), 3u * 5u * 2u);
  for (double v : pred.modes) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Head, HorizonBeyondRolloutIsError)
{
  std::mt19937_64 rng(22);
  const auto s = random_window(rng, 1, 3, 2);
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  EXPECT_THROW(predict_sample(w, cfg, s, 7), HorizonError);
  Tape t;
  ParamBinding p(t, w);
  const Var z = t.constant(Tensor(Shape{3, 16}, 0.1));
  EXPECT_THROW(predict(p, cfg, z, 7), HorizonError);
  EXPECT_EQ(predict(p, cfg, z, 6).modes.size(), 36u);
}

TEST(Head, ShorterHorizonIsPrefixOfLonger)
{
  std::mt19937_64 rng(23);
  const auto s = random_window(rng, 2, 4, 2);
  auto cfg = tiny_config();
  cfg.max_t_pred = 12;
  const auto w = init_weights(cfg);
  const auto long_pred = predict_sample(w, cfg, s, 12);
  for (std::int64_t tp = 1; tp <= 12; ++tp) {
    const auto short_pred = predict_sample(w, cfg, s, tp);
    for (std::int64_t k = 0; k < 3; ++k) {
      for (std::int64_t t = 0; t < tp; ++t) {
        for (int c = 0; c < 2; ++c) {
          EXPECT_EQ(short_pred.at(k, t, c), long_pred.at(k, t, c));
        }
      }
    }
  }
}

// ---------- full forward ----------

TEST(Forward, TranslationEquivariance)
{
  std::mt19937_64 rng(24);
  for (auto v : all_fps_variants()) {
    const auto cfg = tiny_config(v);
    const auto w = init_weights(cfg);
    auto raw = random_window(rng, 3, 5, 4);
    raw.normalization_offset = {0.0f, 0.0f};
    // dyadic grid so the float32 shift is exact
    for (auto & x : raw.obs.at(CueKind::T).values) {
      x = std::round(x * 64.0f) / 64.0f;
    }
    auto shifted = raw;
    const float dx = 12.5f;
    const float dy = -3.25f;
    for (std::int64_t a = 0; a < raw.n_agents; ++a) {
      for (std::int64_t t = 0; t < raw.t_obs; ++t) {
        if (raw.valid(a, t)) {
          shifted.xy(a, t)[0] += dx;
          shifted.xy(a, t)[1] += dy;
        }
      }
    }
    const auto n1 = trajstore::normalize(raw);
    const auto n2 = trajstore::normalize(shifted);
    const auto p1 = predict_sample(w, cfg, n1);
    const auto p2 = predict_sample(w, cfg, n2);
    for (std::int64_t k = 0; k < 3; ++k) {
      for (std::int64_t t = 0; t < 4; ++t) {
        const auto a = trajstore::denormalize(n1, p1.at(k, t, 0), p1.at(k, t, 1));
        const auto b = trajstore::denormalize(n2, p2.at(k, t, 0), p2.at(k, t, 1));
        EXPECT_EQ(b[0] - a[0], dx);
        EXPECT_EQ(b[1] - a[1], dy);
      }
    }
  }
}

TEST(Forward, NoneVariantIgnoresFrameRateMetadata)
{
  std::mt19937_64 rng(25);
  auto s5 = random_window(rng, 2, 4, 3, 0, 5.0);
  auto s1 = s5;
  s1.fps = 1.0;
  const auto cfg = tiny_config(FpsVariant::none);
  const auto w = init_weights(cfg);
  EXPECT_EQ(predict_sample(w, cfg, s5).modes, predict_sample(w, cfg, s1).modes);
  const auto cfg2 = tiny_config(FpsVariant::mlp_sum);
  const auto w2 = init_weights(cfg2);
  EXPECT_NE(predict_sample(w2, cfg2, s5).modes, predict_sample(w2, cfg2, s1).modes);
}

TEST(Forward, DeterministicAcrossRuns)
{
  std::mt19937_64 rng(26);
  const auto s = random_window(rng, 3, 6, 4);
  for (auto v : all_fps_variants()) {
    const auto cfg = tiny_config(v);
    EXPECT_EQ(forward_value(init_weights(cfg), cfg, {&s}, Phase::pretrain, 5),
              forward_value(init_weights(cfg), cfg, {&s}, Phase::pretrain, 5));
  }
}

TEST(Forward, NeighborPermutationInvariance)
{
  std::mt19937_64 rng(27);
  for (auto v : all_fps_variants()) {
    auto cfg = tiny_config(v);
    cfg.cues_enabled.insert(CueKind::P3);
    cfg.cue_elements[CueKind::P3] = 3;
    const auto w = init_weights(cfg);
    for (int trial = 0; trial < 5; ++trial) {
      const auto s = random_window(rng, 4, 5, 3, 3);
      std::vector<std::int64_t> order = {0, 1, 2, 3};
      std::shuffle(order.begin() + 1, order.end(), rng);
      const auto a = predict_sample(w, cfg, s);
      const auto b = predict_sample(w, cfg, permute_agents(s, order));
      for (std::size_t i = 0; i < a.modes.size(); ++i) {
        EXPECT_NEAR(a.modes[i], b.modes[i], 1e-9);
      }
    }
  }
}

TEST(Forward, BatchingDoesNotChangePredictions)
{
  std::mt19937_64 rng(28);
  std::vector<SampleWindow> data;
  for (int i = 0; i < 5; ++i) {
    data.push_back(random_window(rng, 1 + i % 3, 3 + 2 * (i % 3), 2 + i % 4, 0, i % 2 ? 5.0 : 2.5));
  }
  for (auto v : all_fps_variants()) {
    const auto cfg = tiny_config(v);
    const auto w = init_weights(cfg);
    std::vector<const SampleWindow *> batch;
    for (const auto & s : data) {
      batch.push_back(&s);
    }
    const auto together = predict_batch(w, cfg, batch);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto alone = predict_sample(w, cfg, data[i]);
      for (std::size_t j = 0; j < alone.modes.size(); ++j) {
        EXPECT_NEAR(alone.modes[j], together[i].modes[j], 1e-12);
      }
    }
  }
}

TEST(Forward, AblationsRun)
{
  std::mt19937_64 rng(29);
  const auto s = random_window(rng, 3, 4, 3);
  for (int variant = 0; variant < 5; ++variant) {
    auto cfg = tiny_config(FpsVariant::mlp_sum);
    cfg.use_hie = variant == 1 || variant == 2 || variant == 4;
    cfg.use_decoder = variant >= 2;
    cfg.use_ca = variant >= 3;
    const auto w = init_weights(cfg);
    const auto pred = predict_sample(w, cfg, s);
    for (double v : pred.modes) {
      EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_EQ(w.contains("hie.0.attn.q.w"), cfg.use_hie);
    EXPECT_EQ(w.contains("pid.dec.0.self.q.w"), cfg.use_decoder);
  }
}

TEST(Forward, WithoutDecoderModesArePooledEgoPlusQuery)
{
  std::mt19937_64 rng(30);
  auto s = random_window(rng, 2, 4, 2);
  auto cfg = tiny_config();
  cfg.use_decoder = false;
  cfg.use_ca = false;
  const auto w = init_weights(cfg);
  Tape t;
  ParamBinding p(t, w);
  std::mt19937_64 r(0);
  const auto tr = forward_trace(p, cfg, {&s}, Phase::eval, r);
  const Tensor h = ego_rows(tr.encoded, 16);
  const auto & q = w.get("pid.queries");
  for (int k = 0; k < 3; ++k) {
    for (int c = 0; c < 16; ++c) {
      double m = 0.0;
      int n = 0;
      for (int tt = 0; tt < 4; ++tt) {
        if (s.valid(0, tt)) {
          m += h[tt * 16 + c];
          ++n;
        }
      }
      EXPECT_NEAR(tr.z_ego.value()[k * 16 + c], m / n + q[k * 16 + c], 1e-12);
    }
  }
}

// Gradient of a min-over-modes squared error through the whole network.
TEST(Forward, FiniteDifferenceGradientsEveryVariant)
{
  std::mt19937_64 rng(31);
  const auto s = random_window(rng, 2, 4, 3, 0, 2.5);
  for (auto v : all_fps_variants()) {
    auto cfg = tiny_config(v);
    cfg.n_modes = 2;
    auto w = init_weights(cfg);
    std::normal_distribution<double> n(0.0, 0.2);
    for (auto & [name, t] : w.all()) {
      if (name.find(".b") != std::string::npos || name.rfind("fps", 0) == 0 || name.find(".o.w") != std::string::npos) {
        for (auto & x : t.values()) {
          x += n(rng);
        }
      }
    }
    const numerics::ScalarFn f = [&](ParamBinding & p) {
      std::mt19937_64 r(0);
      const Var pos = forward(p, cfg, {&s}, Phase::eval, r);
      const Var first = numerics::reshape(
        numerics::gather_rows(numerics::reshape(pos, Shape{2 * 6, 2}), {0, 1, 2, 6, 7, 8}), Shape{2, 3, 2});
      Tensor gt(Shape{2, 3, 2});
      for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 6; ++i) {
          gt[k * 6 + i] = s.future[i];
        }
      }
      const Var err = numerics::sum_last(numerics::reshape(
        numerics::square(numerics::sub(first, p.tape().constant(gt))), Shape{1, 2, 6}));
      return numerics::sum(numerics::min_last(err));
    };
    const auto res = numerics::finite_diff_check(f, w, 1e-5);
    EXPECT_LT(res.max_rel_error, 1e-4) << fps_variant_name(v) << " worst " << res.worst_parameter;
  }
}

}  // namespace
