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

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "omnitraj/synthgen/benchmark.hpp"
#include "omnitraj/synthgen/generator.hpp"
#include "omnitraj/synthgen/pose.hpp"
#include "omnitraj/trajstore/resample.hpp"

namespace
{

using namespace omnitraj;
using namespace omnitraj::synthgen;
using trajstore::CueKind;
using trajstore::SceneRecord;

constexpr double kPi = 3.14159265358979323846;

TEST(Generate, ConstantVelocityIsAnalytic)
{
  GenSpec spec;
  spec.kind = GenKind::const_velocity;
  spec.duration_s = 2.0;
  spec.base_fps = 25.0;
  const auto xy = clean_positions(spec, {AgentParams{{0.0, 0.0}, 1.0, 0.0, 0.0}});
  ASSERT_EQ(xy[0].size(), 51u);
  for (std::size_t f = 0; f < xy[0].size(); ++f) {
    EXPECT_NEAR(xy[0][f].x, 0.04 * static_cast<double>(f), 1e-12);
    EXPECT_EQ(xy[0][f].y, 0.0);
  }
}

TEST(Generate, TurningTracesCircleOfRadiusSpeedOverRate)
{
  GenSpec spec;
  spec.kind = GenKind::turning;
  spec.duration_s = 4.0;
  const double omega = kPi / 2.0;
  const double heading = 0.3;
  const Vec2 origin{1.0, -2.0};
  const auto xy = clean_positions(spec, {AgentParams{origin, 1.0, heading, omega}});
  const double r = 2.0 / kPi;
  // centre sits a radius to the left of the initial heading
  const Vec2 c{origin.x - r * std::sin(heading), origin.y + r * std::cos(heading)};
  for (const auto & p : xy[0]) {
    EXPECT_NEAR(std::hypot(p.x - c.x, p.y - c.y), r, 1e-12);
  }
  // one full revolution takes 2*pi/omega = 4 s
  EXPECT_NEAR(xy[0].back().x, origin.x, 1e-12);
  EXPECT_NEAR(xy[0].back().y, origin.y, 1e-12);
}

// Independent integrator used as the oracle for the social generator.
std::vector<std::vector<Vec2>> reference_social(
  std::vector<Vec2> pos, std::vector<Vec2> vel, double fps, int n_frames, bool forces)
{
  const double dt = 1.0 / fps;
  std::vector<std::vector<Vec2>> out(pos.size());
  for (int f = 0; f < n_frames; ++f) {
    for (std::size_t a = 0; a < pos.size(); ++a) {
      out[a].push_back(pos[a]);
    }
    std::vector<Vec2> acc(pos.size());
    for (std::size_t a = 0; a < pos.size() && forces; ++a) {
      for (std::size_t b = 0; b < pos.size(); ++b) {
        if (a == b) {
          continue;
        }
        const double dx = pos[a].x - pos[b].x;
        const double dy = pos[a].y - pos[b].y;
        const double d = std::sqrt(dx * dx + dy * dy);
        const double mag = std::min(1.0 / (d * d), 2.0);
        acc[a].x += mag * dx / d;
        acc[a].y += mag * dy / d;
      }
    }
    for (std::size_t a = 0; a < pos.size(); ++a) {
      vel[a].x += dt * acc[a].x;
      vel[a].y += dt * acc[a].y;
      pos[a].x += dt * vel[a].x;
      pos[a].y += dt * vel[a].y;
    }
  }
  return out;
}

double min_distance(const std::vector<std::vector<Vec2>> & xy)
{
  double m = INFINITY;
  for (std::size_t f = 0; f < xy[0].size(); ++f) {
    m = std::min(m, std::hypot(xy[0][f].x - xy[1][f].x, xy[0][f].y - xy[1][f].y));
  }
  return m;
}

TEST(Generate, SocialHeadOnKeepsAgentsFurtherApart)
{
  const std::vector<AgentState> init = {{{-5.0, 0.05}, {1.0, 0.0}}, {{5.0, -0.05}, {-1.0, 0.0}}};
  const auto with = simulate_social(init, 25.0, 251);
  const auto without = simulate_social(init, 25.0, 251, 0.0);
  const auto ref_with =
    reference_social({{-5.0, 0.05}, {5.0, -0.05}}, {{1.0, 0.0}, {-1.0, 0.0}}, 25.0, 251, true);
  const auto ref_without =
    reference_social({{-5.0, 0.05}, {5.0, -0.05}}, {{1.0, 0.0}, {-1.0, 0.0}}, 25.0, 251, false);
  EXPECT_NEAR(min_distance(with), min_distance(ref_with), 1e-12);
  EXPECT_NEAR(min_distance(without), min_distance(ref_without), 1e-12);
  EXPECT_GT(min_distance(with), min_distance(without));
}

TEST(Generate, SocialRepulsionIsCapped)
{
  for (double d : {1e-3, 0.1, 0.5, 0.7071, 1.0, 3.0}) {
    const Vec2 r = repulsion(d, 0.0);
    EXPECT_LE(std::hypot(r.x, r.y), 2.0 + 1e-15);
    EXPECT_NEAR(std::hypot(r.x, r.y), std::min(1.0 / (d * d), 2.0), 1e-12);
  }
}

TEST(Generate, SocialStepHalvingOnHeadOnEncounter)
{
  const std::vector<AgentState> init = {{{-5.0, 0.05}, {1.0, 0.0}}, {{5.0, -0.05}, {-1.0, 0.0}}};
  const auto a = simulate_social(init, 25.0, 251);
  const auto b = simulate_social(init, 50.0, 501);
  double worst = 0.0;
  for (int f = 0; f < 251; ++f) {
    for (int i = 0; i < 2; ++i) {
      worst = std::max(worst, std::hypot(a[i][f].x - b[i][2 * f].x, a[i][f].y - b[i][2 * f].y));
    }
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Generate, SocialStaysFiniteForTenAgentsOverThirtySeconds)
{
  GenSpec spec;
  spec.kind = GenKind::social;
  spec.n_agents = 10;
  spec.n_scenes = 5;
  spec.duration_s = 30.0;
  spec.seed = 3;
  for (const auto & s : generate(spec)) {
    ASSERT_EQ(s.agents.size(), 10u);
    for (const auto & a : s.agents) {
      EXPECT_EQ(a.frames.size(), 751u);
      for (double v : a.cues.at(CueKind::T).values) {
        ASSERT_TRUE(std::isfinite(v));
      }
    }
  }
}

TEST(Generate, IdenticalSpecGivesIdenticalScenes)
{
  for (auto kind : {GenKind::const_velocity, GenKind::turning, GenKind::social}) {
    GenSpec spec;
    spec.kind = kind;
    spec.n_scenes = 4;
    spec.n_agents = 3;
    spec.noise_std = 0.05;
    spec.seed = 99;
    EXPECT_EQ(generate(spec), generate(spec));
    GenSpec other = spec;
    other.seed = 100;
    EXPECT_NE(generate(spec), generate(other));
  }
}

TEST(Generate, ResampledMatchesDirectGenerationAtLowerRate)
{
  for (auto kind : {GenKind::const_velocity, GenKind::turning}) {
    GenSpec fast;
    fast.kind = kind;
    fast.n_scenes = 6;
    fast.n_agents = 3;
    fast.seed = 5;
    GenSpec slow = fast;
    slow.base_fps = 5.0;
    const auto a = generate(fast);
    const auto b = generate(slow);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto r = trajstore::resample(a[i], 5.0);
      ASSERT_EQ(r.agents.size(), b[i].agents.size());
      for (std::size_t k = 0; k < r.agents.size(); ++k) {
        EXPECT_EQ(r.agents[k].frames, b[i].agents[k].frames);
        EXPECT_EQ(r.agents[k].cues.at(CueKind::T).values, b[i].agents[k].cues.at(CueKind::T).values);
      }
    }
  }
}

TEST(Generate, NoiseIsAddedAfterIntegration)
{
  GenSpec clean;
  clean.kind = GenKind::social;
  clean.n_agents = 3;
  clean.seed = 8;
  GenSpec noisy = clean;
  noisy.noise_std = 0.1;
  const auto a = generate(clean)[0];
  const auto b = generate(noisy)[0];
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < a.agents.size(); ++k) {
    const auto & va = a.agents[k].cues.at(CueKind::T).values;
    const auto & vb = b.agents[k].cues.at(CueKind::T).values;
    for (std::size_t i = 0; i < va.size(); ++i) {
      sum_sq += (va[i] - vb[i]) * (va[i] - vb[i]);
      ++n;
    }
  }
  // residuals are pure observation noise, not accumulated drift
  EXPECT_NEAR(std::sqrt(sum_sq / static_cast<double>(n)), 0.1, 0.01);
}

TEST(Generate, InvalidSpecRejected)
{
  GenSpec s;
  s.n_scenes = 0;
  EXPECT_THROW(generate(s), ConfigError);
  s = GenSpec{};
  s.speed_range = {-1.0, 1.0};
  EXPECT_THROW(s.validate(), ConfigError);
  s = GenSpec{};
  s.noise_std = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Benchmark, CanonicalSetups)
{
  EXPECT_EQ(setup1().fps, 5.0);
  EXPECT_EQ(setup1().t_obs, 10);
  EXPECT_EQ(setup1().t_pred, 20);
  EXPECT_EQ(setup2().fps, 2.5);
  EXPECT_EQ(setup2().t_obs, 4);
  EXPECT_EQ(setup2().t_pred, 8);
  EXPECT_EQ(setup3().fps, 1.0);
  EXPECT_EQ(setup3().t_obs, 3);
  EXPECT_EQ(setup3().t_pred, 3);
}

TEST(Benchmark, SplitsByFrameRateAndScene)
{
  GenSpec spec;
  spec.kind = GenKind::turning;
  spec.n_scenes = 100;
  spec.n_agents = 2;
  spec.seed = 4;
  const auto b = build_cross_setup_benchmark(spec);
  ASSERT_FALSE(b.train.empty());
  ASSERT_FALSE(b.test.empty());
  std::set<double> train_fps;
  for (const auto & w : b.train) {
    train_fps.insert(w.fps);
    EXPECT_TRUE((w.fps == 5.0 && w.t_obs == 10 && w.t_pred == 20) ||
                (w.fps == 2.5 && w.t_obs == 4 && w.t_pred == 8));
  }
  EXPECT_EQ(train_fps, (std::set<double>{2.5, 5.0}));
  for (const auto & w : b.test) {
    EXPECT_EQ(w.fps, 1.0);
    EXPECT_EQ(w.t_obs, 3);
    EXPECT_EQ(w.t_pred, 3);
  }
  const std::set<std::string> train_ids(b.train_scene_ids.begin(), b.train_scene_ids.end());
  for (const auto & id : b.test_scene_ids) {
    EXPECT_EQ(train_ids.count(id), 0u);
  }
  for (const auto & w : b.test) {
    EXPECT_EQ(train_ids.count(w.scene_id), 0u);
  }
}

TEST(Benchmark, NonDivisibleBaseRateIsRejected)
{
  GenSpec spec;
  spec.n_scenes = 10;
  spec.base_fps = 12.0;
  EXPECT_THROW(build_cross_setup_benchmark(spec), Error);
}

SceneRecord single_agent_scene(const std::vector<Vec2> & xy)
{
  SceneRecord s;
  s.scene_id = "p";
  s.base_fps = 25.0;
  s.agents.push_back(detail::make_track("a", xy));
  return s;
}

TEST(Pose, StationaryAgentKeepsStaticTemplate)
{
  const auto s = attach_synthetic_pose(single_agent_scene(std::vector<Vec2>(10, Vec2{2.0, 3.0})), 17, 1);
  const auto tmpl = skeleton_template(17, 1);
  const auto & pose = s.agents[0].cues.at(CueKind::P3);
  EXPECT_EQ(pose.layout.elements, 17);
  for (std::size_t f = 0; f < 10; ++f) {
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      EXPECT_EQ(pose.frame(f)[i], tmpl[i]);
    }
  }
}

TEST(Pose, KeypointsAverageToTrajectoryPoint)
{
  GenSpec spec;
  spec.kind = GenKind::turning;
  spec.n_agents = 3;
  spec.seed = 2;
  const auto s = attach_synthetic_pose(generate(spec)[0], 17, 9);
  for (const auto & a : s.agents) {
    const auto & pose = a.cues.at(CueKind::P3);
    for (std::size_t f = 0; f < a.frames.size(); ++f) {
      for (int c = 0; c < 3; ++c) {
        double m = 0.0;
        for (int k = 0; k < 17; ++k) {
          m += pose.frame(f)[k * 3 + c];
        }
        EXPECT_NEAR(m / 17.0, 0.0, 1e-12);
      }
    }
  }
}

TEST(Pose, RotatesWithHeading)
{
  std::vector<Vec2> east;
  std::vector<Vec2> north;
  for (int f = 0; f < 5; ++f) {
    east.push_back({0.04 * f, 0.0});
    north.push_back({0.0, 0.04 * f});
  }
  const auto e = attach_synthetic_pose(single_agent_scene(east), 5, 4);
  const auto n = attach_synthetic_pose(single_agent_scene(north), 5, 4);
  const auto & pe = e.agents[0].cues.at(CueKind::P3);
  const auto & pn = n.agents[0].cues.at(CueKind::P3);
  for (std::size_t f = 0; f < 5; ++f) {
    for (int k = 0; k < 5; ++k) {
      // a quarter turn maps (x, y) to (-y, x)
      EXPECT_NEAR(pn.frame(f)[k * 3 + 0], -pe.frame(f)[k * 3 + 1], 1e-12);
      EXPECT_NEAR(pn.frame(f)[k * 3 + 1], pe.frame(f)[k * 3 + 0], 1e-12);
      EXPECT_EQ(pn.frame(f)[k * 3 + 2], pe.frame(f)[k * 3 + 2]);
    }
  }
}

TEST(Pose, DeterministicUnderSeed)
{
  GenSpec spec;
  spec.kind = GenKind::social;
  spec.n_agents = 4;
  const auto scene = generate(spec)[0];
  EXPECT_EQ(attach_synthetic_pose(scene, 17, 3), attach_synthetic_pose(scene, 17, 3));
  EXPECT_NE(attach_synthetic_pose(scene, 17, 3), attach_synthetic_pose(scene, 17, 4));
}

}  // namespace
