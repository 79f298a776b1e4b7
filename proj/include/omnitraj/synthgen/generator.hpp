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

#ifndef OMNITRAJ__SYNTHGEN__GENERATOR_HPP_
#define OMNITRAJ__SYNTHGEN__GENERATOR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "omnitraj/trajstore/types.hpp"
#include "omnitraj/util/error.hpp"
#include "omnitraj/util/hash.hpp"

namespace omnitraj::synthgen
{

using trajstore::AgentTrack;
using trajstore::CueArray;
using trajstore::CueKind;
using trajstore::SceneRecord;

enum class GenKind { const_velocity, turning, social };

inline std::string gen_kind_name(GenKind k)
{
  switch (k) {
    case GenKind::const_velocity:
      return "const_velocity";
    case GenKind::turning:
      return "turning";
    case GenKind::social:
      return "social";
  }
  return "?";
}

inline GenKind parse_gen_kind(const std::string & s)
{
  for (auto k : {GenKind::const_velocity, GenKind::turning, GenKind::social}) {
    if (gen_kind_name(k) == s) {
      return k;
    }
  }
  throw ConfigError("unknown generator kind '" + s + "'");
}

struct GenSpec
{
  GenKind kind = GenKind::const_velocity;
  std::int64_t n_scenes = 1;
  std::int64_t n_agents = 1;
  double base_fps = 25.0;
  double duration_s = 6.0;
  std::array<double, 2> speed_range{0.5, 1.5};
  std::array<double, 2> turn_rate_range{-0.5, 0.5};
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (n_scenes < 1) {
      throw ConfigError("GenSpec: n_scenes must be >= 1");
    }
    if (n_agents < 1) {
      throw ConfigError("GenSpec: n_agents must be >= 1");
    }
    if (!(base_fps > 0.0)) {
      throw ConfigError("GenSpec: base_fps must be positive");
    }
    if (!(duration_s > 0.0)) {
      throw ConfigError("GenSpec: duration_s must be positive");
    }
    if (speed_range[0] < 0.0 || speed_range[1] < speed_range[0]) {
      throw ConfigError("GenSpec: speed_range must satisfy 0 <= v_min <= v_max");
    }
    if (turn_rate_range[1] < turn_rate_range[0]) {
      throw ConfigError("GenSpec: turn_rate_range must satisfy w_min <= w_max");
    }
    if (noise_std < 0.0) {
      throw ConfigError("GenSpec: noise_std must be >= 0");
    }
  }

  std::int64_t n_frames() const { return std::llround(duration_s * base_fps) + 1; }
};

struct Vec2
{
  double x = 0.0;
  double y = 0.0;
};

/// Straight-line motion from origin at constant speed along heading, evaluated at time t.
inline Vec2 const_velocity_position(Vec2 origin, double speed, double heading, double t)
{
  return {origin.x + speed * t * std::cos(heading), origin.y + speed * t * std::sin(heading)};
}

/// Constant-speed arc with angular rate omega (rad/s); radius speed / |omega|.
inline Vec2 turning_position(Vec2 origin, double speed, double heading, double omega, double t)
{
  if (std::abs(omega) < 1e-12) {
    return const_velocity_position(origin, speed, heading, t);
  }
  const double r = speed / omega;
  return {
    origin.x + r * (std::sin(heading + omega * t) - std::sin(heading)),
    origin.y - r * (std::cos(heading + omega * t) - std::cos(heading))};
}

/// Maximum repulsive acceleration (m/s^2).
inline constexpr double kRepulsionCap = 2.0;
/// Inverse-square repulsion constant (m^3/s^2).
inline constexpr double kRepulsionStrength = 1.0;

inline Vec2 repulsion(double dx, double dy, double strength = kRepulsionStrength)
{
  const double d2 = dx * dx + dy * dy;
  if (d2 <= 0.0) {
    return {};
  }
  const double d = std::sqrt(d2);
  const double mag = std::min(strength / d2, kRepulsionCap);
  return {mag * dx / d, mag * dy / d};
}

struct AgentState
{
  Vec2 pos;
  Vec2 vel;
};

/**
 * Explicit Euler integration of mutually repelling agents at step 1/fps. Returns positions
 * [agent][frame] with frame 0 the initial state. strength 0 gives force-free motion.
 */
inline std::vector<std::vector<Vec2>> simulate_social(
  std::vector<AgentState> agents, double fps, std::int64_t n_frames,
  double strength = kRepulsionStrength)
{
  const double dt = 1.0 / fps;
  std::vector<std::vector<Vec2>> out(agents.size());
  std::vector<Vec2> acc(agents.size());
  for (std::int64_t f = 0; f < n_frames; ++f) {
    for (std::size_t a = 0; a < agents.size(); ++a) {
      out[a].push_back(agents[a].pos);
    }
    for (std::size_t a = 0; a < agents.size(); ++a) {
      acc[a] = {};
      if (strength == 0.0) {
        continue;
      }
      for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j == a) {
          continue;
        }
        const Vec2 r = repulsion(
          agents[a].pos.x - agents[j].pos.x, agents[a].pos.y - agents[j].pos.y, strength);
        acc[a].x += r.x;
        acc[a].y += r.y;
      }
    }
    for (std::size_t a = 0; a < agents.size(); ++a) {
      agents[a].vel.x += dt * acc[a].x;
      agents[a].vel.y += dt * acc[a].y;
      agents[a].pos.x += dt * agents[a].vel.x;
      agents[a].pos.y += dt * agents[a].vel.y;
    }
  }
  return out;
}

/// Per-agent motion parameters, drawn independently of the frame rate.
struct AgentParams
{
  Vec2 origin;
  double speed = 0.0;
  double heading = 0.0;
  double omega = 0.0;
};

namespace detail
{

inline double uniform(std::mt19937_64 & rng, double lo, double hi)
{
  if (hi <= lo) {
    return lo;
  }
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline AgentTrack make_track(const std::string & id, const std::vector<Vec2> & xy)
{
  AgentTrack t;
  t.agent_id = id;
  t.frames.resize(xy.size());
  t.present.assign(xy.size(), 1);
  CueArray arr{{1, 2}, {}};
  arr.values.reserve(xy.size() * 2);
  for (std::size_t i = 0; i < xy.size(); ++i) {
    t.frames[i] = static_cast<std::int64_t>(i);
    arr.values.push_back(xy[i].x);
    arr.values.push_back(xy[i].y);
  }
  t.cues.emplace(CueKind::T, std::move(arr));
  return t;
}

}  // namespace detail

inline std::uint64_t scene_seed(std::uint64_t seed, std::int64_t index)
{
  return mix_seed(seed ^ static_cast<std::uint64_t>(index));
}

/// Draws the motion parameters of every agent of scene `index`. Consumes the rng in a
/// fixed order that does not depend on base_fps or duration.
inline std::vector<AgentParams> draw_agent_params(
  const GenSpec & spec, std::mt19937_64 & rng)
{
  constexpr double pi = 3.14159265358979323846;
  std::vector<AgentParams> out(static_cast<std::size_t>(spec.n_agents));
  const double ring = detail::uniform(rng, 3.0, 6.0);
  for (std::int64_t a = 0; a < spec.n_agents; ++a) {
    AgentParams & p = out[static_cast<std::size_t>(a)];
    p.speed = detail::uniform(rng, spec.speed_range[0], spec.speed_range[1]);
    p.omega = detail::uniform(rng, spec.turn_rate_range[0], spec.turn_rate_range[1]);
    if (spec.kind == GenKind::social) {
      // agents start on a ring and head roughly toward its center
      const double phi = 2.0 * pi * static_cast<double>(a) / static_cast<double>(spec.n_agents) +
                         detail::uniform(rng, -0.4, 0.4);
      p.origin = {ring * std::cos(phi), ring * std::sin(phi)};
      p.heading = phi + pi + detail::uniform(rng, -0.35, 0.35);
    } else {
      p.origin = {detail::uniform(rng, -10.0, 10.0), detail::uniform(rng, -10.0, 10.0)};
      p.heading = detail::uniform(rng, -pi, pi);
    }
  }
  return out;
}

/// Noise-free positions [agent][frame] of one scene.
inline std::vector<std::vector<Vec2>> clean_positions(
  const GenSpec & spec, const std::vector<AgentParams> & params)
{
  const std::int64_t n = spec.n_frames();
  std::vector<std::vector<Vec2>> out(params.size());
  if (spec.kind == GenKind::social) {
    std::vector<AgentState> init;
    for (const auto & p : params) {
      init.push_back({p.origin, {p.speed * std::cos(p.heading), p.speed * std::sin(p.heading)}});
    }
    return simulate_social(std::move(init), spec.base_fps, n);
  }
  for (std::size_t a = 0; a < params.size(); ++a) {
    const auto & p = params[a];
    out[a].reserve(static_cast<std::size_t>(n));
    for (std::int64_t f = 0; f < n; ++f) {
      const double t = static_cast<double>(f) / spec.base_fps;
      out[a].push_back(
        spec.kind == GenKind::turning ? turning_position(p.origin, p.speed, p.heading, p.omega, t)
                                      : const_velocity_position(p.origin, p.speed, p.heading, t));
    }
  }
  return out;
}

inline SceneRecord generate_scene(const GenSpec & spec, std::int64_t index)
{
  std::mt19937_64 rng(scene_seed(spec.seed, index));
  const auto params = draw_agent_params(spec, rng);
  auto xy = clean_positions(spec, params);
  if (spec.noise_std > 0.0) {
    // observation noise, added after integration
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (auto & track : xy) {
      for (auto & p : track) {
        p.x += noise(rng);
        p.y += noise(rng);
      }
    }
  }
  SceneRecord scene;
  scene.scene_id = gen_kind_name(spec.kind) + "-" + std::to_string(spec.seed) + "-" +
                   std::to_string(index);
  scene.base_fps = spec.base_fps;
  scene.source_tag = "synthgen:" + gen_kind_name(spec.kind);
  for (std::size_t a = 0; a < xy.size(); ++a) {
    scene.agents.push_back(detail::make_track("a" + std::to_string(a), xy[a]));
  }
  return scene;
}

/// Deterministic scenes for a spec; scene i is seeded from seed ^ i.
inline std::vector<SceneRecord> generate(const GenSpec & spec)
{
  spec.validate();
  std::vector<SceneRecord> out;
  out.reserve(static_cast<std::size_t>(spec.n_scenes));
  for (std::int64_t i = 0; i < spec.n_scenes; ++i) {
    out.push_back(generate_scene(spec, i));
  }
  return out;
}

}  // namespace omnitraj::synthgen

#endif  // OMNITRAJ__SYNTHGEN__GENERATOR_HPP_
