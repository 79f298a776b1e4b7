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

#ifndef OMNITRAJ__CLI__COMMANDS_HPP_
#define OMNITRAJ__CLI__COMMANDS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "omnitraj/cli/run_config.hpp"
#include "omnitraj/numerics/checkpoint.hpp"
#include "omnitraj/synthgen/pose.hpp"
#include "omnitraj/trajstore/cache.hpp"
#include "omnitraj/trajstore/ingest.hpp"
#include "omnitraj/train/protocols.hpp"
#include "omnitraj/train/svg.hpp"

namespace omnitraj::cli
{

namespace fs = std::filesystem;
using train::Samples;
using trajstore::SampleWindow;
using trajstore::SceneRecord;

/// Checkpoint and config disagree about the architecture.
class DigestMismatch : public ConfigError
{
public:
  using ConfigError::ConfigError;
};

/// Canonical name of a sample's (fps, t_obs, t_pred) combination.
inline std::string setup_name(const SampleWindow & s)
{
  for (const auto & b : {synthgen::setup1(), synthgen::setup2(), synthgen::setup3()}) {
    if (b.fps == s.fps && b.t_obs == s.t_obs && b.t_pred == s.t_pred) {
      return b.name;
    }
  }
  std::ostringstream os;
  os << "fps" << s.fps << "_obs" << s.t_obs << "_pred" << s.t_pred;
  return os.str();
}

/// Windows of one run, split three ways. Pointer lists refer into the owned vectors.
struct Dataset
{
  std::vector<SampleWindow> train_store;
  std::vector<SampleWindow> val_store;
  std::vector<SampleWindow> test_store;
  std::vector<SceneRecord> train_scenes;  // generator source only

  Samples train() const { return train::pointers(train_store); }
  Samples val() const { return train::pointers(val_store); }
  Samples test() const { return train::pointers(test_store); }

  Samples split(const std::string & name) const
  {
    return name == "train" ? train() : name == "val" ? val() : test();
  }

  /// Train windows grouped by setup name, in name order.
  std::map<std::string, Samples> train_sources() const
  {
    std::map<std::string, Samples> out;
    for (const auto & s : train_store) {
      out[setup_name(s)].push_back(&s);
    }
    return out;
  }
};

/// Uniform [0, 1) value fixed by scene id and seed.
inline double scene_unit(const std::string & scene_id, std::uint64_t seed)
{
  const auto h = mix_seed(fnv1a64(scene_id) ^ derive_seed(seed, "split"));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::vector<SceneRecord> generate_scenes(const RunConfig & rc)
{
  auto scenes = synthgen::generate(rc.seeded_generator());
  if (rc.data.pose_keypoints > 0) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      scenes[i] = synthgen::attach_synthetic_pose(
        std::move(scenes[i]), rc.data.pose_keypoints, derive_seed(derive_seed(rc.seed, "pose"), i));
    }
  }
  return scenes;
}

inline Dataset load_dataset(const RunConfig & rc)
{
  Dataset d;
  auto route = [&](SampleWindow && w, bool allow_test) {
    const double u = scene_unit(w.scene_id, rc.seed);
    if (u < rc.data.val_fraction) {
      d.val_store.push_back(std::move(w));
    } else if (allow_test && u < rc.data.val_fraction + rc.data.test_fraction) {
      d.test_store.push_back(std::move(w));
    } else {
      d.train_store.push_back(std::move(w));
    }
  };
  if (rc.data.source == "cache") {
    for (auto & w : trajstore::cache_read(rc.data.cache)) {
      route(std::move(w), true);
    }
    return d;
  }
  const auto scenes = generate_scenes(rc);
  const auto n = static_cast<std::int64_t>(scenes.size());
  const auto n_test = rc.data.n_test_scenes < 0 ? std::max<std::int64_t>(1, n / 7) : rc.data.n_test_scenes;
  if (n_test < 1 || n_test >= n) {
    throw ConfigError("data.n_test_scenes must lie in [1, data.generator.n_scenes)");
  }
  d.train_scenes.assign(scenes.begin(), scenes.end() - n_test);
  if (rc.data.benchmark == "cross_setup") {
    auto bench = synthgen::build_cross_setup_benchmark(scenes, n_test);
    for (auto & w : bench.train) {
      route(std::move(w), false);
    }
    d.test_store = std::move(bench.test);
  } else {
    const auto setup = setup_by_name(rc.data.benchmark);
    for (auto & w : synthgen::build_windows(d.train_scenes, setup)) {
      route(std::move(w), false);
    }
    d.test_store = synthgen::build_windows({scenes.end() - n_test, scenes.end()}, setup);
  }
  return d;
}

inline std::vector<train::Source> mixture_sources(const RunConfig & rc, const Dataset & d)
{
  const auto sources = d.train_sources();
  if (sources.empty()) {
    throw ConfigError("no training samples; check data.generator and the split fractions");
  }
  for (const auto & [name, w] : rc.mixture) {
    if (sources.count(name) == 0) {
      std::string have;
      for (const auto & [k, v] : sources) {
        have += (have.empty() ? "" : ", ") + k;
      }
      throw ConfigError("train.mixture names unknown source '" + name + "' (available: " + have + ")");
    }
  }
  std::vector<train::Source> out;
  for (const auto & [name, samples] : sources) {
    const auto it = rc.mixture.find(name);
    out.push_back({name, samples, it == rc.mixture.end() ? 1.0 : it->second});
  }
  return out;
}

inline fs::path out_path(const RunConfig & rc, const std::string & file) { return fs::path(rc.output_dir) / file; }

inline void write_resolved_config(const RunConfig & rc)
{
  write_file(out_path(rc, "resolved_config.json"), to_json(rc).dump(2) + "\n");
}

inline int cmd_gen(const RunConfig & rc, std::ostream & log)
{
  write_resolved_config(rc);
  const auto scenes = generate_scenes(rc);
  const auto path = out_path(rc, "scenes.ndjson");
  trajstore::write_ndjson(path, scenes);
  log << "gen: wrote " << scenes.size() << " scenes to " << path.string() << "\n";
  return 0;
}

inline int cmd_ingest(
  const RunConfig & rc, std::vector<std::string> inputs, const std::string & cache_out, std::ostream & log)
{
  write_resolved_config(rc);
  if (inputs.empty() && !rc.data.scenes.empty()) {
    inputs.push_back(rc.data.scenes);
  }
  if (inputs.empty()) {
    throw ConfigError("ingest: no input files (pass paths or set data.scenes)");
  }
  std::vector<SceneRecord> scenes;
  for (const auto & p : inputs) {
    for (auto & s : trajstore::ingest_ndjson(p)) {
      scenes.push_back(std::move(s));
    }
  }
  std::vector<SampleWindow> samples;
  for (const auto & name : rc.data.ingest_setups) {
    for (auto & w : synthgen::build_windows(scenes, setup_by_name(name))) {
      samples.push_back(std::move(w));
    }
  }
  const fs::path path = cache_out.empty() ? out_path(rc, "samples.cache") : fs::path(cache_out);
  trajstore::cache_write(samples, path);
  log << "ingest: " << scenes.size() << " scenes, " << samples.size() << " samples -> " << path.string() << "\n";
  return 0;
}

inline std::string fixed(double v, int digits = 4)
{
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

/// Metrics rows, one per setup present in `samples`.
inline train::MetricsReport per_setup_report(
  const numerics::ParamStore & w, const model::ModelConfig & cfg, const Samples & samples,
  const std::string & protocol, std::uint64_t seed)
{
  std::map<std::string, Samples> groups;
  for (const auto * s : samples) {
    groups[setup_name(*s)].push_back(s);
  }
  train::MetricsReport rep;
  rep.config_digest = hex64(cfg.digest());
  for (const auto & [name, group] : groups) {
    rep.rows.push_back({protocol, name, model::fps_variant_name(cfg.fps_variant), seed,
                        train::zero_shot_eval(w, cfg, group)});
  }
  return rep;
}

inline int cmd_train(const RunConfig & rc, std::ostream & log)
{
  write_resolved_config(rc);
  const auto cfg = rc.seeded_model();
  const auto plan = rc.seeded_plan();
  const auto data = load_dataset(rc);
  const auto mixture = mixture_sources(rc, data);
  const auto val = data.val();

  const auto state_path = out_path(rc, "train_state.bin");
  const auto state_cfg_path = out_path(rc, "train_state.json");
  const std::string resolved = to_json(rc).dump();
  train::TrainState state;
  if (fs::exists(state_path) && fs::exists(state_cfg_path) && read_file(state_cfg_path) == resolved) {
    state = train::decode_state(read_file(state_path), state_path.string());
    log << "train: resuming after epoch " << state.epochs_done << "\n";
  } else {
    state.weights = model::init_weights(cfg);
  }
  write_file(state_cfg_path, resolved);
  state = train::train(plan, cfg, mixture, val, std::move(state), [&](const train::TrainState & s) {
    write_file(state_path, train::encode_state(s));
    log << "epoch " << s.epochs_done;
    for (const auto & pt : s.curve) {
      if (pt.epoch == s.epochs_done - 1) {
        log << ' ' << pt.split << "_loss " << fixed(pt.loss, 6);
      }
    }
    log << "\n";
  });
  write_file(out_path(rc, "loss_curve.csv"), train::loss_curve_csv(state.curve));

  const numerics::Checkpoint ck{cfg.digest(), cfg.to_json().dump(), state.weights};
  const auto ck_path = out_path(rc, "model.ckpt");
  numerics::save_checkpoint(ck_path, ck);
  // report with the weights exactly as stored
  const auto stored = numerics::load_checkpoint(ck_path).params;
  if (!val.empty()) {
    const auto rep = per_setup_report(stored, cfg, val, "train_val", rc.seed);
    write_file(out_path(rc, "val_metrics.csv"), rep.to_csv());
    log << "train: val loss (checkpoint weights) " << fixed(train::evaluate_loss(stored, cfg, val), 6) << "\n";
  }
  log << "train: wrote " << ck_path.string() << " (digest " << hex64(cfg.digest()) << ")\n";
  return 0;
}

inline numerics::Checkpoint load_matching_checkpoint(const RunConfig & rc, const model::ModelConfig & cfg)
{
  const fs::path path = rc.eval.checkpoint.empty() ? out_path(rc, "model.ckpt") : fs::path(rc.eval.checkpoint);
  auto ck = numerics::load_checkpoint(path);
  if (ck.config_digest != cfg.digest()) {
    throw DigestMismatch(
      "checkpoint digest " + hex64(ck.config_digest) + " does not match config digest " + hex64(cfg.digest()) +
      " (" + path.string() + ")");
  }
  return ck;
}

inline int cmd_eval(const RunConfig & rc, std::ostream & log)
{
  const auto cfg = rc.seeded_model();
  const auto ck = load_matching_checkpoint(rc, cfg);
  write_resolved_config(rc);
  const auto data = load_dataset(rc);
  const auto samples = data.split(rc.eval.split);
  if (samples.empty()) {
    throw ConfigError("eval: split '" + rc.eval.split + "' is empty");
  }
  const auto rep = per_setup_report(ck.params, cfg, samples, "eval_" + rc.eval.split, rc.seed);
  write_file(out_path(rc, "metrics.csv"), rep.to_csv());
  write_file(out_path(rc, "metrics.json"), rep.to_json().dump(2) + "\n");
  for (const auto & r : rep.rows) {
    log << "eval: " << r.setup << " n=" << r.metrics.n << " minADE_K " << fixed(r.metrics.min_ade_k)
        << " minFDE_K " << fixed(r.metrics.min_fde_k) << " ADE " << fixed(r.metrics.ade) << " FDE "
        << fixed(r.metrics.fde) << " (meters)\n";
  }
  return 0;
}

inline std::string summary_csv(const std::vector<train::RowSummary> & rows)
{
  std::ostringstream os;
  os << "row,median_min_ade_k,min_min_ade_k,max_min_ade_k,median_min_fde_k,median_ade,median_fde,seeds\n"
     << std::setprecision(17);
  for (const auto & r : rows) {
    os << r.row << ',' << r.median_min_ade_k << ',' << r.min_min_ade_k << ',' << r.max_min_ade_k << ','
       << r.median_min_fde_k << ',' << r.median_ade << ',' << r.median_fde << ',' << r.seeds << '\n';
  }
  return os.str();
}

inline void write_table(
  const RunConfig & rc, const std::string & which, const std::string & title,
  const std::vector<train::TableEntry> & entries, const std::string & setup, std::ostream & log)
{
  const auto cfg = rc.seeded_model();
  write_file(
    out_path(rc, "ablation_" + which + ".csv"),
    train::to_report(entries, "ablation_" + which, setup, hex64(cfg.digest())).to_csv());
  const auto rows = train::summarize(entries);
  write_file(out_path(rc, "ablation_" + which + "_summary.csv"), summary_csv(rows));
  std::vector<train::Bar> bars;
  for (const auto & r : rows) {
    bars.push_back({r.row, r.median_min_ade_k, r.min_min_ade_k, r.max_min_ade_k});
    log << "ablate " << which << ": " << r.row << " median minADE_K " << fixed(r.median_min_ade_k) << " ["
        << fixed(r.min_min_ade_k) << ", " << fixed(r.max_min_ade_k) << "] minFDE_K "
        << fixed(r.median_min_fde_k) << "\n";
  }
  write_file(
    out_path(rc, "ablation_" + which + ".svg"),
    train::bar_chart_svg(title, "median minADE_K over seeds (m)", bars));
}

inline train::FpsAblationInputs fps_inputs(const Dataset & d)
{
  train::FpsAblationInputs in;
  const auto sources = d.train_sources();
  if (!sources.count("setup1") || !sources.count("setup2")) {
    throw ConfigError("ablate fps needs data.benchmark = cross_setup");
  }
  in.setup1 = sources.at("setup1");
  in.setup2 = sources.at("setup2");
  in.setup3 = d.test();
  return in;
}

inline int ablate_twoframe(const RunConfig & rc, const Dataset & d, std::ostream & log)
{
  const auto mixture = mixture_sources(rc, d);
  auto plan = rc.seeded_plan();
  plan.phase = model::Phase::pretrain;
  const auto test = d.test();
  struct Arm
  {
    std::string label;
    double temporal;
  };
  const std::vector<Arm> arms = {
    {"masked", rc.model.mask_ratios.temporal},
    {"unmasked", 0.0},
  };
  std::ostringstream csv;
  csv << "arm,seed,full_min_ade_k,two_frame_min_ade_k,full_min_fde_k,two_frame_min_fde_k,ade_degradation_pct,"
         "fde_degradation_pct\n"
      << std::setprecision(17);
  std::vector<train::Bar> bars;
  for (const auto & arm : arms) {
    std::vector<double> degr;
    for (auto seed : rc.eval.seeds) {
      auto cfg = rc.seeded_model();
      cfg.mask_ratios.temporal = arm.temporal;
      cfg.seed = seed;
      auto p = plan;
      p.seed = seed;
      const auto w = train::train(p, cfg, mixture).weights;
      const auto r = train::two_frame_eval(w, cfg, test);
      csv << arm.label << ',' << seed << ',' << r.full.min_ade_k << ',' << r.two_frame.min_ade_k << ','
          << r.full.min_fde_k << ',' << r.two_frame.min_fde_k << ',' << r.ade_degradation_pct << ','
          << r.fde_degradation_pct << '\n';
      degr.push_back(r.ade_degradation_pct);
    }
    const double med = train::median(degr);
    bars.push_back({arm.label, med, *std::min_element(degr.begin(), degr.end()),
                    *std::max_element(degr.begin(), degr.end())});
    log << "ablate twoframe: " << arm.label << " median ADE degradation " << fixed(med, 2) << "%\n";
  }
  write_file(out_path(rc, "ablation_twoframe.csv"), csv.str());
  write_file(
    out_path(rc, "ablation_twoframe.svg"),
    train::bar_chart_svg("Two-frame evaluation", "median minADE_K degradation (%)", bars));
  return 0;
}

inline int ablate_fewshot(const RunConfig & rc, const Dataset & d, std::ostream & log)
{
  if (rc.data.source != "generator" || rc.data.benchmark != "cross_setup") {
    throw ConfigError("ablate fewshot needs data.source = generator and data.benchmark = cross_setup");
  }
  const auto target_store = synthgen::build_windows(d.train_scenes, synthgen::setup3());
  const auto target_train = train::pointers(target_store);
  const auto target_test = d.test();
  const auto mixture = mixture_sources(rc, d);
  auto ft = rc.seeded_plan();
  ft.epochs = rc.eval.fewshot_epochs;
  ft.samples_per_epoch = rc.eval.fewshot_samples_per_epoch;

  std::vector<train::FewShotPoint> points;
  for (auto seed : rc.eval.seeds) {
    auto cfg = rc.seeded_model();
    cfg.seed = seed;
    auto p = rc.seeded_plan();
    p.seed = seed;
    const auto pretrained = train::train(p, cfg, mixture).weights;
    for (const auto & [label, init] :
         std::vector<std::pair<std::string, numerics::ParamStore>>{{"pretrained", pretrained},
                                                                   {"scratch", model::init_weights(cfg)}}) {
      for (auto & pt :
           train::few_shot_finetune(init, label, cfg, target_train, target_test, rc.eval.fewshot_n, ft, {seed})) {
        points.push_back(std::move(pt));
      }
    }
  }
  std::ostringstream csv;
  csv << "init,n,seed,ade,fde,min_ade_k,min_fde_k,n_test\n" << std::setprecision(17);
  for (const auto & pt : points) {
    csv << pt.init << ',' << pt.n << ',' << pt.seed << ',' << pt.metrics.ade << ',' << pt.metrics.fde << ','
        << pt.metrics.min_ade_k << ',' << pt.metrics.min_fde_k << ',' << pt.metrics.n << '\n';
  }
  write_file(out_path(rc, "ablation_fewshot.csv"), csv.str());
  std::vector<train::Series> series;
  for (const std::string init : {"pretrained", "scratch"}) {
    train::Series s{init, {}, {}};
    for (auto n : rc.eval.fewshot_n) {
      std::vector<double> v;
      for (const auto & pt : points) {
        if (pt.init == init && pt.n == n) {
          v.push_back(pt.metrics.min_ade_k);
        }
      }
      s.x.push_back(static_cast<double>(n));
      s.y.push_back(train::median(v));
      log << "ablate fewshot: " << init << " n=" << n << " median minADE_K " << fixed(s.y.back()) << "\n";
    }
    series.push_back(std::move(s));
  }
  write_file(
    out_path(rc, "ablation_fewshot.svg"),
    train::line_chart_svg("Few-shot fine-tuning on Setup 3", "training samples n", "median minADE_K (m)", series, true));
  return 0;
}

inline const std::vector<std::string> & ablation_names()
{
  static const std::vector<std::string> names = {"fps", "decoupled", "mask", "twoframe", "fewshot"};
  return names;
}

inline int cmd_ablate(const RunConfig & rc, const std::string & which, std::ostream & log)
{
  const auto & names = ablation_names();
  if (std::find(names.begin(), names.end(), which) == names.end()) {
    throw ConfigError("ablate: unknown table '" + which + "' (expected fps, decoupled, mask, twoframe or fewshot)");
  }
  write_resolved_config(rc);
  const auto data = load_dataset(rc);
  const auto cfg = rc.seeded_model();
  const auto plan = rc.seeded_plan();
  const auto test_setup = data.test_store.empty() ? std::string("test") : setup_name(data.test_store.front());
  if (which == "fps") {
    write_table(
      rc, which, "Zero-shot transfer by FPS encoder",
      train::run_ablation_fps(fps_inputs(data), cfg, plan, rc.eval.seeds), test_setup, log);
  } else if (which == "decoupled") {
    write_table(
      rc, which, "Decoupled interaction modules",
      train::run_ablation_decoupled(data.train(), data.test(), cfg, plan, rc.eval.seeds), test_setup, log);
  } else if (which == "mask") {
    write_table(
      rc, which, "Temporal masking ratio",
      train::run_ablation_mask_ratio(data.train(), data.test(), cfg, plan, rc.eval.seeds, rc.eval.mask_ratios),
      test_setup, log);
  } else if (which == "twoframe") {
    return ablate_twoframe(rc, data, log);
  } else {
    return ablate_fewshot(rc, data, log);
  }
  return 0;
}

}  // namespace omnitraj::cli

#endif  // OMNITRAJ__CLI__COMMANDS_HPP_
