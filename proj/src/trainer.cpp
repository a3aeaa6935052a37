/**
 * Copyright 2026 The skey Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "skey/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <future>
#include <numeric>

#include "skey/error.hpp"

namespace skey {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0xe90c, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

struct PreparedSong {
  std::size_t track = 0;
  int c = 0;
  int k = 0;
  int start_a = 0;
  int start_b = 0;
  MatrixX<float> a_c;
  MatrixX<float> b_c;
  MatrixX<float> a_ck;
  Pcp pcp;
};

struct PreparedBatch {
  std::int64_t step = 0;
  std::vector<PreparedSong> songs;
};

PreparedBatch prepare_batch(const std::vector<TrainingTrack>& tracks, const TrainConfig& cfg, std::int64_t step,
                            std::int64_t per_epoch, int jobs) {
  const int epoch = static_cast<int>(step / per_epoch);
  const std::int64_t pos = step % per_epoch;
  const auto order = epoch_order(tracks.size(), cfg.seed, epoch);
  const std::size_t begin = static_cast<std::size_t>(pos) * static_cast<std::size_t>(cfg.batch_size);
  const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));

  PreparedBatch batch;
  batch.step = step;
  batch.songs.resize(end - begin);
  parallel_for(static_cast<int>(end - begin), jobs, [&](int i) {
    PreparedSong& s = batch.songs[static_cast<std::size_t>(i)];
    s.track = order[begin + static_cast<std::size_t>(i)];
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i)));
    const SegmentPair pair = extract_segment_pair(tracks[s.track].cqt, rng, cfg.segment_seconds);
    std::tie(s.c, s.k) = sample_transpositions(rng, cfg);
    s.start_a = pair.a.start_frame;
    s.start_b = pair.b.start_frame;
    const CroppedCqt a = transpose_crop(pair.a, s.c);
    const CroppedCqt b = transpose_crop(pair.b, s.c);
    s.pcp = pitch_class_profile(a, b);
    s.a_c = network_input(a);
    s.b_c = network_input(b);
    s.a_ck = network_input(transpose_crop(pair.a, s.c + s.k));
  });
  return batch;
}

std::filesystem::path dump_batch(const std::filesystem::path& dir, const PreparedBatch& batch,
                                 const std::vector<TrainingTrack>& tracks, const LossBreakdown& loss,
                                 double grad_norm) {
  const auto base = dir.empty() ? std::filesystem::temp_directory_path() : dir;
  std::filesystem::create_directories(base);
  const auto path = base / ("nonfinite_step_" + std::to_string(batch.step + 1) + ".json");
  nlohmann::json songs = nlohmann::json::array();
  for (const auto& s : batch.songs) {
    songs.push_back({{"id", tracks[s.track].id},
                     {"c", s.c},
                     {"k", s.k},
                     {"start_frame_a", s.start_a},
                     {"start_frame_b", s.start_b},
                     {"pcp", s.pcp.energies}});
  }
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v)); };
  nlohmann::json j{{"step", batch.step + 1},
                   {"loss",
                    {{"cpsd", num(loss.cpsd)},
                     {"skey", num(loss.skey)},
                     {"avg", num(loss.avg)},
                     {"total", num(loss.total)}}},
                   {"grad_norm", num(grad_norm)},
                   {"songs", songs}};
  std::ofstream(path) << j.dump(2) << '\n';
  return path;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be at least 1");
  require(batch_size >= 2, ErrorCode::kInvalidArgument, "batch_size must be at least 2");
  require(lr_peak > 0 && warmup_fraction >= 0 && warmup_fraction < 1, ErrorCode::kInvalidArgument,
          "invalid learning-rate schedule");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_epsilon > 0 && weight_decay >= 0,
          ErrorCode::kInvalidArgument, "invalid optimizer settings");
  require(clip_norm > 0, ErrorCode::kInvalidArgument, "clip_norm must be positive");
  require(segment_seconds > 0, ErrorCode::kInvalidArgument, "segment_seconds must be positive");
  require(0 <= c_min && c_min <= c_max && c_max <= kMaxTransposition, ErrorCode::kInvalidArgument,
          "c range must lie in [0, 15]");
  require(-12 <= k_min && k_min <= 0 && 0 <= k_max && k_max <= 12, ErrorCode::kInvalidArgument,
          "k range must lie in [-12, 12] and contain 0");
  require(jobs >= 1 && max_steps >= 0, ErrorCode::kInvalidArgument, "invalid jobs or max_steps");
  require(restart_check_epochs >= 0 && max_restarts >= 0 && max_rollbacks >= 0 && restart_balance >= 0 &&
              restart_balance < 0.5,
          ErrorCode::kInvalidArgument, "invalid restart settings");
  model.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr_peak", lr_peak},
          {"warmup_fraction", warmup_fraction},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"segment_seconds", segment_seconds},
          {"c_range", {c_min, c_max}},
          {"k_range", {k_min, k_max}},
          {"w_skey", weights.skey},
          {"w_avg", weights.avg},
          {"reduction", weights.reduction == BatchReduction::kMean ? "mean" : "sum"},
          {"model", model.to_json()},
          {"max_steps", max_steps},
          {"restart_check_epochs", restart_check_epochs},
          {"restart_balance", restart_balance},
          {"max_restarts", max_restarts},
          {"max_rollbacks", max_rollbacks}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_peak = j.value("lr_peak", c.lr_peak);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.segment_seconds = j.value("segment_seconds", c.segment_seconds);
    if (j.contains("c_range")) std::tie(c.c_min, c.c_max) = std::pair{j["c_range"].at(0).get<int>(), j["c_range"].at(1).get<int>()};
    if (j.contains("k_range")) std::tie(c.k_min, c.k_max) = std::pair{j["k_range"].at(0).get<int>(), j["k_range"].at(1).get<int>()};
    c.weights.skey = j.value("w_skey", c.weights.skey);
    c.weights.avg = j.value("w_avg", c.weights.avg);
    if (j.contains("reduction")) {
      const auto r = j["reduction"].get<std::string>();
      require(r == "mean" || r == "sum", ErrorCode::kInvalidArgument, "reduction must be mean or sum");
      c.weights.reduction = r == "mean" ? BatchReduction::kMean : BatchReduction::kSum;
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.is_string()) {
        const auto name = m.get<std::string>();
        require(name == "compact" || name == "reference", ErrorCode::kInvalidArgument, "unknown model preset " + name);
        c.model = name == "compact" ? ModelConfig::compact() : ModelConfig::reference();
      } else {
        c.model = ModelConfig::from_json(m);
      }
    }
    c.jobs = j.value("jobs", c.jobs);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.restart_check_epochs = j.value("restart_check_epochs", c.restart_check_epochs);
    c.restart_balance = j.value("restart_balance", c.restart_balance);
    c.max_restarts = j.value("max_restarts", c.max_restarts);
    c.max_rollbacks = j.value("max_rollbacks", c.max_rollbacks);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("invalid training config: ") + e.what());
  }
  return c;
}

std::pair<int, int> sample_transpositions(Rng& rng, const TrainConfig& cfg) {
  std::uniform_int_distribution<int> c_dist(cfg.c_min, cfg.c_max);
  std::uniform_int_distribution<int> k_dist(cfg.k_min, cfg.k_max);
  const int c = c_dist(rng);
  int k = k_dist(rng);
  while (c + k < cfg.c_min || c + k > cfg.c_max) k = k_dist(rng);
  return {c, k};
}

double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
  if (total_steps <= 0) return 0.0;
  step = std::clamp<std::int64_t>(step, 0, total_steps);
  const auto warmup = static_cast<std::int64_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total_steps)));
  if (step < warmup) return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps == warmup) return cfg.lr_peak;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return 0.5 * cfg.lr_peak * (1.0 + std::cos(kPi * progress));
}

std::int64_t steps_per_epoch(std::size_t songs, int batch_size) {
  return static_cast<std::int64_t>((songs + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size));
}

nlohmann::json StepRecord::to_json() const {
  return {{"step", step},
          {"epoch", epoch},
          {"lr", lr},
          {"cpsd", loss.cpsd},
          {"skey", loss.skey},
          {"avg", loss.avg},
          {"total", loss.total},
          {"mode_avg", loss.mode_average},
          {"pseudo_major", loss.pseudo_major_fraction},
          {"grad_norm", grad_norm}};
}

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof(name), "epoch_%03d.skey", epoch);
  return dir / name;
}

TrainResult train(const std::vector<TrainingTrack>& tracks, const TrainConfig& cfg, const TrainHooks& hooks,
                  const Checkpoint* resume) {
  cfg.validate();
  require(!tracks.empty(), ErrorCode::kEmptyCorpus, "training corpus is empty");

  TrainResult result;
  result.model = resume ? resume->model : ModelState::initialize(cfg.model, cfg.seed);
  const ParamLayout layout(result.model.config);
  const int segment_frames = static_cast<int>(std::lround(cfg.segment_seconds * tracks.front().cqt.frame_rate));
  require(segment_frames >= result.model.config.min_frames(), ErrorCode::kInvalidArgument,
          "segments of " + std::to_string(segment_frames) + " frames are too short for this model (needs " +
              std::to_string(result.model.config.min_frames()) + ")");

  OptimizerState& opt = result.optimizer;
  if (resume && resume->optimizer) {
    opt = *resume->optimizer;
  } else {
    opt.first_moment.assign(layout.total, 0.0f);
    opt.second_moment.assign(layout.total, 0.0f);
  }

  const std::int64_t per_epoch = steps_per_epoch(tracks.size(), cfg.batch_size);
  const std::int64_t total = per_epoch * cfg.epochs;
  std::int64_t stop = total;
  if (cfg.max_steps > 0) stop = std::min(stop, cfg.max_steps);

  std::ofstream log;
  if (!hooks.log_path.empty()) {
    if (hooks.log_path.has_parent_path()) std::filesystem::create_directories(hooks.log_path.parent_path());
    log.open(hooks.log_path, resume ? std::ios::app : std::ios::trunc);
    require(log.good(), ErrorCode::kIoError, "cannot write training log " + hooks.log_path.string());
  }
  nlohmann::json run_meta = hooks.metadata.is_object() ? hooks.metadata : nlohmann::json::object();
  run_meta["train_config"] = cfg.to_json();
  run_meta["songs"] = tracks.size();
  if (log.is_open() && !resume) log << nlohmann::json{{"_meta", run_meta}}.dump() << '\n';

  auto launch = [&](std::int64_t step) {
    return std::async(cfg.jobs > 1 ? std::launch::async : std::launch::deferred,
                      [&, step] { return prepare_batch(tracks, cfg, step, per_epoch, cfg.jobs); });
  };

  if (resume) {
    result.restarts = resume->metadata.value("restarts", 0);
    result.rollbacks = resume->metadata.value("rollbacks", 0);
  }
  auto restart_seed = [&](int attempt) {
    return attempt == 0 ? cfg.seed : mix_seed(cfg.seed, 0x7e57, static_cast<std::uint64_t>(attempt));
  };
  const std::int64_t check_step = cfg.restart_check_epochs > 0 ? per_epoch * cfg.restart_check_epochs : -1;
  auto checkpoint_meta = [&] {
    nlohmann::json meta = run_meta;
    meta["restarts"] = result.restarts;
    meta["rollbacks"] = result.rollbacks;
    if (result.restarts > 0) meta["init_seed"] = restart_seed(result.restarts);
    return meta;
  };

  struct Snapshot {
    ModelState model;
    OptimizerState opt;
    std::size_t log_size = 0;
    std::size_t epochs = 0;
    std::size_t checkpoints = 0;
  };
  std::deque<Snapshot> snapshots;

  double epoch_sum = 0.0;
  double epoch_major = 0.0;
  std::int64_t epoch_count = 0;
  std::int64_t step = result.model.step;
  std::future<PreparedBatch> pending;
  if (step < stop) pending = launch(step);

  for (; step < stop; ++step) {
    PreparedBatch batch = pending.get();
    if (step + 1 < stop) pending = launch(step + 1);
    const std::size_t n = batch.songs.size();

    std::vector<MatrixX<float>> inputs;
    inputs.reserve(3 * n);
    for (const auto& s : batch.songs) inputs.push_back(s.a_c);
    for (const auto& s : batch.songs) inputs.push_back(s.b_c);
    for (const auto& s : batch.songs) inputs.push_back(s.a_ck);

    BackboneBatch<float> backbone(layout, result.model.params, cfg.jobs);
    NormStats stats = result.model.norm;
    std::vector<FeatureMap> features;
    try {
      features = backbone.forward(inputs, true, &stats, result.model.config.bn_momentum,
                                  result.model.config.bn_epsilon);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteActivation) throw;
      const auto dump = dump_batch(hooks.checkpoint_dir, batch, tracks, {}, 0.0);
      fail(ErrorCode::kNonFiniteLoss, std::string(e.what()) + "; batch dumped to " + dump.string());
    }

    std::vector<ChromaTensor> ys(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) ys[i] = structured_head(features[i]);
    std::vector<SongForward> songs(n);
    for (std::size_t s = 0; s < n; ++s) {
      songs[s] = {ys[s], ys[n + s], ys[2 * n + s], batch.songs[s].pcp, batch.songs[s].k};
    }
    std::vector<SongGradients> song_grads;
    const LossBreakdown loss = total_loss(songs, cfg.weights, &song_grads);

    std::vector<FeatureMap> d_features(features.size());
    for (std::size_t s = 0; s < n; ++s) {
      d_features[s] = structured_head_backward(ys[s], song_grads[s].a_c);
      d_features[n + s] = structured_head_backward(ys[n + s], song_grads[s].b_c);
      d_features[2 * n + s] = structured_head_backward(ys[2 * n + s], song_grads[s].a_ck);
    }
    std::vector<float> grad = std::isfinite(loss.total) ? backbone.backward(d_features) : std::vector<float>{};
    double norm_sq = 0.0;
    for (float g : grad) norm_sq += static_cast<double>(g) * g;
    const double grad_norm = std::sqrt(norm_sq);
    if (!std::isfinite(loss.total) || !std::isfinite(grad_norm)) {
      const auto dump = dump_batch(hooks.checkpoint_dir, batch, tracks, loss, grad_norm);
      fail(ErrorCode::kNonFiniteLoss,
           "non-finite loss at step " + std::to_string(step + 1) + "; batch dumped to " + dump.string());
    }
    result.model.norm = stats;

    // AdamW with decoupled weight decay, after global-norm clipping.
    const double lr = std::ldexp(lr_at(step + 1, total, cfg), -result.rollbacks);
    const double scale = grad_norm > cfg.clip_norm ? cfg.clip_norm / grad_norm : 1.0;
    opt.updates += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.updates));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.updates));
    for (std::size_t i = 0; i < layout.total; ++i) {
      const double g = static_cast<double>(grad[i]) * scale;
      const double m = cfg.beta1 * opt.first_moment[i] + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * opt.second_moment[i] + (1.0 - cfg.beta2) * g * g;
      opt.first_moment[i] = static_cast<float>(m);
      opt.second_moment[i] = static_cast<float>(v);
      double p = result.model.params[i];
      p *= 1.0 - lr * cfg.weight_decay;
      p -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_epsilon);
      result.model.params[i] = static_cast<float>(p);
    }
    result.model.step = step + 1;

    StepRecord rec;
    rec.step = step + 1;
    rec.epoch = static_cast<int>(step / per_epoch);
    rec.lr = lr;
    rec.grad_norm = grad_norm;
    rec.loss = loss;
    result.log.push_back(rec);
    if (log.is_open()) log << rec.to_json().dump() << '\n' << std::flush;
    if (hooks.on_step) hooks.on_step(rec);

    epoch_sum += loss.total;
    epoch_major += loss.pseudo_major_fraction;
    epoch_count += 1;
    if ((step + 1) % per_epoch == 0) {
      const double major = epoch_major / static_cast<double>(epoch_count);
      result.epoch_mean_total.push_back(epoch_sum / static_cast<double>(epoch_count));
      epoch_sum = 0.0;
      epoch_major = 0.0;
      epoch_count = 0;
      const bool unbalanced = major < cfg.restart_balance || major > 1.0 - cfg.restart_balance;
      if (step + 1 == check_step && step + 1 < stop && result.restarts < cfg.max_restarts && unbalanced) {
        result.restarts += 1;
        const std::uint64_t seed = restart_seed(result.restarts);
        if (log.is_open()) {
          log << nlohmann::json{{"_restart", {{"after_step", step + 1}, {"pseudo_major", major}, {"init_seed", seed}}}}.dump()
              << '\n';
        }
        pending.wait();
        result.model = ModelState::initialize(cfg.model, seed);
        opt = OptimizerState{};
        opt.first_moment.assign(layout.total, 0.0f);
        opt.second_moment.assign(layout.total, 0.0f);
        result.log.clear();
        result.epoch_mean_total.clear();
        result.checkpoints.clear();
        step = -1;
        pending = launch(0);
        continue;
      }
      if (check_step > 0 && step + 1 > check_step && step + 1 < stop && unbalanced && !snapshots.empty() &&
          result.rollbacks < cfg.max_rollbacks) {
        Snapshot back = std::move(snapshots.front());
        snapshots.clear();
        result.rollbacks += 1;
        if (log.is_open()) {
          log << nlohmann::json{{"_rollback",
                                 {{"after_step", step + 1}, {"pseudo_major", major}, {"to_step", back.model.step}}}}
                     .dump()
              << '\n';
        }
        pending.wait();
        result.model = back.model;
        opt = back.opt;
        result.log.resize(back.log_size);
        result.epoch_mean_total.resize(back.epochs);
        result.checkpoints.resize(back.checkpoints);
        step = back.model.step - 1;
        pending = launch(back.model.step);
        snapshots.push_back(std::move(back));
        continue;
      }
      if (check_step > 0 && step + 1 >= check_step && !unbalanced) {
        if (snapshots.size() == 2) snapshots.pop_front();
        snapshots.push_back({result.model, opt, result.log.size(), result.epoch_mean_total.size(),
                             result.checkpoints.size() + (hooks.checkpoint_dir.empty() ? 0 : 1)});
      }
      if (!hooks.checkpoint_dir.empty()) {
        const auto path = epoch_checkpoint_path(hooks.checkpoint_dir, rec.epoch + 1);
        nlohmann::json meta = checkpoint_meta();
        meta["epoch"] = rec.epoch + 1;
        save_checkpoint(path, {result.model, opt, meta});
        result.checkpoints.push_back(path);
      }
    }
  }

  if (!hooks.checkpoint_dir.empty() && result.model.step % per_epoch != 0) {
    const auto path = hooks.checkpoint_dir / "latest.skey";
    save_checkpoint(path, {result.model, opt, checkpoint_meta()});
    result.checkpoints.push_back(path);
  }
  return result;
}

std::vector<TrainingTrack> load_training_tracks(const Manifest& manifest, const CqtCache& cache, int jobs) {
  require(!manifest.records.empty(), ErrorCode::kEmptyCorpus, "manifest " + manifest.path.string() + " has no records");
  std::vector<TrainingTrack> tracks(manifest.records.size());
  parallel_for(static_cast<int>(tracks.size()), jobs, [&](int i) {
    const auto& r = manifest.records[static_cast<std::size_t>(i)];
    tracks[static_cast<std::size_t>(i)] = {r.id, load_record_cqt(r, cache, AudioUse::kTraining)};
  });
  return tracks;
}

}  // namespace skey
