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

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "skey/checkpoint.hpp"
#include "skey/chromanet.hpp"
#include "skey/manifest.hpp"
#include "skey/objectives.hpp"

namespace skey {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr_peak = 1e-3;
  double warmup_fraction = 0.05;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  double segment_seconds = kSegmentSeconds;
  int c_min = 0;
  int c_max = kMaxTransposition;
  int k_min = -12;
  int k_max = 12;
  LossWeights weights;
  ModelConfig model = ModelConfig::compact();
  int jobs = 1;
  // Stop after this many optimizer steps in total (the schedule still spans
  // all epochs); 0 runs to the end.
  std::int64_t max_steps = 0;
  // After restart_check_epochs epochs, a run whose pseudo-labels in the last
  // epoch are major for less than restart_balance or more than
  // 1 - restart_balance of the songs is started again from a fresh
  // initialization, at most max_restarts times. 0 epochs disables the check.
  int restart_check_epochs = 2;
  double restart_balance = 0.25;
  int max_restarts = 4;
  // Later epochs outside the same band roll back to the state two epochs
  // earlier and halve the learning rate from there, at most max_rollbacks
  // times. Snapshots live in memory, so a resumed run starts without them.
  int max_rollbacks = 3;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }
};

struct TrainingTrack {
  std::string id;
  CqtMatrix cqt;
};

// c uniform on [c_min, c_max], then k uniform on [k_min, k_max] redrawn until
// c + k lies in [c_min, c_max].
std::pair<int, int> sample_transpositions(Rng& rng, const TrainConfig& cfg = {});

// Linear ramp 0 -> lr_peak over the warmup steps, then half-cosine to 0.
double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg);

std::int64_t steps_per_epoch(std::size_t songs, int batch_size);

struct StepRecord {
  std::int64_t step = 0;  // 1-based optimizer step
  int epoch = 0;          // 0-based
  double lr = 0.0;
  double grad_norm = 0.0;
  LossBreakdown loss;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelState model;
  OptimizerState optimizer;
  std::vector<StepRecord> log;
  std::vector<double> epoch_mean_total;  // epochs completed in this call
  std::vector<std::filesystem::path> checkpoints;
  int restarts = 0;  // fresh initializations after unbalanced pseudo-labels
  int rollbacks = 0;
};

struct TrainHooks {
  std::filesystem::path checkpoint_dir;  // empty disables checkpoints
  std::filesystem::path log_path;        // JSON-lines, appended per step
  std::function<void(const StepRecord&)> on_step;
  // Merged into checkpoint metadata and written as the log's first line.
  nlohmann::json metadata = nlohmann::json::object();
};

// Resumes from `resume` when given (model step decides the position).
TrainResult train(const std::vector<TrainingTrack>& tracks, const TrainConfig& cfg, const TrainHooks& hooks = {},
                  const Checkpoint* resume = nullptr);

// Loads every record's CQT for training (>= 31 s each).
std::vector<TrainingTrack> load_training_tracks(const Manifest& manifest, const CqtCache& cache, int jobs = 1);

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, int epoch);

}  // namespace skey
