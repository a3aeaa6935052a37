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

#include <fstream>
#include <random>

#include "doctest.h"
#include "skey/error.hpp"
#include "skey/trainer.hpp"
#include "test_util.hpp"

using namespace skey;
using skey::test::TempDir;

namespace {

std::vector<TrainingTrack> toy_tracks(int n, std::uint64_t seed) {
  std::mt19937 gen(static_cast<std::uint32_t>(seed));
  std::uniform_real_distribution<float> d(0.0f, 0.02f);
  std::vector<TrainingTrack> tracks;
  const CqtParams p;
  for (int i = 0; i < n; ++i) {
    TrainingTrack t;
    t.id = "toy" + std::to_string(i);
    t.cqt.frame_rate = p.frame_rate();
    t.cqt.magnitudes.resize(kCqtBins, 170);
    for (Eigen::Index j = 0; j < t.cqt.magnitudes.size(); ++j) t.cqt.magnitudes(j) = d(gen);
    // A few strong partials so the pseudo-labels vary.
    for (int h : {3 + i, 7 + i, 10 + i}) t.cqt.magnitudes.row(24 + h).array() += 0.5f;
    tracks.push_back(std::move(t));
  }
  return tracks;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 11;
  cfg.jobs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("transposition sampling respects the crop range") {
  Rng rng(1);
  TrainConfig cfg;
  std::array<int, 16> counts{};
  const int draws = 32000;
  for (int i = 0; i < draws; ++i) {
    const auto [c, k] = sample_transpositions(rng, cfg);
    REQUIRE(c >= 0);
    REQUIRE(c <= 15);
    REQUIRE(c + k >= 0);
    REQUIRE(c + k <= 15);
    if (c == 0) CHECK(k >= 0);
    if (c == 15) CHECK(k <= 0);
    counts[static_cast<std::size_t>(c)] += 1;
  }
  // Chi-square against uniform c, 15 degrees of freedom, p = 0.001.
  double chi2 = 0.0;
  const double expect = draws / 16.0;
  for (int n : counts) chi2 += (n - expect) * (n - expect) / expect;
  CHECK(chi2 < 37.70);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  const std::int64_t total = 1000;
  CHECK(lr_at(0, total, cfg) == 0.0);
  CHECK(lr_at(50, total, cfg) == doctest::Approx(1e-3));
  CHECK(lr_at(25, total, cfg) == doctest::Approx(5e-4));
  CHECK(lr_at(total, total, cfg) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lr_at(525, total, cfg) == doctest::Approx(5e-4));
  for (std::int64_t s = 51; s < total; ++s) CHECK(lr_at(s, total, cfg) <= lr_at(s - 1, total, cfg));
}

TEST_CASE("config validation and JSON") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.k_min = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  const TrainConfig parsed = TrainConfig::from_json({{"epochs", 3}, {"c_range", {2, 9}}, {"reduction", "sum"}});
  CHECK(parsed.epochs == 3);
  CHECK(parsed.c_min == 2);
  CHECK(parsed.c_max == 9);
  CHECK(parsed.weights.reduction == BatchReduction::kSum);
  CHECK(TrainConfig::from_json(parsed.to_json()).to_json() == parsed.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json({{"model", "huge"}}), Error);
}

TEST_CASE("8 songs, 2 epochs, batch 4: four steps and two checkpoints") {
  TempDir dir("train_toy");
  TrainHooks hooks;
  hooks.checkpoint_dir = dir / "ckpt";
  hooks.log_path = dir / "log.jsonl";
  hooks.metadata = {{"seed", 11}};
  const TrainResult r = train(toy_tracks(8, 1), toy_config(), hooks);
  CHECK(r.log.size() == 4);
  CHECK(r.model.step == 4);
  CHECK(r.epoch_mean_total.size() == 2);
  REQUIRE(r.checkpoints.size() == 2);
  CHECK(std::filesystem::exists(epoch_checkpoint_path(hooks.checkpoint_dir, 1)));
  CHECK(std::filesystem::exists(epoch_checkpoint_path(hooks.checkpoint_dir, 2)));

  std::ifstream in(hooks.log_path);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0]["_meta"]["seed"] == 11);
  for (const char* key : {"step", "lr", "cpsd", "skey", "avg", "total", "mode_avg"}) CHECK(lines[1].contains(key));

  const Checkpoint ck = load_checkpoint(r.checkpoints.back());
  CHECK(ck.model.params == r.model.params);
  CHECK(ck.metadata["epoch"] == 2);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto tracks = toy_tracks(8, 2);
  const TrainResult a = train(tracks, toy_config());
  const TrainResult b = train(tracks, toy_config());
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss.total == b.log[i].loss.total);
  CHECK(a.model.params == b.model.params);

  TrainConfig other = toy_config();
  other.seed = 12;
  CHECK(train(tracks, other).model.params != a.model.params);
}

TEST_CASE("resuming continues the same trajectory") {
  TempDir dir("train_resume");
  const auto tracks = toy_tracks(8, 3);
  TrainConfig cfg = toy_config();
  cfg.epochs = 5;
  const TrainResult full = train(tracks, cfg);
  REQUIRE(full.model.step == 10);

  TrainConfig first = cfg;
  first.max_steps = 5;
  TrainHooks hooks;
  hooks.checkpoint_dir = dir.path();
  const TrainResult head = train(tracks, first, hooks);
  CHECK(head.model.step == 5);
  const Checkpoint mid = load_checkpoint(dir / "latest.skey");
  const TrainResult tail = train(tracks, cfg, {}, &mid);
  CHECK(tail.log.size() == 5);
  CHECK(tail.model.step == 10);
  CHECK(tail.model.params == full.model.params);
  for (std::size_t i = 0; i < 5; ++i) CHECK(tail.log[i].loss.total == full.log[5 + i].loss.total);
}

TEST_CASE("unbalanced pseudo-labels restart from a fresh initialization") {
  TempDir dir("train_restart");
  const auto tracks = toy_tracks(8, 1);
  TrainConfig cfg = toy_config();
  cfg.epochs = 3;
  cfg.restart_check_epochs = 1;
  cfg.restart_balance = 0.49;
  cfg.max_restarts = 1;
  TrainHooks hooks;
  hooks.checkpoint_dir = dir / "ckpt";
  hooks.log_path = dir / "log.jsonl";
  const TrainResult r = train(tracks, cfg, hooks);
  REQUIRE(r.restarts == 1);
  CHECK(r.log.size() == 6);
  CHECK(r.log.front().step == 1);
  CHECK(r.epoch_mean_total.size() == 3);
  CHECK(r.model.step == 6);
  CHECK(load_checkpoint(r.checkpoints.back()).metadata["restarts"] == 1);

  std::ifstream in(hooks.log_path);
  std::string line;
  int restart_lines = 0;
  while (std::getline(in, line)) restart_lines += nlohmann::json::parse(line).contains("_restart") ? 1 : 0;
  CHECK(restart_lines == 1);

  cfg.restart_check_epochs = 0;
  CHECK(train(tracks, cfg).restarts == 0);
}

TEST_CASE("a later unbalanced epoch rolls back and halves the learning rate") {
  TempDir dir("train_rollback");
  TrainConfig cfg = toy_config();
  cfg.epochs = 8;
  cfg.restart_check_epochs = 1;
  cfg.restart_balance = 0.3;
  cfg.max_rollbacks = 1;
  TrainHooks hooks;
  hooks.log_path = dir / "log.jsonl";
  const TrainResult r = train(toy_tracks(8, 1), cfg, hooks);
  CHECK(r.restarts == 0);
  REQUIRE(r.rollbacks == 1);
  REQUIRE(r.log.size() == 16);
  for (std::size_t i = 0; i < r.log.size(); ++i) CHECK(r.log[i].step == static_cast<std::int64_t>(i) + 1);
  CHECK(r.log.back().lr == doctest::Approx(0.5 * lr_at(16, 16, cfg)));
  CHECK(r.log[3].lr == doctest::Approx(0.5 * lr_at(4, 16, cfg)));
  CHECK(r.log[1].lr == doctest::Approx(lr_at(2, 16, cfg)));
  CHECK(r.epoch_mean_total.size() == 8);

  std::ifstream in(hooks.log_path);
  std::string line;
  int rollback_lines = 0;
  while (std::getline(in, line)) rollback_lines += nlohmann::json::parse(line).contains("_rollback") ? 1 : 0;
  CHECK(rollback_lines == 1);
}

TEST_CASE("empty corpus and short tracks are rejected") {
  CHECK_THROWS_AS(train({}, toy_config()), Error);
  auto tracks = toy_tracks(2, 4);
  tracks[1].cqt.magnitudes.conservativeResize(kCqtBins, 100);
  try {
    train(tracks, toy_config());
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooShort);
  }
}
