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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "skey/calibration.hpp"
#include "skey/checkpoint.hpp"
#include "skey/error.hpp"
#include "skey/evaluation.hpp"
#include "skey/selftest.hpp"
#include "skey/synth.hpp"
#include "skey/trainer.hpp"

using namespace skey;

namespace {

// Tolerances and targets.
constexpr double kZeroSetSeconds = 1.0;
constexpr double kGradientSeconds = 60.0;
constexpr int kClipsPerKey = 40;
constexpr int kHeldoutPerKey = 10;
constexpr int kEpochs = 50;
constexpr int kBatchSize = 32;
constexpr double kMinKsea = 95.0;
constexpr double kMinModeAcc = 90.0;
constexpr double kMinMirex = 85.0;
constexpr double kMaxEndToEndSeconds = 45.0 * 60.0;
constexpr double kMinLossDrop = 0.50;
constexpr double kMinHeuristicModeAcc = 75.0;
constexpr double kHeuristicSeconds = 60.0;
constexpr double kModeAvgLow = 0.2;
constexpr double kModeAvgHigh = 0.8;
constexpr double kMinInRangeFraction = 0.95;
constexpr int kMinFifthSteps = 20;
constexpr std::uint64_t kCorpusSeed = 7;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Reuses a corpus generated with the same spec.
CorpusResult corpus_at(const CorpusSpec& spec, const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.jsonl";
  if (std::filesystem::exists(manifest) && std::filesystem::exists(dir / "heldout.jsonl")) {
    std::ifstream in(manifest);
    std::string first;
    std::getline(in, first);
    const auto meta = nlohmann::json::parse(first, nullptr, false);
    if (!meta.is_discarded() && meta.contains("_meta") && meta["_meta"].value("corpus", nlohmann::json()) == spec.to_json()) {
      return {manifest, dir / "train.jsonl", dir / "heldout.jsonl", {}};
    }
  }
  std::filesystem::remove_all(dir);
  return generate_corpus(spec, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skey acceptance run"};
  std::filesystem::path work = std::filesystem::temp_directory_path() / "skey_acceptance";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;
  app.add_option("--work-dir", work, "Corpus, checkpoints and logs");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Training seed");
  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(work);

  {
    const auto t0 = Clock::now();
    const auto r = selftest_cpsd_zero_set();
    const double s = since(t0);
    report(1, r.passed && s < kZeroSetSeconds, r.detail + fmt(", %.3f s", s));
  }
  {
    const auto t0 = Clock::now();
    const auto loss = selftest_loss_gradients(seed);
    const auto net = selftest_backbone_gradients(seed);
    const double s = since(t0);
    report(2, loss.passed && net.passed && s < kGradientSeconds,
           "per-term " + loss.detail + "; backbone " + net.detail + fmt(", %.1f s", s));
  }
  {
    const auto r = selftest_head_equivariance(seed);
    report(3, r.passed, r.detail);
  }
  {
    const auto r = selftest_metric_fixtures();
    report(4, r.passed, r.detail);
  }

  // Criteria 5 to 8 share one synthetic run.
  const auto t_run = Clock::now();
  CorpusSpec spec;
  spec.n_per_key = kClipsPerKey;
  spec.holdout_per_key = kHeldoutPerKey;
  spec.seed = kCorpusSeed;
  spec.write_audio = false;
  spec.jobs = jobs;
  const CorpusResult corpus = corpus_at(spec, work / "corpus");
  std::fprintf(stderr, "corpus ready after %.0f s\n", since(t_run));

  const CqtCache cache;
  const Manifest train_manifest = read_manifest(corpus.train_manifest, true);
  const Manifest heldout = read_manifest(corpus.heldout_manifest, true);
  const auto tracks = load_training_tracks(train_manifest, cache, jobs);

  TrainConfig cfg;
  cfg.epochs = kEpochs;
  cfg.batch_size = kBatchSize;
  cfg.seed = seed;
  cfg.jobs = jobs;
  TrainHooks hooks;
  hooks.checkpoint_dir = work / "checkpoints";
  hooks.log_path = work / "train_log.jsonl";
  hooks.metadata = {{"tool", "skey_acceptance"}, {"seed", seed}, {"corpus_seed", kCorpusSeed}};
  std::int64_t last_epoch = -1;
  hooks.on_step = [&](const StepRecord& r) {
    if (r.epoch != last_epoch) {
      last_epoch = r.epoch;
      std::fprintf(stderr, "epoch %d  step %lld  loss %.3f  mode_avg %.3f  %.0f s\n", r.epoch + 1,
                   static_cast<long long>(r.step), r.loss.total, r.loss.mode_average, since(t_run));
    }
  };
  const TrainResult trained = train(tracks, cfg, hooks);

  ModelState model = trained.model;
  const ModelPredictor predictor(model, jobs);
  CalibrationDiagnostics diag;
  std::optional<CalibrationMap> calib;
  std::string calib_note;
  try {
    calib = calibrate(predictor, {}, &diag);
    calib_note = calib->to_json().dump() + (diag.used_fallback ? " (mass fallback)" : "");
  } catch (const Error& e) {
    calib_note = e.what();
  }
  model.calibration = calib;
  save_model(work / "calibrated.skey", model, hooks.metadata);

  std::vector<CqtMatrix> held_cqt(heldout.records.size());
  parallel_for(static_cast<int>(held_cqt.size()), jobs, [&](int i) {
    held_cqt[static_cast<std::size_t>(i)] =
        load_record_cqt(heldout.records[static_cast<std::size_t>(i)], cache, AudioUse::kInference);
  });

  MetricsReport metrics;
  if (calib) {
    std::vector<EvalRecord> records(heldout.records.size());
    const ModelPredictor serial(model, 1);
    parallel_for(static_cast<int>(records.size()), jobs, [&](int i) {
      const auto& r = heldout.records[static_cast<std::size_t>(i)];
      records[static_cast<std::size_t>(i)] = {r.id, *r.key, predict_key(serial, *calib, held_cqt[static_cast<std::size_t>(i)]).key,
                                              r.genre};
    });
    metrics = evaluate(records);
    std::ofstream(work / "metrics.json") << metrics.to_json().dump(2) << "\n";
  }
  const double run_seconds = since(t_run);

  const double first = trained.epoch_mean_total.empty() ? 0.0 : trained.epoch_mean_total.front();
  const double last = trained.epoch_mean_total.empty() ? 0.0 : trained.epoch_mean_total.back();
  const double drop = first > 0.0 ? 1.0 - last / first : 0.0;
  const bool pass5 = calib && metrics.ksea >= kMinKsea && metrics.mode_acc >= kMinModeAcc && metrics.mirex >= kMinMirex &&
                     run_seconds <= kMaxEndToEndSeconds && drop >= kMinLossDrop;
  report(5, pass5,
         fmt("KSEA %.1f (>= %.0f), mode %.1f (>= %.0f), MIREX %.1f (>= %.0f), loss %.3f -> %.3f drop %.0f%% (>= %.0f%%), "
             "%.0f s (<= %.0f); calibration %s",
             metrics.ksea, kMinKsea, metrics.mode_acc, kMinModeAcc, metrics.mirex, kMinMirex, first, last, 100.0 * drop,
             100.0 * kMinLossDrop, run_seconds, kMaxEndToEndSeconds, calib_note.c_str()));

  {
    const auto t0 = Clock::now();
    int ok = 0;
    for (std::size_t i = 0; i < heldout.records.size(); ++i) {
      const KeyLabel& ref = *heldout.records[i].key;
      ok += heuristic_mode_from_signature(track_pcp(held_cqt[i]), ref.signature()).mode == ref.mode ? 1 : 0;
    }
    const double acc = 100.0 * ok / static_cast<double>(heldout.records.size());
    const double s = since(t0);
    report(6, acc >= kMinHeuristicModeAcc && s < kHeuristicSeconds,
           fmt("true-signature mode accuracy %.1f%% on %zu held-out clips (>= %.0f%%), %.2f s", acc,
               heldout.records.size(), kMinHeuristicModeAcc, s));
  }

  {
    const std::int64_t total = static_cast<std::int64_t>(trained.log.size());
    const auto warmup = static_cast<std::int64_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total)));
    std::int64_t in_range = 0;
    std::int64_t counted = 0;
    for (const auto& r : trained.log) {
      if (r.step <= warmup) continue;
      ++counted;
      in_range += r.loss.mode_average >= kModeAvgLow && r.loss.mode_average <= kModeAvgHigh ? 1 : 0;
    }
    const double frac = counted ? static_cast<double>(in_range) / static_cast<double>(counted) : 0.0;
    report(7, counted > 0 && frac >= kMinInRangeFraction,
           fmt("%lld of %lld post-warmup steps with mode average in [%.1f, %.1f] (%.1f%%, >= %.0f%%)",
               static_cast<long long>(in_range), static_cast<long long>(counted), kModeAvgLow, kModeAvgHigh,
               100.0 * frac, 100.0 * kMinInRangeFraction));
  }

  {
    std::vector<EmbeddingRow> rows(heldout.records.size());
    parallel_for(static_cast<int>(rows.size()), jobs, [&](int i) {
      const auto u = static_cast<std::size_t>(i);
      rows[u].id = heldout.records[u].id;
      rows[u].key = heldout.records[u].key;
      rows[u].features = embedding_vector(model, held_cqt[u]);
    });
    project_pca(rows);
    write_embeddings_csv(work / "embeddings.csv", rows, hooks.metadata);
    const FifthsOrder order = fifths_ordering(rows);
    report(8, order.steps == 24 && order.by_fifth >= kMinFifthSteps,
           fmt("%d of %d adjacent centroid steps are fifths (>= %d)", order.by_fifth, order.steps, kMinFifthSteps));
  }

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
