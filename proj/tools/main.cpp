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

// skey command-line front end. Links only the C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skey/skey.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  DomainError(skey_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  skey_status status;
};

void check(skey_status s) {
  if (s != SKEY_OK) throw DomainError(s, skey_last_error());
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  skey_string_free(s);
  return out;
}

struct ModelDeleter {
  void operator()(skey_model* m) const { skey_model_free(m); }
};
using ModelPtr = std::unique_ptr<skey_model, ModelDeleter>;

ModelPtr load_model(const std::string& path) {
  skey_model* m = nullptr;
  check(skey_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Options every subcommand accepts.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = default_jobs();

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key = value config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Seed for all randomness");
    app->add_option("--jobs", jobs, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);
  }

  // defaults < config file < flags.
  json resolve(const json& flags) const {
    json cfg = json::object();
    if (!config_path.empty()) {
      char* text = nullptr;
      check(skey_read_config(config_path.c_str(), &text));
      cfg = json::parse(take(text));
    }
    for (const auto& [k, v] : flags.items()) cfg[k] = v;
    if (seed) cfg["seed"] = *seed;
    if (!cfg.contains("seed")) cfg["seed"] = 0;
    cfg["jobs"] = jobs;
    return cfg;
  }
};

json run_metadata(const std::string& command, const json& config) {
  json hashed = config;
  hashed.erase("jobs");
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(hashed.dump())));
  return {{"tool", "skey"},
          {"version", skey_version()},
          {"command", command},
          {"config_hash", hex},
          {"seed", config.value("seed", json(0))},
          {"config", config}};
}

json cache_options() {
  json opts = json::object();
  if (const char* dir = std::getenv("SKEY_CACHE_DIR"); dir && *dir) opts["cache_dir"] = dir;
  return opts;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DomainError(SKEY_IO_ERROR, "cannot write " + path);
  out << text;
}

std::string path_join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Musical key estimation: synthetic corpora, training, calibration, inference, evaluation"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(skey_version()));

  // synth
  Common synth_common;
  std::string synth_out;
  std::optional<int> n_per_key;
  std::optional<int> holdout;
  std::optional<double> duration;
  bool synth_fast = false;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  synth_common.attach(synth);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-per-key", n_per_key, "Clips per key")->check(CLI::PositiveNumber);
  synth->add_option("--holdout-per-key", holdout, "Clips per key written to heldout.jsonl")->check(CLI::NonNegativeNumber);
  synth->add_option("--duration", duration, "Clip length in seconds")->check(CLI::PositiveNumber);
  synth->add_flag("--cqt-only", synth_fast, "Write CQT cache files instead of WAV audio");

  // train
  Common train_common;
  std::string train_manifest;
  std::string train_out;
  std::string resume;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<std::string> model_preset;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Self-supervised training from a manifest");
  train_common.attach(train);
  train->add_option("--manifest", train_manifest, "Training manifest (JSON-lines)")->required();
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->add_option("--checkpoint", resume, "Resume from this checkpoint")->check(CLI::ExistingFile);
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--batch-size", batch_size, "Songs per batch");
  train->add_option("--model", model_preset, "Model preset")->check(CLI::IsMember({"compact", "reference"}));
  train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  // calibrate
  Common calib_common;
  std::string calib_ckpt;
  std::string calib_out;
  auto* calibrate = app.add_subcommand("calibrate", "Bind output rows and columns to key labels");
  calib_common.attach(calibrate);
  calibrate->add_option("--checkpoint", calib_ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", calib_out, "Calibrated checkpoint (default: overwrite --checkpoint)");

  // predict
  Common pred_common;
  std::string pred_ckpt;
  std::string pred_manifest;
  std::string pred_out;
  std::vector<std::string> pred_files;
  bool pred_first30 = false;
  auto* predict = app.add_subcommand("predict", "Estimate keys for a manifest or audio files");
  pred_common.attach(predict);
  predict->add_option("--checkpoint", pred_ckpt, "Calibrated checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--manifest", pred_manifest, "Manifest to predict")->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "Predictions (JSON-lines)")->required();
  predict->add_flag("--first-30s", pred_first30, "Use only the first 30 s of each track");
  predict->add_option("files", pred_files, "Audio files")->check(CLI::ExistingFile);

  // evaluate
  Common eval_common;
  std::string eval_manifest;
  std::string eval_pred;
  std::string eval_out;
  std::string fifths = "symmetric";
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against manifest labels");
  eval_common.attach(evaluate);
  evaluate->add_option("--manifest", eval_manifest, "Labelled manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", eval_pred, "Predictions (JSON-lines)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Write the report as JSON");
  evaluate->add_option("--fifths", fifths, "Fifth-error rule")->check(CLI::IsMember({"symmetric", "ascending"}));

  // embed
  Common embed_common;
  std::string embed_ckpt;
  std::string embed_manifest;
  std::string embed_out;
  bool embed_first30 = false;
  auto* embed = app.add_subcommand("embed", "Export a 2-D PCA of pre-head features");
  embed_common.attach(embed);
  embed->add_option("--checkpoint", embed_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  embed->add_option("--manifest", embed_manifest, "Manifest")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", embed_out, "CSV output")->required();
  embed->add_flag("--first-30s", embed_first30, "Use only the first 30 s of each track");

  // selftest
  Common self_common;
  std::string self_out;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant suites");
  self_common.attach(selftest);
  selftest->add_option("--out", self_out, "Write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e, std::cerr, std::cerr);
    return kExitUsage;
  }

  try {
    if (*synth) {
      json flags = json::object();
      if (n_per_key) flags["n_per_key"] = *n_per_key;
      if (holdout) flags["holdout_per_key"] = *holdout;
      if (duration) flags["duration_s"] = *duration;
      if (synth_fast) flags["write_audio"] = false;
      json cfg = synth_common.resolve(flags);
      json spec = cfg;
      spec["metadata"] = run_metadata("synth", cfg);
      char* out = nullptr;
      check(skey_synth_corpus(spec.dump().c_str(), synth_out.c_str(), &out));
      std::cout << json::parse(take(out)).dump(2) << "\n";
    } else if (*train) {
      json flags = json::object();
      if (epochs) flags["epochs"] = *epochs;
      if (batch_size) flags["batch_size"] = *batch_size;
      if (model_preset) flags["model"] = *model_preset;
      const json cfg = train_common.resolve(flags);
      if (cfg.value("epochs", 1) < 1) throw UsageError("--epochs must be at least 1");
      if (cfg.value("batch_size", 2) < 2) throw UsageError("--batch-size must be at least 2");

      json opts = cache_options();
      opts["checkpoint_dir"] = train_out;
      opts["log_path"] = path_join(train_out, "train_log.jsonl");
      opts["metadata"] = run_metadata("train", cfg);
      if (!resume.empty()) opts["resume"] = resume;

      struct Progress {
        bool quiet;
        long long last_epoch = -1;
        double sum = 0.0;
        long long count = 0;
      } progress{quiet};
      auto on_step = [](const char* step_json, void* user) {
        auto* p = static_cast<Progress*>(user);
        const json rec = json::parse(step_json);
        const long long epoch = rec.value("epoch", 0LL);
        if (epoch != p->last_epoch && p->count > 0 && !p->quiet) {
          std::cerr << "epoch " << p->last_epoch + 1 << "  mean loss " << p->sum / static_cast<double>(p->count)
                    << "\n";
          p->sum = 0.0;
          p->count = 0;
        }
        p->last_epoch = epoch;
        p->sum += rec.value("total", 0.0);
        p->count += 1;
      };
      skey_model* raw = nullptr;
      char* summary = nullptr;
      check(skey_train(train_manifest.c_str(), cfg.dump().c_str(), opts.dump().c_str(), on_step, &progress, &raw,
                       &summary));
      ModelPtr model(raw);
      if (!quiet && progress.count > 0) {
        std::cerr << "epoch " << progress.last_epoch + 1 << "  mean loss "
                  << progress.sum / static_cast<double>(progress.count) << "\n";
      }
      const std::string final_path = path_join(train_out, "model.skey");
      check(skey_model_save(model.get(), final_path.c_str(), nullptr));
      json report = json::parse(take(summary));
      report["model"] = final_path;
      std::cout << report.dump(2) << "\n";
    } else if (*calibrate) {
      const json cfg = calib_common.resolve({{"checkpoint", calib_ckpt}});
      ModelPtr model = load_model(calib_ckpt);
      char* diag = nullptr;
      check(skey_calibrate(model.get(), json{{"jobs", cfg["jobs"]}}.dump().c_str(), &diag));
      const std::string out = calib_out.empty() ? calib_ckpt : calib_out;
      check(skey_model_save(model.get(), out.c_str(), json{{"calibrated_by", run_metadata("calibrate", cfg)}}.dump().c_str()));
      json report = json::parse(take(diag));
      std::cout << json{{"calibration", report["calibration"]}, {"used_fallback", report["used_fallback"]}, {"out", out}}
                       .dump(2)
                << "\n";
    } else if (*predict) {
      if (pred_manifest.empty() == pred_files.empty()) throw UsageError("give either --manifest or audio files");
      const json cfg = pred_common.resolve({{"checkpoint", pred_ckpt}, {"first_30s", pred_first30}});
      ModelPtr model = load_model(pred_ckpt);
      json opts = cache_options();
      opts["jobs"] = cfg["jobs"];
      opts["first_30s"] = pred_first30;
      opts["metadata"] = run_metadata("predict", cfg);
      if (!pred_manifest.empty()) {
        char* summary = nullptr;
        check(skey_predict_manifest(model.get(), pred_manifest.c_str(), pred_out.c_str(), opts.dump().c_str(), &summary));
        std::cout << json::parse(take(summary)).dump(2) << "\n";
      } else {
        std::string lines = json{{"_meta", opts["metadata"]}}.dump() + "\n";
        for (const auto& f : pred_files) {
          char* pred = nullptr;
          check(skey_predict_file(model.get(), f.c_str(), opts.dump().c_str(), &pred));
          json rec = json::parse(take(pred));
          rec["audio_path"] = f;
          std::cout << f << "\t" << rec["label_string"].get<std::string>() << "\n";
          lines += rec.dump() + "\n";
        }
        write_text(pred_out, lines);
      }
    } else if (*evaluate) {
      const json cfg = eval_common.resolve({{"fifths", fifths}});
      json opts{{"fifths", fifths}, {"metadata", run_metadata("evaluate", cfg)}};
      char* report = nullptr;
      char* table = nullptr;
      check(skey_evaluate(eval_manifest.c_str(), eval_pred.c_str(), opts.dump().c_str(), &report, &table));
      const std::string report_text = take(report);
      std::cout << take(table);
      if (!eval_out.empty()) write_text(eval_out, json::parse(report_text).dump(2) + "\n");
    } else if (*embed) {
      const json cfg = embed_common.resolve({{"checkpoint", embed_ckpt}, {"first_30s", embed_first30}});
      ModelPtr model = load_model(embed_ckpt);
      json opts = cache_options();
      opts["jobs"] = cfg["jobs"];
      opts["first_30s"] = embed_first30;
      opts["metadata"] = run_metadata("embed", cfg);
      char* summary = nullptr;
      check(skey_embed(model.get(), embed_manifest.c_str(), embed_out.c_str(), opts.dump().c_str(), &summary));
      std::cout << json::parse(take(summary)).dump(2) << "\n";
    } else if (*selftest) {
      const json cfg = self_common.resolve(json::object());
      char* report = nullptr;
      check(skey_selftest(cfg["seed"].get<std::uint64_t>(), &report));
      json j = json::parse(take(report));
      for (const auto& s : j["suites"]) {
        std::cout << (s["passed"].get<bool>() ? "PASS " : "FAIL ") << s["name"].get<std::string>() << "  "
                  << s["detail"].get<std::string>() << "\n";
      }
      if (!self_out.empty()) {
        j["meta"] = run_metadata("selftest", cfg);
        write_text(self_out, j.dump(2) + "\n");
      }
      return j["passed"].get<bool>() ? kExitOk : kExitDomain;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == SKEY_INVALID_ARGUMENT ? kExitUsage : kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}
