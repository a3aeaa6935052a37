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

#include "skey/skey.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json.hpp"
#include "skey/calibration.hpp"
#include "skey/checkpoint.hpp"
#include "skey/error.hpp"
#include "skey/evaluation.hpp"
#include "skey/manifest.hpp"
#include "skey/selftest.hpp"
#include "skey/synth.hpp"
#include "skey/trainer.hpp"

#ifndef SKEY_VERSION_STRING
#define SKEY_VERSION_STRING "0.0.0"
#endif

struct skey_model {
  skey::Checkpoint ckpt;
};

namespace {

using nlohmann::json;
thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    skey::fail(skey::ErrorCode::kInvalidArgument, std::string("invalid JSON: ") + e.what());
  }
  if (j.is_null()) return json::object();
  skey::require(j.is_object(), skey::ErrorCode::kInvalidArgument, "expected a JSON object");
  return j;
}

void require_arg(const void* p, const char* name) {
  skey::require(p != nullptr, skey::ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
}

template <typename Fn>
skey_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SKEY_OK;
  } catch (const skey::Error& e) {
    g_last_error = e.what();
    return static_cast<skey_status>(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("InvalidArgument: ") + e.what();
    return SKEY_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = std::string("IoError: ") + e.what();
    return SKEY_IO_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "Internal: out of memory";
    return SKEY_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("Internal: ") + e.what();
    return SKEY_INTERNAL;
  }
}

skey::CqtCache cache_from(const json& opts) {
  return skey::CqtCache(opts.value("cache_dir", std::string()));
}

int jobs_from(const json& opts) { return std::max(1, opts.value("jobs", 1)); }

json metadata_from(const json& opts) {
  const json meta = opts.value("metadata", json::object());
  skey::require(meta.is_object(), skey::ErrorCode::kInvalidArgument, "metadata must be an object");
  return meta;
}

const skey::CalibrationMap& require_calibrated(const skey_model* model) {
  skey::require(model->ckpt.model.calibration.has_value(), skey::ErrorCode::kInvalidArgument,
                "model is not calibrated; run calibrate first");
  return *model->ckpt.model.calibration;
}

}  // namespace

extern "C" {

const char* skey_version(void) { return SKEY_VERSION_STRING; }

const char* skey_status_name(skey_status status) { return skey::error_code_name(static_cast<skey::ErrorCode>(status)); }

const char* skey_last_error(void) { return g_last_error.c_str(); }

void skey_string_free(char* s) { std::free(s); }

skey_status skey_parse_key(const char* text, int* tonic, int* mode) {
  return guarded([&] {
    require_arg(text, "text");
    const skey::KeyLabel key = skey::parse_key_label(text);
    if (tonic) *tonic = key.tonic;
    if (mode) *mode = static_cast<int>(key.mode);
  });
}

skey_status skey_read_config(const char* path, char** config_json) {
  return guarded([&] {
    require_arg(path, "path");
    put(config_json, skey::read_flat_config(path).dump());
  });
}

skey_status skey_synth_corpus(const char* spec_json, const char* out_dir, char** result_json) {
  return guarded([&] {
    require_arg(out_dir, "out_dir");
    json opts = parse_options(spec_json);
    const json meta = metadata_from(opts);
    opts.erase("metadata");
    const skey::CorpusSpec spec = skey::CorpusSpec::from_json(opts);
    const skey::CorpusResult r = skey::generate_corpus(spec, out_dir, {}, meta);
    put(result_json, json{{"manifest", r.manifest.string()},
                          {"train_manifest", r.train_manifest.string()},
                          {"heldout_manifest", r.heldout_manifest.string()},
                          {"clips", r.records.size()}}
                         .dump());
  });
}

skey_status skey_train(const char* manifest_path, const char* config_json, const char* options_json,
                       skey_progress_fn progress, void* user, skey_model** out_model, char** summary_json) {
  return guarded([&] {
    require_arg(manifest_path, "manifest_path");
    const skey::TrainConfig cfg = skey::TrainConfig::from_json(parse_options(config_json));
    cfg.validate();
    const json opts = parse_options(options_json);

    const skey::Manifest manifest = skey::read_manifest(manifest_path);
    const auto tracks = skey::load_training_tracks(manifest, cache_from(opts), cfg.jobs);

    std::optional<skey::Checkpoint> resume;
    const std::string resume_path = opts.value("resume", std::string());
    if (!resume_path.empty()) resume = skey::load_checkpoint(resume_path);

    skey::TrainHooks hooks;
    hooks.checkpoint_dir = opts.value("checkpoint_dir", std::string());
    hooks.log_path = opts.value("log_path", std::string());
    hooks.metadata = metadata_from(opts);
    if (progress) {
      hooks.on_step = [&](const skey::StepRecord& rec) { progress(rec.to_json().dump().c_str(), user); };
    }
    skey::TrainResult result = skey::train(tracks, cfg, hooks, resume ? &*resume : nullptr);

    json checkpoints = json::array();
    for (const auto& p : result.checkpoints) checkpoints.push_back(p.string());
    put(summary_json, json{{"steps", result.model.step},
                           {"epoch_mean_total", result.epoch_mean_total},
                           {"checkpoints", checkpoints},
                           {"final_loss", result.log.empty() ? json(nullptr) : result.log.back().loss.to_json()}}
                          .dump());
    if (out_model) {
      json meta = hooks.metadata;
      meta["train_config"] = cfg.to_json();
      *out_model = new skey_model{{std::move(result.model), std::move(result.optimizer), meta}};
    }
  });
}

skey_status skey_model_init(const char* model_config_json, uint64_t seed, skey_model** out_model) {
  return guarded([&] {
    require_arg(out_model, "out_model");
    skey::ModelConfig config = skey::ModelConfig::compact();
    if (model_config_json && *model_config_json) {
      const json j = json::parse(model_config_json);
      if (j.is_string()) {
        const std::string name = j.get<std::string>();
        skey::require(name == "compact" || name == "reference", skey::ErrorCode::kInvalidArgument,
                      "unknown model preset " + name);
        config = name == "reference" ? skey::ModelConfig::reference() : skey::ModelConfig::compact();
      } else if (!j.is_null()) {
        config = skey::ModelConfig::from_json(j);
      }
    }
    config.validate();
    *out_model = new skey_model{{skey::ModelState::initialize(config, seed), std::nullopt, json::object()}};
  });
}

skey_status skey_model_load(const char* path, skey_model** out_model) {
  return guarded([&] {
    require_arg(path, "path");
    require_arg(out_model, "out_model");
    *out_model = new skey_model{skey::load_checkpoint(path)};
  });
}

skey_status skey_model_save(const skey_model* model, const char* path, const char* metadata_json) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(path, "path");
    skey::Checkpoint ckpt = model->ckpt;
    const json extra = parse_options(metadata_json);
    for (const auto& [k, v] : extra.items()) ckpt.metadata[k] = v;
    skey::save_checkpoint(path, ckpt);
  });
}

void skey_model_free(skey_model* model) { delete model; }

skey_status skey_model_info(const skey_model* model, char** info_json) {
  return guarded([&] {
    require_arg(model, "model");
    const auto& m = model->ckpt.model;
    put(info_json, json{{"config", m.config.to_json()},
                        {"parameters", m.params.size()},
                        {"step", m.step},
                        {"calibration", m.calibration ? m.calibration->to_json() : json(nullptr)},
                        {"has_optimizer_state", model->ckpt.optimizer.has_value()},
                        {"metadata", model->ckpt.metadata}}
                       .dump());
  });
}

skey_status skey_model_set_calibration(skey_model* model, const char* calibration_json) {
  return guarded([&] {
    require_arg(model, "model");
    if (!calibration_json || !*calibration_json) {
      model->ckpt.model.calibration.reset();
      return;
    }
    model->ckpt.model.calibration = skey::CalibrationMap::from_json(json::parse(calibration_json));
  });
}

skey_status skey_calibrate(skey_model* model, const char* options_json, char** diagnostics_json) {
  return guarded([&] {
    require_arg(model, "model");
    const json opts = parse_options(options_json);
    const skey::ModelPredictor predictor(model->ckpt.model, jobs_from(opts));
    skey::CalibrationDiagnostics diag;
    const skey::CalibrationMap map = skey::calibrate(predictor, {}, &diag);
    model->ckpt.model.calibration = map;
    auto column = [](const skey::ChromaTensor& y) {
      json rows = json::array();
      for (int r = 0; r < y.rows(); ++r) rows.push_back({y(r, 0), y(r, 1)});
      return rows;
    };
    put(diagnostics_json, json{{"calibration", map.to_json()},
                               {"used_fallback", diag.used_fallback},
                               {"major_probe", column(diag.major_probe)},
                               {"minor_probe", column(diag.minor_probe)}}
                              .dump());
  });
}

skey_status skey_predict_file(const skey_model* model, const char* audio_path, const char* options_json,
                              char** prediction_json) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(audio_path, "audio_path");
    const json opts = parse_options(options_json);
    const auto& calib = require_calibrated(model);
    skey::AudioWindow window;
    if (opts.value("first_30s", false)) window.duration_seconds = 30.0;
    const skey::CqtMatrix cqt = cache_from(opts).load(audio_path, skey::AudioUse::kInference, window);
    const skey::ModelPredictor predictor(model->ckpt.model, jobs_from(opts));
    const skey::KeyPrediction p = skey::predict_key(predictor, calib, cqt);
    const skey::PredictionRecord rec{std::filesystem::path(audio_path).stem().string(), p.key, p.posterior};
    put(prediction_json, rec.to_json().dump());
  });
}

skey_status skey_predict_manifest(const skey_model* model, const char* manifest_path, const char* out_path,
                                  const char* options_json, char** summary_json) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(manifest_path, "manifest_path");
    require_arg(out_path, "out_path");
    const json opts = parse_options(options_json);
    const auto& calib = require_calibrated(model);
    const skey::Manifest manifest = skey::read_manifest(manifest_path);
    skey::require(!manifest.records.empty(), skey::ErrorCode::kEmptyCorpus,
                  "manifest " + manifest.path.string() + " has no records");
    const skey::CqtCache cache = cache_from(opts);
    const bool first30 = opts.value("first_30s", false);
    const skey::ModelPredictor predictor(model->ckpt.model, 1);
    std::vector<skey::PredictionRecord> preds(manifest.records.size());
    skey::parallel_for(static_cast<int>(preds.size()), jobs_from(opts), [&](int i) {
      const auto& r = manifest.records[static_cast<std::size_t>(i)];
      const skey::CqtMatrix cqt = skey::load_record_cqt(r, cache, skey::AudioUse::kInference, first30);
      const skey::KeyPrediction p = skey::predict_key(predictor, calib, cqt);
      preds[static_cast<std::size_t>(i)] = {r.id, p.key, p.posterior};
    });
    json meta = metadata_from(opts);
    meta["manifest"] = manifest.path.string();
    meta["calibration"] = calib.to_json();
    skey::write_predictions(out_path, preds, meta);
    put(summary_json, json{{"predictions", preds.size()}, {"out", out_path}}.dump());
  });
}

skey_status skey_evaluate(const char* manifest_path, const char* predictions_path, const char* options_json,
                          char** report_json, char** table_text) {
  return guarded([&] {
    require_arg(manifest_path, "manifest_path");
    require_arg(predictions_path, "predictions_path");
    const json opts = parse_options(options_json);
    const skey::FifthsRule rule = skey::parse_fifths_rule(opts.value("fifths", std::string("symmetric")));
    const skey::Manifest manifest = skey::read_manifest(manifest_path, true);
    const skey::MetricsReport report = skey::evaluate(manifest, skey::read_predictions(predictions_path), rule);
    json j = report.to_json();
    j["meta"] = metadata_from(opts);
    put(report_json, j.dump());
    put(table_text, report.to_table());
  });
}

skey_status skey_embed(const skey_model* model, const char* manifest_path, const char* out_csv,
                       const char* options_json, char** summary_json) {
  return guarded([&] {
    require_arg(model, "model");
    require_arg(manifest_path, "manifest_path");
    require_arg(out_csv, "out_csv");
    const json opts = parse_options(options_json);
    const skey::Manifest manifest = skey::read_manifest(manifest_path);
    skey::require(!manifest.records.empty(), skey::ErrorCode::kEmptyCorpus,
                  "manifest " + manifest.path.string() + " has no records");
    auto rows = skey::export_embeddings(model->ckpt.model, manifest, cache_from(opts), jobs_from(opts),
                                        opts.value("first_30s", false));
    const auto variances = skey::project_pca(rows);
    const skey::FifthsOrder order = skey::fifths_ordering(rows);
    json meta = metadata_from(opts);
    meta["manifest"] = manifest.path.string();
    skey::write_embeddings_csv(out_csv, rows, meta);
    put(summary_json, json{{"rows", rows.size()},
                           {"variance", {variances[0], variances[1]}},
                           {"fifths_steps", order.steps},
                           {"fifths_adjacent", order.by_fifth},
                           {"out", out_csv}}
                          .dump());
  });
}

skey_status skey_selftest(uint64_t seed, char** report_json) {
  return guarded([&] { put(report_json, skey::selftest_to_json(skey::run_selftest(seed)).dump()); });
}

}  // extern "C"
