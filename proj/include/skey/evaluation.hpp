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

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "skey/calibration.hpp"
#include "skey/keys.hpp"
#include "skey/manifest.hpp"

namespace skey {

// Whether the 0.5 fifth credit applies to estimates a fifth above or below
// the reference, or only above.
enum class FifthsRule { kSymmetric, kAscending };

FifthsRule parse_fifths_rule(const std::string& text);
const char* fifths_rule_name(FifthsRule rule);

// 1 exact, 0.5 same mode a fifth apart, 0.3 relative, 0.2 parallel, else 0.
double mirex_score(const KeyLabel& ref, const KeyLabel& est, FifthsRule rule = FifthsRule::kSymmetric);
// 1 same signature, 0.5 signatures a fifth apart, else 0.
double ksea_score(const KeyLabel& ref, const KeyLabel& est);
int mode_accuracy(const KeyLabel& ref, const KeyLabel& est);

struct EvalRecord {
  std::string id;
  KeyLabel reference;
  KeyLabel prediction;
  std::string genre;
};

struct GenreStats {
  double mirex = 0.0;  // percentage
  double ksea = 0.0;
  double mode_acc = 0.0;
  int count = 0;
};

struct MetricsReport {
  double mirex = 0.0;  // percentages
  double ksea = 0.0;
  double mode_acc = 0.0;
  int count = 0;
  FifthsRule rule = FifthsRule::kSymmetric;
  std::map<std::string, GenreStats> per_genre;
  std::array<std::array<int, kNumKeys>, kNumKeys> confusion{};  // [reference][prediction]

  nlohmann::json to_json() const;
  std::string to_table() const;
};

MetricsReport evaluate(const std::vector<EvalRecord>& records, FifthsRule rule = FifthsRule::kSymmetric);

struct PredictionRecord {
  std::string id;
  KeyLabel key;
  std::array<double, kNumKeys> posterior{};

  nlohmann::json to_json() const;
};

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& preds,
                       const nlohmann::json& meta = nullptr);

// Joins references and predictions by id. Every labelled manifest record
// needs a prediction (MissingPrediction) and every prediction a labelled
// record (MissingReference).
MetricsReport evaluate(const Manifest& manifest, const std::vector<PredictionRecord>& preds,
                       FifthsRule rule = FifthsRule::kSymmetric);

struct EmbeddingRow {
  std::string id;
  std::optional<KeyLabel> key;
  Eigen::VectorXd features;  // 84 values
  double pc1 = 0.0;
  double pc2 = 0.0;
};

// Pre-head feature map averaged over windows and both channels.
Eigen::VectorXd embedding_vector(const ModelState& state, const CqtMatrix& cqt);

// Fills pc1/pc2 with the projection on the two leading principal axes.
// Returns the variance along each axis.
std::array<double, 2> project_pca(std::vector<EmbeddingRow>& rows);

std::vector<EmbeddingRow> export_embeddings(const ModelState& state, const Manifest& manifest, const CqtCache& cache,
                                            int jobs = 1, bool force_first_30s = false);

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                          const nlohmann::json& meta = nullptr);

struct FifthsOrder {
  int steps = 0;     // adjacent centroids, per mode with all 12 tonics
  int by_fifth = 0;  // steps whose tonics differ by a fifth
};

// Walks per-tonic PCA centroids of each mode by angle around their mean and
// counts adjacent pairs a fifth apart.
FifthsOrder fifths_ordering(const std::vector<EmbeddingRow>& rows);

}  // namespace skey
