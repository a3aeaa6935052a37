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

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "skey/error.hpp"
#include "skey/evaluation.hpp"
#include "skey/keys.hpp"
#include "skey/selftest.hpp"
#include "test_util.hpp"

using namespace skey;
using skey::test::TempDir;

namespace {

const KeyLabel kC{3, Mode::kMajor};

std::vector<EvalRecord> six_record_fixture() {
  return {{"exact", kC, kC, "pop"},
          {"fifth", kC, {10, Mode::kMajor}, "pop"},
          {"relative", kC, {0, Mode::kMinor}, "jazz"},
          {"parallel", kC, {3, Mode::kMinor}, "jazz"},
          {"unrelated", kC, {5, Mode::kMajor}, ""},
          {"exact_minor", {0, Mode::kMinor}, {0, Mode::kMinor}, ""}};
}

void write_lines(const std::filesystem::path& p, const std::vector<nlohmann::json>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l.dump() << "\n";
}

}  // namespace

TEST_CASE("key label parsing") {
  CHECK(parse_key_label("C major") == kC);
  CHECK(parse_key_label("db minor") == KeyLabel{4, Mode::kMinor});
  CHECK(parse_key_label("F#m") == KeyLabel{9, Mode::kMinor});
  CHECK(parse_key_label("Bb:min") == KeyLabel{1, Mode::kMinor});
  CHECK(parse_key_label("A minor") == KeyLabel{0, Mode::kMinor});
  try {
    parse_key_label("H major");
    FAIL("expected UnparsableLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnparsableLabel);
  }
  for (int i = 0; i < kNumKeys; ++i) {
    const KeyLabel k = KeyLabel::from_index(i);
    CHECK(parse_key_label(k.to_string()) == k);
  }
}

TEST_CASE("weighted score weights") {
  CHECK(mirex_score(kC, kC) == 1.0);
  CHECK(mirex_score(kC, {10, Mode::kMajor}) == 0.5);
  CHECK(mirex_score(kC, {8, Mode::kMajor}) == 0.5);
  CHECK(mirex_score(kC, {0, Mode::kMinor}) == 0.3);
  CHECK(mirex_score(kC, {3, Mode::kMinor}) == 0.2);
  CHECK(mirex_score(kC, {5, Mode::kMajor}) == 0.0);
  // Ascending: only the fifth above counts.
  CHECK(mirex_score(kC, {10, Mode::kMajor}, FifthsRule::kAscending) == 0.5);
  CHECK(mirex_score(kC, {8, Mode::kMajor}, FifthsRule::kAscending) == 0.0);
  CHECK(parse_fifths_rule("ascending") == FifthsRule::kAscending);
  CHECK_THROWS_AS(parse_fifths_rule("sideways"), Error);
}

TEST_CASE("KSEA and mode accuracy") {
  CHECK(ksea_score(kC, {0, Mode::kMinor}) == 1.0);
  CHECK(ksea_score(kC, {10, Mode::kMajor}) == 0.5);
  CHECK(ksea_score(kC, {5, Mode::kMajor}) == 0.0);
  CHECK(mode_accuracy(kC, {10, Mode::kMajor}) == 1);
  CHECK(mode_accuracy(kC, {0, Mode::kMinor}) == 0);
  CHECK(mode_accuracy({0, Mode::kMinor}, {0, Mode::kMinor}) == 1);
}

TEST_CASE("six-record fixture and identity") {
  const MetricsReport r = evaluate(six_record_fixture());
  CHECK(r.mirex == 50.0);
  CHECK(r.count == 6);
  CHECK(r.per_genre.at("unknown").count == 2);
  CHECK(r.per_genre.at("pop").mirex == doctest::Approx(75.0));
  CHECK(r.confusion[static_cast<std::size_t>(kC.index())][static_cast<std::size_t>(kC.index())] == 1);
  CHECK(r.to_table().find("MIREX 50.0") != std::string::npos);

  const auto fixtures = selftest_metric_fixtures();
  CHECK_MESSAGE(fixtures.passed, fixtures.detail);
}

TEST_CASE("evaluation joins manifest and predictions by id") {
  TempDir dir("eval");
  std::vector<nlohmann::json> manifest;
  std::vector<PredictionRecord> preds;
  for (const auto& r : six_record_fixture()) {
    manifest.push_back({{"id", r.id}, {"audio_path", r.id + ".wav"}, {"key_label", r.reference.to_string()}});
    preds.push_back({r.id, r.prediction, {}});
  }
  write_lines(dir / "m.jsonl", manifest);
  write_predictions(dir / "p.jsonl", preds, {{"seed", 3}});
  const auto back = read_predictions(dir / "p.jsonl");
  REQUIRE(back.size() == 6);
  CHECK(back[1].key == preds[1].key);
  CHECK(evaluate(read_manifest(dir / "m.jsonl", true), back).mirex == 50.0);

  auto missing = back;
  missing.pop_back();
  try {
    evaluate(read_manifest(dir / "m.jsonl", true), missing);
    FAIL("expected MissingPrediction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPrediction);
  }
  auto extra = back;
  extra.push_back({"ghost", kC, {}});
  try {
    evaluate(read_manifest(dir / "m.jsonl", true), extra);
    FAIL("expected MissingReference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingReference);
  }

  write_lines(dir / "alt.jsonl", {{{"id", "a"}, {"key_label", "G major"}}, {{"id", "b"}, {"tonic", 0}, {"mode", "minor"}}});
  const auto alt = read_predictions(dir / "alt.jsonl");
  CHECK(alt[0].key == KeyLabel{10, Mode::kMajor});
  CHECK(alt[1].key == KeyLabel{0, Mode::kMinor});
}

TEST_CASE("PCA of constant features sits at the origin") {
  std::vector<EmbeddingRow> rows(5);
  for (auto& r : rows) r.features = Eigen::VectorXd::Constant(84, 0.7);
  const auto var = project_pca(rows);
  CHECK(var[0] == doctest::Approx(0.0));
  for (const auto& r : rows) {
    CHECK(std::abs(r.pc1) < 1e-12);
    CHECK(std::abs(r.pc2) < 1e-12);
  }
}

TEST_CASE("PCA finds the dominant axes") {
  std::vector<EmbeddingRow> rows;
  for (int i = 0; i < 40; ++i) {
    EmbeddingRow r;
    r.features = Eigen::VectorXd::Zero(3);
    r.features(1) = 5.0 * std::cos(0.3 * i);
    r.features(2) = 1.0 * std::sin(0.3 * i);
    rows.push_back(r);
  }
  const auto var = project_pca(rows);
  CHECK(var[0] > var[1]);
  for (const auto& r : rows) CHECK(std::abs(std::abs(r.pc1) - std::abs(r.features(1))) < 0.5);
}

TEST_CASE("fifths ordering counts adjacent fifth steps") {
  std::vector<EmbeddingRow> rows;
  for (int mode = 0; mode < 2; ++mode) {
    for (int t = 0; t < 12; ++t) {
      EmbeddingRow r;
      r.key = KeyLabel{t, static_cast<Mode>(mode)};
      // Position on the circle of fifths: 7 t mod 12.
      const double angle = 2.0 * kPi * wrap12(7 * t) / 12.0;
      r.pc1 = std::cos(angle);
      r.pc2 = std::sin(angle);
      rows.push_back(r);
    }
  }
  const FifthsOrder circle = fifths_ordering(rows);
  CHECK(circle.steps == 24);
  CHECK(circle.by_fifth == 24);

  for (auto& r : rows) {
    const double angle = 2.0 * kPi * r.key->tonic / 12.0;
    r.pc1 = std::cos(angle);
    r.pc2 = std::sin(angle);
  }
  CHECK(fifths_ordering(rows).by_fifth == 0);
}

TEST_CASE("embedding CSV layout") {
  TempDir dir("emb");
  std::vector<EmbeddingRow> rows(2);
  rows[0].id = "x";
  rows[0].key = kC;
  rows[0].pc1 = 1.5;
  rows[1].id = "y";
  write_embeddings_csv(dir / "e.csv", rows, {{"seed", 4}});
  std::ifstream in(dir / "e.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# ", 0) == 0);
  std::getline(in, line);
  CHECK(line == "id,key_label,pc1,pc2");
  std::getline(in, line);
  CHECK(line == "x,C major,1.5,0");
  std::getline(in, line);
  CHECK(line == "y,,0,0");
}
