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

#include "doctest.h"
#include "skey/calibration.hpp"
#include "skey/cqt.hpp"
#include "skey/error.hpp"
#include "skey/manifest.hpp"
#include "skey/synth.hpp"
#include "test_util.hpp"

using namespace skey;

namespace {

double diatonic_fraction(const Pcp& u, const KeyLabel& key) {
  double in = 0.0;
  double all = 0.0;
  const auto scale = mode_scale(key.mode);
  for (int q = 0; q < 12; ++q) {
    all += u[q];
    for (int s : scale) {
      if (wrap12(q - key.tonic) == s) in += u[q];
    }
  }
  return in / all;
}

bool is_diatonic(int q, const KeyLabel& key) {
  for (int s : mode_scale(key.mode)) {
    if (wrap12(q - key.tonic) == s) return true;
  }
  // The raised leading tone of harmonic minor.
  return key.mode == Mode::kMinor && wrap12(q - key.tonic) == 11;
}

int strongest(const Pcp& u) {
  int best = 0;
  for (int q = 1; q < 12; ++q) {
    if (u[q] > u[best]) best = q;
  }
  return best;
}

}  // namespace

TEST_CASE("scales and triads") {
  CHECK(mode_scale(Mode::kMajor) == std::array<int, 7>{0, 2, 4, 5, 7, 9, 11});
  CHECK(mode_scale(Mode::kMinor) == std::array<int, 7>{0, 2, 3, 5, 7, 8, 10});
  CHECK(diatonic_triad(Mode::kMajor, 0) == std::array<int, 3>{0, 4, 7});
  CHECK(diatonic_triad(Mode::kMinor, 0) == std::array<int, 3>{0, 3, 7});
  CHECK(diatonic_triad(Mode::kMinor, 4) == std::array<int, 3>{7, 11, 14});
}

TEST_CASE("C major clips keep their energy on the scale") {
  CorpusSpec spec;
  spec.seed = 21;
  const KeyLabel c_major{3, Mode::kMajor};
  for (int n = 0; n < 4; ++n) {
    const SynthClip clip = generate_clip(c_major, n, spec);
    CHECK(clip.key == c_major);
    CHECK(clip.wave.duration_seconds() == doctest::Approx(32.0).epsilon(1e-3));
    CHECK(diatonic_fraction(track_pcp(compute_cqt(clip.wave)), c_major) >= 0.60);
  }
}

TEST_CASE("clip generation is deterministic") {
  CorpusSpec spec;
  const KeyLabel key{7, Mode::kMinor};
  const SynthClip a = generate_clip(key, 3, spec);
  const SynthClip b = generate_clip(key, 3, spec);
  CHECK(a.wave.samples == b.wave.samples);
  CHECK(a.genre == b.genre);
  CHECK(generate_clip(key, 4, spec).wave.samples != a.wave.samples);
}

TEST_CASE("A minor clips read as minor under the relative-root rule") {
  CorpusSpec spec;
  spec.seed = 99;
  const KeyLabel a_minor{0, Mode::kMinor};
  int minor = 0;
  const int clips = 100;
  for (int n = 0; n < clips; ++n) {
    const Pcp u = track_pcp(compute_cqt(generate_clip(a_minor, n, spec).wave));
    minor += heuristic_mode_from_signature(u, 3).mode == Mode::kMinor ? 1 : 0;
  }
  CHECK(minor >= 80);
}

TEST_CASE("the strongest pitch class is diatonic for every key") {
  CorpusSpec spec;
  spec.seed = 5;
  for (int i = 0; i < kNumKeys; ++i) {
    const KeyLabel key = KeyLabel::from_index(i);
    for (int n = 0; n < 2; ++n) {
      CAPTURE(key.to_string());
      CHECK(is_diatonic(strongest(track_pcp(compute_cqt(generate_clip(key, n, spec).wave))), key));
    }
  }
}

TEST_CASE("corpus layout") {
  test::TempDir dir("corpus");
  CorpusSpec spec;
  spec.n_per_key = 10;
  spec.holdout_per_key = 2;
  spec.write_audio = true;
  const CorpusResult r = generate_corpus(spec, dir.path(), {}, {{"seed", 1}});
  const Manifest all = read_manifest(r.manifest, true);
  REQUIRE(all.records.size() == 240);
  int major = 0;
  std::map<int, int> per_key;
  for (const auto& rec : all.records) {
    major += rec.key->mode == Mode::kMajor ? 1 : 0;
    per_key[rec.key->index()] += 1;
    CHECK(std::filesystem::exists(rec.audio_path));
    CHECK(!rec.genre.empty());
  }
  CHECK(major == 120);
  CHECK(per_key.size() == 24);
  for (const auto& [k, n] : per_key) CHECK(n == 10);
  CHECK(read_manifest(r.train_manifest).records.size() == 192);
  CHECK(read_manifest(r.heldout_manifest).records.size() == 48);

  std::ifstream in(r.manifest);
  std::string first;
  std::getline(in, first);
  const auto meta = nlohmann::json::parse(first)["_meta"];
  CHECK(meta["seed"] == 1);
  CHECK(meta["corpus"]["n_per_key"] == 10);
}

TEST_CASE("corpus spec validation") {
  CorpusSpec spec;
  spec.duration_seconds = 20.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = CorpusSpec{};
  spec.holdout_per_key = spec.n_per_key;
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK(CorpusSpec::from_json(CorpusSpec{}.to_json()).to_json() == CorpusSpec{}.to_json());
}
