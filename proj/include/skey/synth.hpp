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
#include <string>
#include <vector>

#include "json.hpp"
#include "skey/audio.hpp"
#include "skey/frontend.hpp"
#include "skey/keys.hpp"
#include "skey/manifest.hpp"

namespace skey {

// Pitch is counted in semitones above A0 (27.5 Hz), so pitch % 12 is the
// pitch class and pitch is also the CQT bin.
struct Note {
  double start_seconds = 0.0;
  double duration_seconds = 0.5;
  double pitch = 48.0;
  double amplitude = 0.2;
};

struct Timbre {
  int harmonics = 8;
  double rolloff = 1.0;        // partial h has amplitude 1 / h^rolloff
  double decay_seconds = 1.5;  // exponential amplitude decay
  double attack_seconds = 0.01;
  double release_seconds = 0.03;
};

// Sum of additive notes, peak-normalized to 0.9 when peak_normalize is set.
Waveform render_notes(const std::vector<Note>& notes, double duration_seconds, const Timbre& timbre,
                      double sample_rate = kDefaultSampleRate, bool peak_normalize = true);

// Texture of a clip; the manifest's genre tag is the style name.
struct Style {
  std::string name;
  int beats_per_chord = 2;
  bool arpeggiate = false;
  double melody_density = 1.0;  // chance of a melody note on each beat
};

// Scale used for chord building: major or natural minor.
std::array<int, 7> mode_scale(Mode mode);
// Pitch classes of the triad on a scale degree, relative to the tonic. In
// minor with raised_leading_tone, the dominant and leading-tone triads take
// the raised seventh.
std::array<int, 3> diatonic_triad(Mode mode, int degree, bool raised_leading_tone = true);

const std::vector<Style>& default_styles();

// Scale degrees 0..6 from a functional-harmony Markov chain, in four-chord
// phrases that open on the tonic and close on a cadence.
std::vector<int> random_progression(int chords, Rng& rng);

struct CorpusSpec {
  int n_per_key = 10;
  int holdout_per_key = 0;  // last clips of every key go to heldout.jsonl
  double duration_seconds = 32.0;
  std::uint64_t seed = 1;
  double sample_rate = kDefaultSampleRate;
  int harmonics = 8;
  double decay_min_seconds = 0.8;
  double decay_max_seconds = 2.5;
  double detune_cents = 8.0;
  double noise_db = -40.0;
  double tempo_min_bpm = 60.0;
  double tempo_max_bpm = 120.0;
  bool write_audio = true;  // false writes CQT cache files directly
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static CorpusSpec from_json(const nlohmann::json& j);
};

struct SynthClip {
  Waveform wave;
  KeyLabel key;
  std::string genre;
};

SynthClip generate_clip(const KeyLabel& key, Rng& rng, const CorpusSpec& spec = {});

// Deterministic per-clip generator seeded from (spec.seed, key, n).
SynthClip generate_clip(const KeyLabel& key, int n, const CorpusSpec& spec);

struct CorpusResult {
  std::filesystem::path manifest;  // all clips
  std::filesystem::path train_manifest;
  std::filesystem::path heldout_manifest;  // empty without holdout
  std::vector<ManifestRecord> records;
};

// Writes <out>/manifest.jsonl, train.jsonl, optionally heldout.jsonl, and
// clips under audio/ (WAV) or cqt/ (cache files). metadata is merged into
// each manifest's header line.
CorpusResult generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                             const CqtParams& cqt_params = {}, const nlohmann::json& metadata = nullptr);

}  // namespace skey
