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

#include "skey/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "skey/chromanet.hpp"
#include "skey/error.hpp"

namespace skey {

namespace {

std::uint64_t clip_seed(std::uint64_t seed, int key_index, int n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(key_index), static_cast<std::uint32_t>(n), 0x5eedu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Lowest pitch >= floor with the given pitch class.
int place(int pitch_class, int floor) {
  return floor + wrap12(pitch_class - floor);
}

std::string clip_id(const KeyLabel& key, int n) {
  std::string name = key.to_string();
  std::replace(name.begin(), name.end(), ' ', '_');
  std::replace(name.begin(), name.end(), '#', 's');
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "_%03d", n);
  return name + suffix;
}

}  // namespace

Waveform render_notes(const std::vector<Note>& notes, double duration_seconds, const Timbre& timbre,
                      double sample_rate, bool peak_normalize) {
  Waveform wave;
  wave.sample_rate = sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(duration_seconds * sample_rate));
  std::vector<double> acc(total, 0.0);
  std::vector<double> env;
  for (const Note& note : notes) {
    const auto begin = static_cast<std::size_t>(std::max(0.0, std::round(note.start_seconds * sample_rate)));
    if (begin >= total) continue;
    const auto len = std::min(total - begin, static_cast<std::size_t>(std::round(note.duration_seconds * sample_rate)));
    env.assign(len, 0.0);
    const double attack = std::max(1.0, timbre.attack_seconds * sample_rate);
    const double release = std::max(1.0, timbre.release_seconds * sample_rate);
    const double decay = std::exp(-1.0 / (timbre.decay_seconds * sample_rate));
    double d = 1.0;
    for (std::size_t i = 0; i < len; ++i, d *= decay) {
      const double a = std::min(1.0, static_cast<double>(i) / attack);
      const double r = std::min(1.0, static_cast<double>(len - i) / release);
      env[i] = note.amplitude * a * r * d;
    }
    const double f0 = kLowestFrequencyHz * std::pow(2.0, note.pitch / kBinsPerOctave);
    for (int h = 1; h <= timbre.harmonics; ++h) {
      const double f = f0 * h;
      if (f >= 0.45 * sample_rate) break;
      const double gain = 1.0 / std::pow(static_cast<double>(h), timbre.rolloff);
      const std::complex<double> step = std::polar(1.0, 2.0 * kPi * f / sample_rate);
      std::complex<double> phasor = std::polar(1.0, 0.37 * h);
      for (std::size_t i = 0; i < len; ++i) {
        acc[begin + i] += gain * env[i] * phasor.imag();
        phasor *= step;
        if ((i & 1023) == 0) phasor /= std::abs(phasor);
      }
    }
  }
  double peak = 0.0;
  for (double v : acc) peak = std::max(peak, std::abs(v));
  const double scale = peak_normalize && peak > 0.0 ? 0.9 / peak : 1.0;
  wave.samples.resize(total);
  for (std::size_t i = 0; i < total; ++i) wave.samples[i] = static_cast<float>(acc[i] * scale);
  return wave;
}

std::array<int, 7> mode_scale(Mode mode) {
  if (mode == Mode::kMajor) return {0, 2, 4, 5, 7, 9, 11};
  return {0, 2, 3, 5, 7, 8, 10};
}

std::array<int, 3> diatonic_triad(Mode mode, int degree, bool raised_leading_tone) {
  const auto scale = mode_scale(mode);
  std::array<int, 3> triad{};
  for (int i = 0; i < 3; ++i) {
    const int d = degree + 2 * i;
    triad[static_cast<std::size_t>(i)] = scale[static_cast<std::size_t>(d % 7)] + (d >= 7 ? 12 : 0);
  }
  if (mode == Mode::kMinor && raised_leading_tone && (degree == 4 || degree == 6)) {
    for (int& pc : triad) {
      if (pc % 12 == 10) pc += 1;
    }
  }
  return triad;
}

const std::vector<Style>& default_styles() {
  static const std::vector<Style> styles = {
      {"ballad", 4, false, 0.6},
      {"pop", 2, false, 1.0},
      {"arpeggio", 2, true, 0.5},
      {"chorale", 1, false, 0.8},
  };
  return styles;
}

std::vector<int> random_progression(int chords, Rng& rng) {
  // Row: current degree, column: next degree.
  static constexpr double kNext[7][7] = {
      {0.0, 1.0, 0.3, 2.0, 2.0, 1.5, 0.2},  // I
      {0.2, 0.0, 0.0, 0.5, 3.0, 0.0, 0.5},  // ii
      {0.0, 0.5, 0.0, 1.0, 0.0, 2.0, 0.0},  // iii
      {1.5, 1.0, 0.0, 0.0, 2.5, 0.0, 0.3},  // IV
      {4.0, 0.0, 0.0, 0.3, 0.0, 1.0, 0.0},  // V
      {0.0, 2.0, 0.3, 2.0, 1.0, 0.0, 0.0},  // vi
      {3.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0},  // vii
  };
  auto step = [&](int from) {
    const auto& row = kNext[from];
    std::discrete_distribution<int> next(std::begin(row), std::end(row));
    return next(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> out;
  while (static_cast<int>(out.size()) < chords) {
    // Four-chord phrases open on the tonic and close with a cadence.
    const int second = step(0);
    const double cadence = unit(rng);
    std::array<int, 4> phrase{0, second, 4, 0};
    if (cadence < 0.2) {
      phrase[2] = 3;
    } else if (cadence < 0.4) {
      phrase[2] = step(second);
      phrase[3] = 4;
    }
    for (int d : phrase) out.push_back(d);
  }
  out.resize(static_cast<std::size_t>(chords));
  return out;
}

void CorpusSpec::validate() const {
  require(n_per_key >= 1, ErrorCode::kInvalidArgument, "n_per_key must be at least 1");
  require(holdout_per_key >= 0 && holdout_per_key < n_per_key, ErrorCode::kInvalidArgument,
          "holdout_per_key must lie in [0, n_per_key)");
  require(duration_seconds >= 31.0, ErrorCode::kInvalidArgument, "clips must last at least 31 s");
  require(sample_rate > 0 && harmonics >= 1, ErrorCode::kInvalidArgument, "invalid timbre");
  require(tempo_min_bpm > 0 && tempo_max_bpm >= tempo_min_bpm, ErrorCode::kInvalidArgument, "invalid tempo range");
  require(decay_min_seconds > 0 && decay_max_seconds >= decay_min_seconds, ErrorCode::kInvalidArgument,
          "invalid decay range");
}

nlohmann::json CorpusSpec::to_json() const {
  return {{"n_per_key", n_per_key},
          {"holdout_per_key", holdout_per_key},
          {"duration_s", duration_seconds},
          {"seed", seed},
          {"sample_rate", sample_rate},
          {"harmonics", harmonics},
          {"decay_min_s", decay_min_seconds},
          {"decay_max_s", decay_max_seconds},
          {"detune_cents", detune_cents},
          {"noise_db", noise_db},
          {"tempo_min_bpm", tempo_min_bpm},
          {"tempo_max_bpm", tempo_max_bpm},
          {"write_audio", write_audio}};
}

CorpusSpec CorpusSpec::from_json(const nlohmann::json& j) {
  CorpusSpec s;
  s.n_per_key = j.value("n_per_key", s.n_per_key);
  s.holdout_per_key = j.value("holdout_per_key", s.holdout_per_key);
  s.duration_seconds = j.value("duration_s", s.duration_seconds);
  s.seed = j.value("seed", s.seed);
  s.sample_rate = j.value("sample_rate", s.sample_rate);
  s.harmonics = j.value("harmonics", s.harmonics);
  s.decay_min_seconds = j.value("decay_min_s", s.decay_min_seconds);
  s.decay_max_seconds = j.value("decay_max_s", s.decay_max_seconds);
  s.detune_cents = j.value("detune_cents", s.detune_cents);
  s.noise_db = j.value("noise_db", s.noise_db);
  s.tempo_min_bpm = j.value("tempo_min_bpm", s.tempo_min_bpm);
  s.tempo_max_bpm = j.value("tempo_max_bpm", s.tempo_max_bpm);
  s.write_audio = j.value("write_audio", s.write_audio);
  s.jobs = j.value("jobs", s.jobs);
  s.validate();
  return s;
}

SynthClip generate_clip(const KeyLabel& key, Rng& rng, const CorpusSpec& spec) {
  const auto& styles = default_styles();
  const Style& style = styles[std::uniform_int_distribution<std::size_t>(0, styles.size() - 1)(rng)];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double bpm = spec.tempo_min_bpm + (spec.tempo_max_bpm - spec.tempo_min_bpm) * unit(rng);
  const double beat = 60.0 / bpm;
  const int beats_per_chord = style.beats_per_chord;
  const double chord_seconds = beat * beats_per_chord;
  // Harmonic minor for most minor clips, natural minor otherwise.
  const bool raised = key.mode == Mode::kMinor && unit(rng) < 0.6;

  Timbre timbre;
  timbre.harmonics = spec.harmonics;
  timbre.rolloff = 0.8 + 0.4 * unit(rng);
  timbre.decay_seconds = spec.decay_min_seconds + (spec.decay_max_seconds - spec.decay_min_seconds) * unit(rng);

  // Register floors in semitones above A0: bass around A1-A2, chords A2-A4,
  // melody A3-A5.
  const int bass_floor = 12 + 12 * static_cast<int>(unit(rng) < 0.5);
  const int chord_floor = 24 + 12 * static_cast<int>(unit(rng) < 0.5);
  const int melody_floor = 36 + 12 * static_cast<int>(unit(rng) < 0.5);
  const auto scale = mode_scale(key.mode);
  auto detune = [&] { return spec.detune_cents / 100.0 * (2.0 * unit(rng) - 1.0); };

  std::vector<Note> notes;
  const int chords = static_cast<int>(std::ceil(spec.duration_seconds / chord_seconds));
  const std::vector<int> degrees = random_progression(chords, rng);
  for (int i = 0; i < chords; ++i) {
    const double t0 = i * chord_seconds;
    const int degree = degrees[static_cast<std::size_t>(i)];
    const auto triad = diatonic_triad(key.mode, degree, raised);
    const int root = key.tonic + triad[0];

    notes.push_back({t0, chord_seconds, place(root, bass_floor) + detune(), 0.35});
    const int inversion = std::uniform_int_distribution<int>(0, 2)(rng);
    int prev = chord_floor;
    std::array<double, 3> voices{};
    for (int v = 0; v < 3; ++v) {
      const int pc = key.tonic + triad[static_cast<std::size_t>((v + inversion) % 3)];
      prev = place(pc, v == 0 ? chord_floor : prev + 1);
      voices[static_cast<std::size_t>(v)] = prev + detune();
    }
    if (style.arpeggiate) {
      const int steps = 3 * beats_per_chord;
      const double dt = chord_seconds / steps;
      for (int s = 0; s < steps; ++s) notes.push_back({t0 + s * dt, 2.0 * dt, voices[static_cast<std::size_t>(s % 3)], 0.22});
    } else {
      for (double v : voices) notes.push_back({t0, chord_seconds, v, 0.18});
    }

    // A melody note per beat: chord tones mostly, other scale tones as
    // passing notes; phrases open and close on the tonic.
    const bool phrase_start = i % 4 == 0;
    const bool phrase_end = i % 4 == 3 || i == chords - 1;
    for (int b = 0; b < beats_per_chord; ++b) {
      const bool first = phrase_start && b == 0;
      const bool last = phrase_end && degree == 0 && b == beats_per_chord - 1;
      if (!first && !last && unit(rng) >= style.melody_density) continue;
      int pc;
      if (first || last) {
        pc = key.tonic;
      } else if (unit(rng) < 0.7) {
        pc = key.tonic + triad[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
      } else {
        int rel = scale[std::uniform_int_distribution<std::size_t>(0, 6)(rng)];
        if (raised && degree == 4 && rel == 10) rel = 11;
        pc = key.tonic + rel;
      }
      notes.push_back({t0 + b * beat, beat, place(pc, melody_floor) + detune(), 0.22});
    }
  }

  SynthClip clip;
  clip.key = key;
  clip.genre = style.name;
  clip.wave = render_notes(notes, spec.duration_seconds, timbre, spec.sample_rate, true);
  if (std::isfinite(spec.noise_db)) {
    double energy = 0.0;
    for (float s : clip.wave.samples) energy += static_cast<double>(s) * s;
    const double rms = std::sqrt(energy / std::max<std::size_t>(1, clip.wave.samples.size()));
    const double sigma = rms * std::pow(10.0, spec.noise_db / 20.0);
    std::normal_distribution<double> noise(0.0, sigma);
    for (float& s : clip.wave.samples) s = static_cast<float>(s + noise(rng));
  }
  return clip;
}

SynthClip generate_clip(const KeyLabel& key, int n, const CorpusSpec& spec) {
  Rng rng(clip_seed(spec.seed, key.index(), n));
  return generate_clip(key, rng, spec);
}

CorpusResult generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                             const CqtParams& cqt_params, const nlohmann::json& metadata) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / (spec.write_audio ? "audio" : "cqt"), ec);
  require(!ec, ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());

  CqtParams params = cqt_params;
  params.sample_rate = spec.sample_rate;
  const int total = kNumKeys * spec.n_per_key;
  std::vector<ManifestRecord> records(static_cast<std::size_t>(total));
  parallel_for(total, spec.jobs, [&](int i) {
    const KeyLabel key = KeyLabel::from_index(i / spec.n_per_key);
    const int n = i % spec.n_per_key;
    SynthClip clip = generate_clip(key, n, spec);
    ManifestRecord& r = records[static_cast<std::size_t>(i)];
    r.id = clip_id(key, n);
    r.key = key;
    r.genre = clip.genre;
    if (spec.write_audio) {
      r.audio_path = out_dir / "audio" / (r.id + ".wav");
      write_wav(r.audio_path, clip.wave);
    } else {
      r.cqt_cache_path = out_dir / "cqt" / (r.id + ".cqt");
      write_cqt_cache(r.cqt_cache_path, compute_cqt(clip.wave, params), params);
    }
  });

  CorpusResult result;
  result.records = records;
  nlohmann::json meta = metadata.is_object() ? metadata : nlohmann::json::object();
  meta["generator"] = "skey synth";
  meta["corpus"] = spec.to_json();
  result.manifest = out_dir / "manifest.jsonl";
  write_manifest(result.manifest, records, meta);

  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> heldout;
  for (int i = 0; i < total; ++i) {
    const bool hold = i % spec.n_per_key >= spec.n_per_key - spec.holdout_per_key;
    (hold ? heldout : train).push_back(records[static_cast<std::size_t>(i)]);
  }
  result.train_manifest = out_dir / "train.jsonl";
  write_manifest(result.train_manifest, train, meta);
  if (!heldout.empty()) {
    result.heldout_manifest = out_dir / "heldout.jsonl";
    write_manifest(result.heldout_manifest, heldout, meta);
  }
  return result;
}

}  // namespace skey
