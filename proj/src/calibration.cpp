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

#include "skey/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "skey/error.hpp"
#include "skey/objectives.hpp"
#include "skey/synth.hpp"

namespace skey {

namespace {

constexpr std::array<double, 12> kMajorProfile{6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
constexpr std::array<double, 12> kMinorProfile{6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& profile, int rotation) {
  double mx = 0.0;
  double my = 0.0;
  for (int i = 0; i < 12; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += profile[static_cast<std::size_t>(i)];
  }
  mx /= 12.0;
  my /= 12.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double a = x[static_cast<std::size_t>(wrap12(i + rotation))] - mx;
    const double b = profile[static_cast<std::size_t>(i)] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxx > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

std::pair<int, int> argmax_cell(const ChromaTensor& y) {
  int row = 0;
  int col = 0;
  double best = y(0, 0);
  for (int c = 0; c < kModes; ++c) {
    for (int r = 0; r < kBinsPerOctave; ++r) {
      if (y(r, c) > best) {
        best = y(r, c);
        row = r;
        col = c;
      }
    }
  }
  return {row, col};
}

int argmax_row(const ChromaTensor& y, int col) {
  int best = 0;
  for (int r = 1; r < kBinsPerOctave; ++r) {
    if (y(r, col) > y(best, col)) best = r;
  }
  return best;
}

int dominant_column(const ChromaTensor& y) { return y.col(1).sum() > y.col(0).sum() ? 1 : 0; }

}  // namespace

std::vector<ChromaTensor> ModelPredictor::predict(std::span<const CroppedCqt> crops) const {
  const std::vector<FeatureMap> fms = backbone_forward(crops, state_, false, nullptr, jobs_);
  std::vector<ChromaTensor> ys;
  ys.reserve(fms.size());
  for (const auto& fm : fms) ys.push_back(structured_head(fm));
  return ys;
}

std::array<double, kNumKeys> key_profile_scores(const Pcp& pcp) {
  std::array<double, kNumKeys> scores{};
  for (int t = 0; t < kBinsPerOctave; ++t) {
    scores[static_cast<std::size_t>(t)] = pearson(pcp.energies, kMajorProfile, t);
    scores[static_cast<std::size_t>(t + kBinsPerOctave)] = pearson(pcp.energies, kMinorProfile, t);
  }
  return scores;
}

std::vector<ChromaTensor> TemplatePredictor::predict(std::span<const CroppedCqt> crops) const {
  std::vector<ChromaTensor> ys;
  ys.reserve(crops.size());
  const int major_col = swap_ ? 1 : 0;
  for (const auto& crop : crops) {
    const auto scores = key_profile_scores(pitch_class_profile(crop, crop));
    ChromaTensor z;
    for (int r = 0; r < kBinsPerOctave; ++r) {
      z(r, major_col) = sharpness_ * scores[static_cast<std::size_t>(wrap12(r + major_shift_))];
      z(r, 1 - major_col) = sharpness_ * scores[static_cast<std::size_t>(wrap12(r + minor_shift_) + kBinsPerOctave)];
    }
    ChromaTensor y = (z.array() - z.maxCoeff()).exp().matrix();
    ys.push_back(y / y.sum());
  }
  return ys;
}

std::vector<ChromaTensor> UniformPredictor::predict(std::span<const CroppedCqt> crops) const {
  return std::vector<ChromaTensor>(crops.size(), ChromaTensor::Constant(1.0 / kNumKeys));
}

Waveform synthesize_probe(const KeyLabel& key, double sample_rate, double seconds) {
  const std::vector<int> degrees{0, 3, 4, 0};
  auto scale = mode_scale(key.mode);
  if (key.mode == Mode::kMinor) scale[6] = 11;
  constexpr double kChord = 2.0;
  const double cycle = kChord * static_cast<double>(degrees.size());
  const double run_note = cycle / 8.0;

  std::vector<Note> notes;
  for (double t0 = 0.0; t0 < seconds; t0 += cycle) {
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      const double t = t0 + kChord * static_cast<double>(i);
      const auto triad = diatonic_triad(key.mode, degrees[i]);
      notes.push_back({t, kChord, static_cast<double>(24 + wrap12(key.tonic + triad[0])), 0.3});
      for (int v : triad) notes.push_back({t, kChord, static_cast<double>(36 + wrap12(key.tonic) + v), 0.2});
    }
    for (int s = 0; s < 8; ++s) {
      const int rel = s < 7 ? scale[static_cast<std::size_t>(s)] : 12;
      notes.push_back({t0 + run_note * s, run_note, static_cast<double>(48 + wrap12(key.tonic) + rel), 0.2});
    }
  }
  Timbre timbre;
  timbre.harmonics = 8;
  timbre.rolloff = 1.0;
  timbre.decay_seconds = 3.0;
  return render_notes(notes, seconds, timbre, sample_rate, true);
}

ChromaTensor predict_chroma(const ChromaPredictor& predictor, const CqtMatrix& cqt, double segment_seconds) {
  const int tau = static_cast<int>(std::lround(segment_seconds * cqt.frame_rate));
  require(tau >= 1 && cqt.frames() >= tau, ErrorCode::kTooShort,
          "track has " + std::to_string(cqt.frames()) + " frames, one segment needs " + std::to_string(tau));
  require(cqt.bins() == kCqtBins, ErrorCode::kShapeMismatch, "inference needs a 99-bin CQT");
  std::vector<CroppedCqt> crops;
  for (int start = 0; start + tau <= cqt.frames(); start += tau) {
    crops.push_back(transpose_crop(segment_at(cqt, start, tau), kMaxTransposition));
  }
  const auto ys = predictor.predict(crops);
  ChromaTensor mean = ChromaTensor::Zero();
  for (const auto& y : ys) mean += y;
  return mean / static_cast<double>(ys.size());
}

CalibrationMap calibrate_from_posteriors(const ChromaTensor& major_probe, const ChromaTensor& minor_probe,
                                         bool* used_fallback) {
  const auto cell_major = argmax_cell(major_probe);
  const auto cell_minor = argmax_cell(minor_probe);
  if (cell_major == cell_minor && major_probe(cell_major.first, cell_major.second) > 0.9 &&
      minor_probe(cell_minor.first, cell_minor.second) > 0.9) {
    fail(ErrorCode::kDegenerateCalibration, "both probes put more than 0.9 mass on the same cell");
  }

  CalibrationMap map;
  const int major_col = dominant_column(major_probe);
  const int minor_col = dominant_column(minor_probe);
  bool fallback = false;
  if (major_col != minor_col) {
    map.major_column = major_col;
  } else {
    fallback = true;
    const double lead = major_probe.col(0).sum() - minor_probe.col(0).sum();
    if (std::abs(lead) < 1e-12) {
      fail(ErrorCode::kDegenerateCalibration, "probes cannot tell the two columns apart");
    }
    map.major_column = lead > 0.0 ? 0 : 1;
  }
  const int minor_column = map.minor_column();
  map.offset[static_cast<std::size_t>(map.major_column)] = wrap12(3 - argmax_row(major_probe, map.major_column));
  map.offset[static_cast<std::size_t>(minor_column)] = wrap12(0 - argmax_row(minor_probe, minor_column));
  if (used_fallback) *used_fallback = fallback;
  return map;
}

CalibrationMap calibrate(const ChromaPredictor& predictor, const CqtParams& params,
                         CalibrationDiagnostics* diagnostics) {
  const ChromaTensor major =
      predict_chroma(predictor, compute_cqt(synthesize_probe({3, Mode::kMajor}, params.sample_rate), params));
  const ChromaTensor minor =
      predict_chroma(predictor, compute_cqt(synthesize_probe({0, Mode::kMinor}, params.sample_rate), params));
  bool fallback = false;
  const CalibrationMap map = calibrate_from_posteriors(major, minor, &fallback);
  if (diagnostics) *diagnostics = {major, minor, fallback};
  return map;
}

KeyPrediction decode_key(const ChromaTensor& y, const CalibrationMap& calib) {
  calib.validate();
  KeyPrediction out;
  out.chroma = y;
  const auto [row, col] = argmax_cell(y);
  out.key = calib.label_for(row, col);
  for (int c = 0; c < kModes; ++c) {
    for (int r = 0; r < kBinsPerOctave; ++r) out.posterior[static_cast<std::size_t>(calib.label_for(r, c).index())] = y(r, c);
  }
  return out;
}

KeyPrediction predict_key(const ChromaPredictor& predictor, const CalibrationMap& calib, const CqtMatrix& cqt) {
  return decode_key(predict_chroma(predictor, cqt), calib);
}

Pcp track_pcp(const CqtMatrix& cqt) {
  const CroppedCqt x = transpose_crop(cqt.magnitudes, kMaxTransposition);
  return pitch_class_profile(x, x);
}

KeyLabel heuristic_mode_from_signature(const Pcp& pcp, int signature) {
  const Mode mode = pseudo_label(pcp, wrap12(signature));
  return mode == Mode::kMajor ? KeyLabel{wrap12(signature), Mode::kMajor}
                              : KeyLabel{wrap12(signature - 3), Mode::kMinor};
}

KeyLabel heuristic_mode_predict(const ChromaPredictor& predictor, const CalibrationMap& calib, const CqtMatrix& cqt) {
  const KeyPrediction p = predict_key(predictor, calib, cqt);
  // Signature mass: a major key plus its relative minor.
  int best = 0;
  double best_mass = -1.0;
  for (int s = 0; s < kBinsPerOctave; ++s) {
    const double mass = p.posterior[static_cast<std::size_t>(KeyLabel{s, Mode::kMajor}.index())] +
                        p.posterior[static_cast<std::size_t>(KeyLabel{wrap12(s - 3), Mode::kMinor}.index())];
    if (mass > best_mass) {
      best_mass = mass;
      best = s;
    }
  }
  return heuristic_mode_from_signature(track_pcp(cqt), best);
}

}  // namespace skey
