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
#include <span>
#include <vector>

#include "skey/chromanet.hpp"
#include "skey/cqt.hpp"
#include "skey/keys.hpp"

namespace skey {

// Anything that maps crops to 12x2 posteriors.
class ChromaPredictor {
 public:
  virtual ~ChromaPredictor() = default;
  virtual std::vector<ChromaTensor> predict(std::span<const CroppedCqt> crops) const = 0;
};

// Trained network, inference mode (running batch-norm statistics).
class ModelPredictor final : public ChromaPredictor {
 public:
  explicit ModelPredictor(const ModelState& state, int jobs = 1) : state_(state), jobs_(jobs) {}
  std::vector<ChromaTensor> predict(std::span<const CroppedCqt> crops) const override;

 private:
  const ModelState& state_;
  int jobs_;
};

// Krumhansl-Kessler profile matching on the crop's PCP, sharpened by a
// softmax. Row r of the major column holds the score of tonic
// (r + major_shift) and column 0 is major unless swap_columns is set; with
// zero shifts this is an already-calibrated ideal model.
class TemplatePredictor final : public ChromaPredictor {
 public:
  TemplatePredictor(int major_shift = 0, int minor_shift = 0, bool swap_columns = false, double sharpness = 60.0)
      : major_shift_(major_shift), minor_shift_(minor_shift), swap_(swap_columns), sharpness_(sharpness) {}
  std::vector<ChromaTensor> predict(std::span<const CroppedCqt> crops) const override;

 private:
  int major_shift_;
  int minor_shift_;
  bool swap_;
  double sharpness_;
};

// Always returns the uniform posterior.
class UniformPredictor final : public ChromaPredictor {
 public:
  std::vector<ChromaTensor> predict(std::span<const CroppedCqt> crops) const override;
};

// Correlation of a PCP with the 24 rotated key profiles, indexed by
// KeyLabel::index().
std::array<double, kNumKeys> key_profile_scores(const Pcp& pcp);

// Additive-synthesis reference clip: I-IV-V-I (major) or i-iv-V-i with the
// leading tone (minor), a scale run per cycle, partials 1..8 at 1/h.
Waveform synthesize_probe(const KeyLabel& key, double sample_rate = kDefaultSampleRate, double seconds = 32.0);

// Consecutive 15 s windows at c = 15, posteriors averaged. TooShort below one
// window.
ChromaTensor predict_chroma(const ChromaPredictor& predictor, const CqtMatrix& cqt,
                            double segment_seconds = kSegmentSeconds);

struct CalibrationDiagnostics {
  ChromaTensor major_probe = ChromaTensor::Zero();
  ChromaTensor minor_probe = ChromaTensor::Zero();
  bool used_fallback = false;
};

// Binds columns and rows using C-major and A-minor probes.
CalibrationMap calibrate(const ChromaPredictor& predictor, const CqtParams& params = {},
                         CalibrationDiagnostics* diagnostics = nullptr);
// Same, from precomputed probe posteriors.
CalibrationMap calibrate_from_posteriors(const ChromaTensor& major_probe, const ChromaTensor& minor_probe,
                                         bool* used_fallback = nullptr);

struct KeyPrediction {
  KeyLabel key;
  ChromaTensor chroma = ChromaTensor::Zero();
  std::array<double, kNumKeys> posterior{};  // by KeyLabel::index()
};

KeyPrediction decode_key(const ChromaTensor& y, const CalibrationMap& calib);
KeyPrediction predict_key(const ChromaPredictor& predictor, const CalibrationMap& calib, const CqtMatrix& cqt);

// Octave-folded energy of the whole track at c = 15.
Pcp track_pcp(const CqtMatrix& cqt);

// Signature from the calibrated posterior, mode from the relative-root
// comparison on the uncompressed PCP.
KeyLabel heuristic_mode_predict(const ChromaPredictor& predictor, const CalibrationMap& calib, const CqtMatrix& cqt);
// The same rule with a known signature (major tonic).
KeyLabel heuristic_mode_from_signature(const Pcp& pcp, int signature);

}  // namespace skey
