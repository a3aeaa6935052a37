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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "skey/audio.hpp"
#include "skey/constants.hpp"

namespace skey {

struct CqtParams {
  double sample_rate = kDefaultSampleRate;
  double hop_seconds = 0.19;
  double min_frequency = kLowestFrequencyHz;
  int bins = kCqtBins;
  int bins_per_octave = kBinsPerOctave;

  int hop_samples() const;
  double frame_rate() const { return sample_rate / hop_samples(); }
  double bin_frequency(int bin) const;
  // Frames per 15 s segment: round(15 s * frame_rate), 79 for the defaults.
  int segment_frames(double seconds = kSegmentSeconds) const;
  // Canonical string used as part of the cache key.
  std::string key_string() const;
};

// Uncompressed CQT magnitudes, [99 bins x T frames]. Bin 0 is A0.
struct CqtMatrix {
  Eigen::MatrixXf magnitudes;
  double frame_rate = 0.0;

  int bins() const { return static_cast<int>(magnitudes.rows()); }
  int frames() const { return static_cast<int>(magnitudes.cols()); }
};

// Magnitude (not power) CQT with Hann-windowed constant-Q kernels; a unit
// amplitude sinusoid centred on a bin yields magnitude 0.5 there.
CqtMatrix compute_cqt(const Waveform& wave, const CqtParams& params = {});

// log(1 + gamma * m), the network input compression.
Eigen::MatrixXf compress_magnitudes(const Eigen::MatrixXf& magnitudes, float gamma = 1000.0f);

// Cache container: 8-byte magic "SKEYCQT1", u32 version, u32 bins, u32 frames,
// f64 sample_rate, f64 hop_seconds, f64 bin0_hz, then bins*frames float32 in
// row-major order (all frames of bin 0 first).
void write_cqt_cache(const std::filesystem::path& path, const CqtMatrix& cqt, const CqtParams& params);
CqtMatrix read_cqt_cache(const std::filesystem::path& path, const CqtParams* expected = nullptr);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t file_content_hash(const std::filesystem::path& path);

class CqtCache {
 public:
  // An empty directory disables caching.
  explicit CqtCache(std::filesystem::path directory = {}, CqtParams params = {});

  const CqtParams& params() const { return params_; }
  CqtMatrix load(const std::filesystem::path& audio_path, AudioUse use = AudioUse::kAny,
                 const AudioWindow& window = {}) const;
  std::filesystem::path entry_path(const std::filesystem::path& audio_path, const AudioWindow& window) const;

 private:
  std::filesystem::path directory_;
  CqtParams params_;
};

}  // namespace skey
