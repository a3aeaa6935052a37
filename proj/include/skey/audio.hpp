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
#include <optional>
#include <span>
#include <vector>

#include "skey/constants.hpp"

namespace skey {

struct Waveform {
  std::vector<float> samples;
  double sample_rate = kDefaultSampleRate;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Minimum duration enforced by load_audio. Training needs two disjoint 15 s
// segments with some slack (31 s); inference needs one segment (15 s).
enum class AudioUse { kAny, kTraining, kInference };

double minimum_seconds(AudioUse use);

struct AudioWindow {
  double start_seconds = 0.0;
  std::optional<double> duration_seconds;
};

// Decodes WAV/FLAC/MP3, downmixes by channel mean and resamples to
// target_rate. The window is applied before the duration check.
Waveform load_audio(const std::filesystem::path& path, double target_rate = kDefaultSampleRate,
                    AudioUse use = AudioUse::kAny, const AudioWindow& window = {});

// Interleaved frames -> mono by channel mean.
std::vector<float> downmix(std::span<const float> interleaved, int channels);

// Windowed-sinc (Blackman) band-limited resampling.
std::vector<float> resample(std::span<const float> input, double from_rate, double to_rate);

// 16-bit PCM mono WAV.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

void validate(const Waveform& wave);

}  // namespace skey
