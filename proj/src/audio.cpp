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

#include "skey/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "miniaudio_decode.h"
#include "skey/error.hpp"

namespace skey {

double minimum_seconds(AudioUse use) {
  switch (use) {
    case AudioUse::kTraining:
      return 31.0;
    case AudioUse::kInference:
      return kSegmentSeconds;
    case AudioUse::kAny:
      break;
  }
  return 0.0;
}

void validate(const Waveform& wave) {
  require(wave.sample_rate > 0, ErrorCode::kInvalidArgument, "sample rate must be positive");
  for (float s : wave.samples) {
    require(std::isfinite(s), ErrorCode::kInvalidArgument, "waveform contains non-finite samples");
  }
}

std::vector<float> downmix(std::span<const float> interleaved, int channels) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "channel count must be >= 1");
  const std::size_t frames = interleaved.size() / static_cast<std::size_t>(channels);
  std::vector<float> mono(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) acc += interleaved[i * channels + c];
    mono[i] = static_cast<float>(acc / channels);
  }
  return mono;
}

std::vector<float> resample(std::span<const float> input, double from_rate, double to_rate) {
  require(from_rate > 0 && to_rate > 0, ErrorCode::kInvalidArgument, "resample rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};

  const double ratio = to_rate / from_rate;
  const double cutoff = std::min(1.0, ratio) * 0.97;
  constexpr int kZeroCrossings = 16;
  const double half_width = kZeroCrossings / cutoff;
  const auto out_len = static_cast<std::size_t>(std::floor(static_cast<double>(input.size()) * ratio));
  const auto in_len = static_cast<std::ptrdiff_t>(input.size());

  std::vector<float> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(center - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(in_len - 1, static_cast<std::ptrdiff_t>(std::floor(center + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double d = center - static_cast<double>(i);
      const double x = cutoff * d;
      const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      // Blackman window over [-half_width, half_width].
      const double w = 0.42 + 0.5 * std::cos(kPi * d / half_width) + 0.08 * std::cos(2.0 * kPi * d / half_width);
      acc += input[static_cast<std::size_t>(i)] * cutoff * sinc * w;
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

Waveform load_audio(const std::filesystem::path& path, double target_rate, AudioUse use,
                    const AudioWindow& window) {
  require(target_rate > 0, ErrorCode::kInvalidArgument, "target rate must be positive");
  {
    std::ifstream probe(path, std::ios::binary);
    require(probe.good(), ErrorCode::kUnreadableFile, "cannot open " + path.string());
  }

  DecodedAudio decoded;
  if (!decode_audio_file(path.string().c_str(), &decoded)) {
    fail(ErrorCode::kUnsupportedCodec, "cannot decode " + path.string());
  }
  std::vector<float> mono = downmix(decoded.interleaved, decoded.channels);

  if (window.start_seconds > 0 || window.duration_seconds) {
    const auto first =
        std::min(mono.size(), static_cast<std::size_t>(std::llround(window.start_seconds * decoded.sample_rate)));
    std::size_t last = mono.size();
    if (window.duration_seconds) {
      last = std::min(last, first + static_cast<std::size_t>(std::llround(*window.duration_seconds *
                                                                           decoded.sample_rate)));
    }
    mono = std::vector<float>(mono.begin() + static_cast<std::ptrdiff_t>(first),
                              mono.begin() + static_cast<std::ptrdiff_t>(last));
  }

  Waveform wave;
  wave.sample_rate = target_rate;
  wave.samples = resample(mono, decoded.sample_rate, target_rate);

  const double need = minimum_seconds(use);
  if (wave.samples.empty() || wave.duration_seconds() + 1e-9 < need) {
    fail(ErrorCode::kEmptyAudio, path.string() + " lasts " + std::to_string(wave.duration_seconds()) +
                                     " s, need at least " + std::to_string(need) + " s");
  }
  validate(wave);
  return wave;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path.string());

  const auto rate = static_cast<std::uint32_t>(std::lround(wave.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);  // PCM
  u16(1);
  u32(rate);
  u32(rate * 2);
  u16(2);
  u16(16);
  out.write("data", 4);
  u32(data_bytes);
  for (float s : wave.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f));
    u16(static_cast<std::uint16_t>(q));
  }
  require(out.good(), ErrorCode::kIoError, "short write to " + path.string());
}

}  // namespace skey
