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

#include <cstdint>
#include <fstream>
#include <random>

#include "doctest.h"
#include "skey/audio.hpp"
#include "skey/cqt.hpp"
#include "skey/error.hpp"
#include "skey/frontend.hpp"
#include "test_util.hpp"

using namespace skey;
using skey::test::TempDir;

namespace {

// 16-bit PCM writer for multichannel fixtures.
void write_pcm16(const std::filesystem::path& path, const std::vector<std::vector<float>>& channels, int rate) {
  const auto ch = static_cast<std::uint16_t>(channels.size());
  const auto frames = static_cast<std::uint32_t>(channels[0].size());
  const std::uint32_t data_bytes = frames * ch * 2;
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(ch);
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate) * ch * 2);
  u16(static_cast<std::uint16_t>(ch * 2));
  u16(16);
  out.write("data", 4);
  u32(data_bytes);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (const auto& c : channels) u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(c[i] * 32767.0f)));
  }
}

int argmax_bin(const CqtMatrix& cqt) {
  Eigen::VectorXf energy = cqt.magnitudes.rowwise().sum();
  Eigen::Index best = 0;
  energy.maxCoeff(&best);
  return static_cast<int>(best);
}

CqtMatrix blank_cqt(int frames) {
  CqtMatrix m;
  m.magnitudes = Eigen::MatrixXf::Zero(kCqtBins, frames);
  m.frame_rate = CqtParams{}.frame_rate();
  return m;
}

}  // namespace

TEST_CASE("load_audio downmixes and resamples a 44.1 kHz stereo file") {
  TempDir dir("audio");
  const Waveform left = test::sine(440.0, 60.0, 44100.0, 0.4);
  std::vector<float> right(left.samples.size(), 0.0f);
  write_pcm16(dir / "stereo.wav", {left.samples, right}, 44100);

  const Waveform w = load_audio(dir / "stereo.wav");
  CHECK(w.sample_rate == kDefaultSampleRate);
  CHECK(w.duration_seconds() == doctest::Approx(60.0).epsilon(1e-3));
  float peak = 0.0f;
  for (float s : w.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("load_audio enforces the training minimum and accepts silence") {
  TempDir dir("audio_short");
  write_wav(dir / "short.wav", test::sine(220.0, 10.0));
  try {
    load_audio(dir / "short.wav", kDefaultSampleRate, AudioUse::kTraining);
    FAIL("expected EmptyAudio");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyAudio);
  }
  Waveform silent;
  silent.samples.assign(static_cast<std::size_t>(40 * kDefaultSampleRate), 0.0f);
  write_wav(dir / "silent.wav", silent);
  const Waveform w = load_audio(dir / "silent.wav", kDefaultSampleRate, AudioUse::kTraining);
  CHECK(std::all_of(w.samples.begin(), w.samples.end(), [](float s) { return s == 0.0f; }));
}

TEST_CASE("load_audio reports missing and undecodable files") {
  TempDir dir("audio_bad");
  CHECK_THROWS_AS(load_audio(dir / "missing.wav"), Error);
  std::ofstream(dir / "junk.wav") << "definitely not audio";
  try {
    load_audio(dir / "junk.wav");
    FAIL("expected UnsupportedCodec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupportedCodec);
  }
}

TEST_CASE("CQT geometry") {
  const CqtParams p;
  CHECK(p.hop_samples() == 4190);
  CHECK(p.segment_frames() == 79);
  CHECK(p.bin_frequency(0) == doctest::Approx(27.5));
  CHECK(p.bin_frequency(48) == doctest::Approx(440.0));
}

TEST_CASE("CQT peaks on the closed-form bin") {
  CHECK(argmax_bin(compute_cqt(test::sine(440.0, 5.0))) == 48);
  CHECK(argmax_bin(compute_cqt(test::sine(27.5, 5.0))) == 0);
  for (int bin : {12, 30, 61, 98}) {
    CAPTURE(bin);
    CHECK(argmax_bin(compute_cqt(test::sine(CqtParams{}.bin_frequency(bin), 5.0))) == bin);
  }
}

TEST_CASE("CQT of silence is zero and frame count follows the hop") {
  Waveform z;
  z.samples.assign(static_cast<std::size_t>(20 * kDefaultSampleRate), 0.0f);
  const CqtMatrix m = compute_cqt(z);
  CHECK(m.bins() == kCqtBins);
  CHECK(m.frames() == static_cast<int>(z.samples.size()) / 4190 + 1);
  CHECK(m.magnitudes.cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("CQT cache round trip and parameter mismatch") {
  TempDir dir("cqt_cache");
  const CqtParams p;
  const CqtMatrix m = compute_cqt(test::sine(330.0, 16.0), p);
  write_cqt_cache(dir / "x.cqt", m, p);
  const CqtMatrix back = read_cqt_cache(dir / "x.cqt", &p);
  CHECK(back.magnitudes == m.magnitudes);
  CHECK(back.frame_rate == doctest::Approx(m.frame_rate));
  CqtParams other = p;
  other.hop_seconds = 0.1;
  CHECK_THROWS_AS(read_cqt_cache(dir / "x.cqt", &other), Error);
}

TEST_CASE("CqtCache reuses entries") {
  TempDir dir("cqt_dir");
  write_wav(dir / "tone.wav", test::sine(440.0, 16.0));
  const CqtCache cache(dir / "cache");
  const CqtMatrix first = cache.load(dir / "tone.wav");
  CHECK(std::filesystem::exists(cache.entry_path(dir / "tone.wav", {})));
  const CqtMatrix second = cache.load(dir / "tone.wav");
  CHECK(first.magnitudes == second.magnitudes);
}

TEST_CASE("segment pairs are disjoint") {
  Rng rng(3);
  const CqtMatrix m = blank_cqt(60 * 22050 / 4190 + 1);
  for (int i = 0; i < 200; ++i) {
    const SegmentPair sp = extract_segment_pair(m, rng);
    CHECK(sp.a.frames() == 79);
    CHECK(sp.b.frames() == 79);
    CHECK(std::abs(sp.a.start_frame - sp.b.start_frame) >= 79);
  }
}

TEST_CASE("30 s forces the only placement and 29 s is too short") {
  Rng rng(1);
  const SegmentPair sp = extract_segment_pair(blank_cqt(30 * 22050 / 4190 + 1), rng);
  CHECK(sp.a.start_frame == 0);
  CHECK(sp.b.start_frame == 79);
  try {
    extract_segment_pair(blank_cqt(29 * 22050 / 4190 + 1), rng);
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooShort);
  }
}

TEST_CASE("transpose_crop boundaries and shift") {
  Eigen::MatrixXf x(kCqtBins, 3);
  for (int r = 0; r < kCqtBins; ++r) x.row(r).setConstant(static_cast<float>(r));
  CHECK(transpose_crop(x, 15).magnitudes(0, 0) == 0.0f);
  CHECK(transpose_crop(x, 15).magnitudes(83, 0) == 83.0f);
  CHECK(transpose_crop(x, 0).magnitudes(0, 0) == 15.0f);
  CHECK(transpose_crop(x, 0).magnitudes(83, 0) == 98.0f);
  CHECK_THROWS_AS(transpose_crop(x, 16), Error);
  CHECK_THROWS_AS(transpose_crop(x, -1), Error);
  CHECK_THROWS_AS(transpose_crop(Eigen::MatrixXf::Zero(98, 3), 3), Error);

  Eigen::MatrixXf tone = Eigen::MatrixXf::Zero(kCqtBins, 2);
  tone.row(48).setOnes();
  for (int c = 0; c < kMaxTransposition; ++c) {
    Eigen::Index r0 = 0;
    Eigen::Index r1 = 0;
    transpose_crop(tone, c).magnitudes.col(0).maxCoeff(&r0);
    transpose_crop(tone, c + 1).magnitudes.col(0).maxCoeff(&r1);
    CHECK(r1 == r0 + 1);
  }
}

TEST_CASE("pitch_class_profile oracles") {
  CroppedCqt a;
  CroppedCqt b;
  a.magnitudes = Eigen::MatrixXf::Zero(kCropBins, 4);
  b.magnitudes = Eigen::MatrixXf::Zero(kCropBins, 4);
  Pcp zero = pitch_class_profile(a, b);
  for (double e : zero.energies) CHECK(e == 0.0);

  for (int j = 0; j < kOctaves; ++j) a.magnitudes(12 * j, 0) = 1.0f;
  const Pcp u = pitch_class_profile(a, b);
  CHECK(u[0] == doctest::Approx(3.5));
  for (int q = 1; q < 12; ++q) CHECK(u[q] == 0.0);

  std::mt19937 gen(5);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (Eigen::Index i = 0; i < a.magnitudes.size(); ++i) a.magnitudes(i) = d(gen);
  const Pcp same = pitch_class_profile(a, a);
  for (int q = 0; q < 12; ++q) {
    double expect = 0.0;
    for (int j = 0; j < kOctaves; ++j) expect += a.magnitudes.row(12 * j + q).cast<double>().sum();
    CHECK(same[q] == doctest::Approx(expect));
  }
}
