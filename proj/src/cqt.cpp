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

#include "skey/cqt.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "skey/error.hpp"

namespace skey {

int CqtParams::hop_samples() const { return static_cast<int>(std::lround(hop_seconds * sample_rate)); }

double CqtParams::bin_frequency(int bin) const {
  return min_frequency * std::pow(2.0, static_cast<double>(bin) / bins_per_octave);
}

int CqtParams::segment_frames(double seconds) const { return static_cast<int>(std::lround(seconds * frame_rate())); }

std::string CqtParams::key_string() const {
  std::ostringstream ss;
  ss << std::setprecision(10) << "cqt-v1;sr=" << sample_rate << ";hop=" << hop_samples() << ";fmin=" << min_frequency
     << ";bins=" << bins << ";bpo=" << bins_per_octave;
  return ss.str();
}

namespace {

struct Kernel {
  int half = 0;  // kernel spans [-half, half)
  std::vector<float> re;
  std::vector<float> im;
};

std::vector<Kernel> build_kernels(const CqtParams& params) {
  const double q = 1.0 / (std::pow(2.0, 1.0 / params.bins_per_octave) - 1.0);
  std::vector<Kernel> kernels(static_cast<std::size_t>(params.bins));
  for (int p = 0; p < params.bins; ++p) {
    const double f = params.bin_frequency(p);
    const int length = static_cast<int>(std::ceil(q * params.sample_rate / f));
    Kernel& k = kernels[static_cast<std::size_t>(p)];
    k.half = length / 2;
    const int n = 2 * k.half;
    k.re.resize(static_cast<std::size_t>(n));
    k.im.resize(static_cast<std::size_t>(n));
    double wsum = 0.0;
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * (i + 0.5) / n);
      wsum += w[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i - k.half) / params.sample_rate;
      const double phase = -2.0 * kPi * f * t;
      k.re[static_cast<std::size_t>(i)] = static_cast<float>(w[static_cast<std::size_t>(i)] * std::cos(phase) / wsum);
      k.im[static_cast<std::size_t>(i)] = static_cast<float>(w[static_cast<std::size_t>(i)] * std::sin(phase) / wsum);
    }
  }
  return kernels;
}

}  // namespace

CqtMatrix compute_cqt(const Waveform& wave, const CqtParams& params) {
  validate(wave);
  std::vector<float> samples;
  std::span<const float> signal = wave.samples;
  if (wave.sample_rate != params.sample_rate) {
    samples = resample(wave.samples, wave.sample_rate, params.sample_rate);
    signal = samples;
  }
  const int hop = params.hop_samples();
  require(hop > 0, ErrorCode::kInvalidArgument, "hop must be positive");
  require(signal.size() >= static_cast<std::size_t>(hop), ErrorCode::kTooShort,
          "waveform shorter than one CQT frame");

  static thread_local std::string cached_key;
  static thread_local std::vector<Kernel> kernels;
  if (cached_key != params.key_string()) {
    kernels = build_kernels(params);
    cached_key = params.key_string();
  }

  const int frames = static_cast<int>(signal.size() / static_cast<std::size_t>(hop)) + 1;
  const auto len = static_cast<std::ptrdiff_t>(signal.size());
  CqtMatrix out;
  out.frame_rate = params.frame_rate();
  out.magnitudes.setZero(params.bins, frames);

  for (int t = 0; t < frames; ++t) {
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(t) * hop;
    for (int p = 0; p < params.bins; ++p) {
      const Kernel& k = kernels[static_cast<std::size_t>(p)];
      const std::ptrdiff_t begin = center - k.half;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, begin);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, center + k.half);
      if (hi <= lo) continue;
      const auto count = static_cast<Eigen::Index>(hi - lo);
      Eigen::Map<const Eigen::VectorXf> x(signal.data() + lo, count);
      Eigen::Map<const Eigen::VectorXf> kr(k.re.data() + (lo - begin), count);
      Eigen::Map<const Eigen::VectorXf> ki(k.im.data() + (lo - begin), count);
      const float re = x.dot(kr);
      const float im = x.dot(ki);
      out.magnitudes(p, t) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

Eigen::MatrixXf compress_magnitudes(const Eigen::MatrixXf& magnitudes, float gamma) {
  return (magnitudes.array() * gamma).log1p().matrix();
}

namespace {

constexpr char kCacheMagic[8] = {'S', 'K', 'E', 'Y', 'C', 'Q', 'T', '1'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_cqt_cache(const std::filesystem::path& path, const CqtMatrix& cqt, const CqtParams& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), ErrorCode::kIoError, "cannot write " + tmp);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put<std::uint32_t>(out, kCacheVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cqt.bins()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cqt.frames()));
    put<double>(out, params.sample_rate);
    put<double>(out, params.hop_samples() / params.sample_rate);
    put<double>(out, params.min_frequency);
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = cqt.magnitudes;
    out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(float)));
    require(out.good(), ErrorCode::kIoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CqtMatrix read_cqt_cache(const std::filesystem::path& path, const CqtParams* expected) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kCacheMagic, sizeof(magic)) == 0, ErrorCode::kUnsupportedCodec,
          path.string() + " is not a CQT cache file");
  const auto version = get<std::uint32_t>(in);
  require(version == kCacheVersion, ErrorCode::kUnsupportedCodec, "unsupported CQT cache version");
  const auto bins = get<std::uint32_t>(in);
  const auto frames = get<std::uint32_t>(in);
  const auto sample_rate = get<double>(in);
  const auto hop_seconds = get<double>(in);
  const auto bin0 = get<double>(in);
  require(in.good(), ErrorCode::kUnsupportedCodec, "truncated CQT cache header");
  require(bins == static_cast<std::uint32_t>(kCqtBins), ErrorCode::kShapeMismatch,
          "CQT cache must hold 99 bins, got " + std::to_string(bins));
  if (expected) {
    require(std::abs(sample_rate - expected->sample_rate) < 1e-6 &&
                std::abs(hop_seconds * sample_rate - expected->hop_samples()) < 1e-6 &&
                std::abs(bin0 - expected->min_frequency) < 1e-9,
            ErrorCode::kShapeMismatch, "CQT cache parameters differ from the requested ones");
  }
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(bins, frames);
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(float)));
  require(in.good(), ErrorCode::kUnsupportedCodec, "truncated CQT cache payload");
  CqtMatrix out;
  out.magnitudes = rows;
  out.frame_rate = 1.0 / hop_seconds;
  require((out.magnitudes.array() >= 0.0f).all() && out.magnitudes.allFinite(), ErrorCode::kShapeMismatch,
          "CQT cache holds negative or non-finite magnitudes");
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

CqtCache::CqtCache(std::filesystem::path directory, CqtParams params)
    : directory_(std::move(directory)), params_(params) {}

std::filesystem::path CqtCache::entry_path(const std::filesystem::path& audio_path, const AudioWindow& window) const {
  std::ostringstream key;
  key << params_.key_string() << ";start=" << window.start_seconds
      << ";dur=" << (window.duration_seconds ? *window.duration_seconds : -1.0);
  const std::string k = key.str();
  const std::uint64_t h = fnv1a64(k.data(), k.size(), file_content_hash(audio_path));
  std::ostringstream name;
  name << std::hex << std::setw(16) << std::setfill('0') << h << ".cqt";
  return directory_ / name.str();
}

CqtMatrix CqtCache::load(const std::filesystem::path& audio_path, AudioUse use, const AudioWindow& window) const {
  auto compute = [&] { return compute_cqt(load_audio(audio_path, params_.sample_rate, use, window), params_); };
  if (directory_.empty()) return compute();

  const auto entry = entry_path(audio_path, window);
  if (std::filesystem::exists(entry)) {
    CqtMatrix cqt = read_cqt_cache(entry, &params_);
    const double need = minimum_seconds(use);
    const int min_frames = need > 0 ? static_cast<int>(need * params_.sample_rate / params_.hop_samples()) + 1 : 1;
    require(cqt.frames() >= min_frames, ErrorCode::kEmptyAudio,
            audio_path.string() + " is too short for this use (cached)");
    return cqt;
  }
  CqtMatrix cqt = compute();
  write_cqt_cache(entry, cqt, params_);
  return cqt;
}

}  // namespace skey
