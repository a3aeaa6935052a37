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

#include "skey/frontend.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "skey/error.hpp"

namespace skey {

CqtSegment segment_at(const CqtMatrix& cqt, int start_frame, int frames) {
  require(cqt.bins() == kCqtBins, ErrorCode::kShapeMismatch, "CQT must have 99 bins");
  require(start_frame >= 0 && frames >= 1 && start_frame + frames <= cqt.frames(), ErrorCode::kTooShort,
          "segment exceeds the CQT extent");
  CqtSegment seg;
  seg.magnitudes = cqt.magnitudes.middleCols(start_frame, frames);
  seg.frame_rate = cqt.frame_rate;
  seg.start_frame = start_frame;
  return seg;
}

SegmentPair extract_segment_pair(const CqtMatrix& cqt, Rng& rng, double segment_seconds) {
  require(cqt.bins() == kCqtBins, ErrorCode::kShapeMismatch, "CQT must have 99 bins");
  require(cqt.frame_rate > 0, ErrorCode::kInvalidArgument, "CQT frame rate must be positive");
  const int tau = static_cast<int>(std::lround(segment_seconds * cqt.frame_rate));
  const int total = cqt.frames();
  require(total >= 2 * tau, ErrorCode::kTooShort,
          "need " + std::to_string(2 * tau) + " frames for two disjoint segments, have " + std::to_string(total));

  const int short_track_frames = static_cast<int>(31.0 * cqt.frame_rate);
  if (total < short_track_frames) return {segment_at(cqt, 0, tau), segment_at(cqt, tau, tau)};

  // Ordered pairs (sa, sb) with |sa - sb| >= tau, sampled uniformly.
  const std::int64_t positions = total - tau + 1;
  auto partners = [&](std::int64_t sa) {
    const std::int64_t below = std::max<std::int64_t>(0, sa - tau + 1);
    const std::int64_t above = std::max<std::int64_t>(0, positions - (sa + tau));
    return below + above;
  };
  std::int64_t count = 0;
  for (std::int64_t sa = 0; sa < positions; ++sa) count += partners(sa);
  std::int64_t pick = std::uniform_int_distribution<std::int64_t>(0, count - 1)(rng);
  for (std::int64_t sa = 0; sa < positions; ++sa) {
    const std::int64_t n = partners(sa);
    if (pick >= n) {
      pick -= n;
      continue;
    }
    const std::int64_t below = std::max<std::int64_t>(0, sa - tau + 1);
    const std::int64_t sb = pick < below ? pick : sa + tau + (pick - below);
    return {segment_at(cqt, static_cast<int>(sa), tau), segment_at(cqt, static_cast<int>(sb), tau)};
  }
  fail(ErrorCode::kInternal, "segment placement enumeration failed");
}

CroppedCqt transpose_crop(const Eigen::MatrixXf& magnitudes99, int c) {
  require(c >= 0 && c <= kMaxTransposition, ErrorCode::kInvalidTransposition,
          "transposition must lie in [0, 15], got " + std::to_string(c));
  require(magnitudes99.rows() == kCqtBins, ErrorCode::kShapeMismatch, "crop input must have 99 rows");
  CroppedCqt out;
  out.transposition_c = c;
  out.magnitudes = magnitudes99.middleRows(kMaxTransposition - c, kCropBins);
  return out;
}

CroppedCqt transpose_crop(const CqtSegment& seg, int c) { return transpose_crop(seg.magnitudes, c); }

Pcp pitch_class_profile(const CroppedCqt& a, const CroppedCqt& b) {
  require(a.magnitudes.rows() == kCropBins && b.magnitudes.rows() == kCropBins, ErrorCode::kShapeMismatch,
          "PCP inputs must have 84 rows");
  require(a.magnitudes.cols() == b.magnitudes.cols(), ErrorCode::kShapeMismatch,
          "PCP inputs must have equal frame counts");
  Pcp u;
  for (int j = 0; j < kOctaves; ++j) {
    for (int q = 0; q < kBinsPerOctave; ++q) {
      const int row = kBinsPerOctave * j + q;
      u.energies[static_cast<std::size_t>(q)] +=
          0.5 * (a.magnitudes.row(row).cast<double>().sum() + b.magnitudes.row(row).cast<double>().sum());
    }
  }
  return u;
}

}  // namespace skey
