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
#include <array>
#include <random>

#include "skey/cqt.hpp"

namespace skey {

struct CqtSegment {
  Eigen::MatrixXf magnitudes;  // [99 x tau]
  double frame_rate = 0.0;
  int start_frame = 0;

  int frames() const { return static_cast<int>(magnitudes.cols()); }
};

struct CroppedCqt {
  Eigen::MatrixXf magnitudes;  // [84 x tau]
  int transposition_c = kMaxTransposition;

  int frames() const { return static_cast<int>(magnitudes.cols()); }
};

// Energies indexed by pitch class on the fixed output axis of a crop: entry q
// sums rows q, q+12, ..., q+72, and row 0 is labelled A (it is A0 at c = 15).
struct Pcp {
  std::array<double, kBinsPerOctave> energies{};

  double& operator[](int q) { return energies[static_cast<std::size_t>(wrap12(q))]; }
  double operator[](int q) const { return energies[static_cast<std::size_t>(wrap12(q))]; }
};

using Rng = std::mt19937_64;

struct SegmentPair {
  CqtSegment a;
  CqtSegment b;
};

// Two disjoint 15 s windows. Placement is uniform over all disjoint ordered
// placements; tracks under 31 s are split back to back.
SegmentPair extract_segment_pair(const CqtMatrix& cqt, Rng& rng, double segment_seconds = kSegmentSeconds);

CqtSegment segment_at(const CqtMatrix& cqt, int start_frame, int frames);

// Output row p is input row p + (15 - c): c = 15 keeps the bottom 84 bins,
// c = 0 the top 84, and c -> c + k moves content k rows up.
CroppedCqt transpose_crop(const CqtSegment& seg, int c);
CroppedCqt transpose_crop(const Eigen::MatrixXf& magnitudes99, int c);

// u[q] = 1/2 * sum_j sum_t (a[12j+q, t] + b[12j+q, t]).
Pcp pitch_class_profile(const CroppedCqt& a, const CroppedCqt& b);

}  // namespace skey
