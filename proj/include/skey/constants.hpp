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

namespace skey {

// Pitch-class convention shared by every module: bin 0 of the CQT is A0
// (27.5 Hz), so pitch class 0 = A, 3 = C.
inline constexpr int kBinsPerOctave = 12;
inline constexpr int kCqtBins = 99;
inline constexpr int kOctaves = 7;
inline constexpr int kCropBins = kBinsPerOctave * kOctaves;  // 84
inline constexpr int kMaxTransposition = kCqtBins - kCropBins;  // 15
inline constexpr int kModes = 2;
inline constexpr int kNumKeys = kBinsPerOctave * kModes;  // 24
inline constexpr double kLowestFrequencyHz = 27.5;

inline constexpr double kDefaultSampleRate = 22050.0;
inline constexpr double kSegmentSeconds = 15.0;

// Circle-of-fifths DFT frequency of the key distribution.
inline constexpr int kFifthsOmega = 7;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr int wrap12(int v) { return ((v % 12) + 12) % 12; }

}  // namespace skey
