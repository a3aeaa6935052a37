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
#include <string>

#include "json.hpp"
#include "skey/constants.hpp"

namespace skey {

enum class Mode : int { kMajor = 0, kMinor = 1 };

struct KeyLabel {
  int tonic = 3;  // pitch class, 0 = A
  Mode mode = Mode::kMajor;

  friend bool operator==(const KeyLabel&, const KeyLabel&) = default;

  // 0..11 major, 12..23 minor.
  int index() const { return tonic + (mode == Mode::kMinor ? kBinsPerOctave : 0); }
  static KeyLabel from_index(int index);
  // Relative keys share a signature, identified by the major tonic.
  int signature() const { return mode == Mode::kMajor ? tonic : wrap12(tonic + 3); }
  KeyLabel transposed(int semitones) const { return {wrap12(tonic + semitones), mode}; }
  std::string to_string() const;  // "C major", "F# minor"
};

// Case-insensitive "<tonic>[accidentals][ :]<mode>", e.g. "C major", "db minor",
// "F#m", "Bb:min". Throws UnparsableLabel.
KeyLabel parse_key_label(const std::string& text);

const char* pitch_class_name(int pitch_class);

// Binds output rows of each ChromaTensor column to tonics. A row r of column c
// means tonic (r + offset[c]) mod 12 in the mode assigned to c.
struct CalibrationMap {
  int major_column = 0;
  std::array<int, 2> offset{0, 0};

  friend bool operator==(const CalibrationMap&, const CalibrationMap&) = default;

  int minor_column() const { return 1 - major_column; }
  Mode column_mode(int column) const { return column == major_column ? Mode::kMajor : Mode::kMinor; }
  KeyLabel label_for(int row, int column) const { return {wrap12(row + offset[column]), column_mode(column)}; }
  // Inverse: the (row, column) cell that means key.
  std::pair<int, int> cell_for(const KeyLabel& key) const;

  void validate() const;
  nlohmann::json to_json() const;
  static CalibrationMap from_json(const nlohmann::json& j);
};

}  // namespace skey
