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

#include "skey/keys.hpp"

#include <algorithm>
#include <cctype>

#include "skey/error.hpp"

namespace skey {

namespace {

constexpr const char* kNames[kBinsPerOctave] = {"A", "Bb", "B", "C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab"};

std::string lower_ascii(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char ch : s) out.push_back(static_cast<char>(std::tolower(ch)));
  return out;
}

}  // namespace

const char* pitch_class_name(int pitch_class) { return kNames[wrap12(pitch_class)]; }

KeyLabel KeyLabel::from_index(int index) {
  require(index >= 0 && index < kNumKeys, ErrorCode::kInvalidArgument, "key index out of range");
  return {index % kBinsPerOctave, index < kBinsPerOctave ? Mode::kMajor : Mode::kMinor};
}

std::string KeyLabel::to_string() const {
  return std::string(pitch_class_name(tonic)) + (mode == Mode::kMajor ? " major" : " minor");
}

KeyLabel parse_key_label(const std::string& text) {
  auto bad = [&]() -> KeyLabel { fail(ErrorCode::kUnparsableLabel, "cannot parse key label '" + text + "'"); };

  // Replace the UTF-8 sharp and flat signs by ASCII before case folding.
  std::string s = text;
  for (auto [glyph, ascii] : {std::pair<std::string, std::string>{"♯", "#"}, {"♭", "b"}}) {
    for (std::size_t pos; (pos = s.find(glyph)) != std::string::npos;) s.replace(pos, glyph.size(), ascii);
  }
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return bad();
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);

  static constexpr int kLetterClass[7] = {0, 2, 3, 5, 7, 8, 10};  // A B C D E F G
  const char letter = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  if (letter < 'a' || letter > 'g') return bad();
  int tonic = kLetterClass[letter - 'a'];

  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    if (s[i] == '#') {
      ++tonic;
    } else if (s[i] == 'b' || s[i] == 'B') {
      --tonic;
    } else {
      break;
    }
  }

  std::string rest = s.substr(i);
  const bool spaced = !rest.empty() && (rest[0] == ' ' || rest[0] == ':' || rest[0] == '\t' || rest[0] == '_');
  const auto mode_start = rest.find_first_not_of(" :\t_");
  rest = mode_start == std::string::npos ? std::string{} : rest.substr(mode_start);
  const std::string word = lower_ascii(rest);

  Mode mode;
  if (word == "major" || word == "maj") {
    mode = Mode::kMajor;
  } else if (word == "minor" || word == "min") {
    mode = Mode::kMinor;
  } else if (rest == "m") {
    mode = Mode::kMinor;  // "Am", "A m"
  } else if (rest == "M" && !spaced) {
    mode = Mode::kMajor;  // "AM"
  } else {
    return bad();
  }
  return {wrap12(tonic), mode};
}

std::pair<int, int> CalibrationMap::cell_for(const KeyLabel& key) const {
  const int column = key.mode == Mode::kMajor ? major_column : minor_column();
  return {wrap12(key.tonic - offset[static_cast<std::size_t>(column)]), column};
}

void CalibrationMap::validate() const {
  require(major_column == 0 || major_column == 1, ErrorCode::kInvalidArgument, "major_column must be 0 or 1");
  for (int o : offset) require(o >= 0 && o < kBinsPerOctave, ErrorCode::kInvalidArgument, "offset out of range");
}

nlohmann::json CalibrationMap::to_json() const {
  return {{"major_column", major_column}, {"offset", {offset[0], offset[1]}}};
}

CalibrationMap CalibrationMap::from_json(const nlohmann::json& j) {
  CalibrationMap m;
  m.major_column = j.at("major_column").get<int>();
  m.offset = {j.at("offset").at(0).get<int>(), j.at("offset").at(1).get<int>()};
  m.validate();
  return m;
}

}  // namespace skey
