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

#include <vector>

namespace skey {

struct DecodedAudio {
  std::vector<float> interleaved;
  int channels = 0;
  double sample_rate = 0.0;
};

// Native-rate, native-channel float decode through miniaudio. Returns false
// when no built-in decoder (WAV, FLAC, MP3) accepts the file.
bool decode_audio_file(const char* path, DecodedAudio* out);

}  // namespace skey
