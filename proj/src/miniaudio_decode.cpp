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

#define MA_NO_DEVICE_IO
#define MA_NO_THREADING
#define MA_NO_ENCODING
#define MA_NO_GENERATION
#define MA_NO_RESOURCE_MANAGER
#define MA_NO_NODE_GRAPH
#define MA_NO_ENGINE
#define MINIAUDIO_IMPLEMENTATION
#include "miniaudio.h"

#include "miniaudio_decode.h"

namespace skey {

bool decode_audio_file(const char* path, DecodedAudio* out) {
  ma_decoder_config config = ma_decoder_config_init(ma_format_f32, 0, 0);
  ma_decoder decoder;
  if (ma_decoder_init_file(path, &config, &decoder) != MA_SUCCESS) return false;

  out->channels = static_cast<int>(decoder.outputChannels);
  out->sample_rate = static_cast<double>(decoder.outputSampleRate);
  out->interleaved.clear();

  constexpr ma_uint64 kChunk = 16384;
  std::vector<float> buffer(kChunk * decoder.outputChannels);
  for (;;) {
    ma_uint64 frames_read = 0;
    const ma_result res = ma_decoder_read_pcm_frames(&decoder, buffer.data(), kChunk, &frames_read);
    out->interleaved.insert(out->interleaved.end(), buffer.begin(),
                            buffer.begin() + static_cast<std::ptrdiff_t>(frames_read * decoder.outputChannels));
    if (res != MA_SUCCESS || frames_read < kChunk) break;
  }
  ma_decoder_uninit(&decoder);
  return out->channels > 0 && out->sample_rate > 0;
}

}  // namespace skey
