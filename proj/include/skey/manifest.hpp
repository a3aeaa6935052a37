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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skey/cqt.hpp"
#include "skey/keys.hpp"

namespace skey {

// One JSON-lines record. Relative paths resolve against the manifest's
// directory.
struct ManifestRecord {
  std::string id;
  std::filesystem::path audio_path;
  std::filesystem::path cqt_cache_path;
  std::optional<KeyLabel> key;
  std::string key_text;  // label as written, for error messages
  std::string genre;
  AudioWindow window;
  bool first_30s = false;

  nlohmann::json to_json(const std::filesystem::path& base = {}) const;
};

struct Manifest {
  std::filesystem::path path;
  std::vector<ManifestRecord> records;
};

// Lines with a "_meta" key are metadata and skipped. Unparsable key labels
// raise UnparsableLabel when require_labels is set and are dropped otherwise.
Manifest read_manifest(const std::filesystem::path& path, bool require_labels = false);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records,
                    const nlohmann::json& meta = nullptr);

// Effective window: the record's start/duration, clipped to 30 s when either
// the record or force_first_30s asks for it.
AudioWindow effective_window(const ManifestRecord& record, bool force_first_30s = false);

// CQT for a record, from its cached matrix or by decoding its audio.
CqtMatrix load_record_cqt(const ManifestRecord& record, const CqtCache& cache, AudioUse use,
                          bool force_first_30s = false);

// Minimal reader for "key = value" config files: '#' and ';' comments,
// [section] headers ignored, values parsed as JSON when possible.
nlohmann::json read_flat_config(const std::filesystem::path& path);

}  // namespace skey
