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

#include "skey/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "skey/error.hpp"

namespace skey {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  if (base.empty()) return p.generic_string();
  std::error_code ec;
  auto rel = std::filesystem::relative(p, base, ec);
  return ec || rel.empty() ? p.generic_string() : rel.generic_string();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

nlohmann::json ManifestRecord::to_json(const std::filesystem::path& base) const {
  nlohmann::json j{{"id", id}};
  if (!audio_path.empty()) j["audio_path"] = relative_to(audio_path, base);
  if (!cqt_cache_path.empty()) j["cqt_cache_path"] = relative_to(cqt_cache_path, base);
  if (key) {
    j["key_label"] = key->to_string();
  } else if (!key_text.empty()) {
    j["key_label"] = key_text;
  }
  if (!genre.empty()) j["genre"] = genre;
  if (window.start_seconds != 0.0) j["start_s"] = window.start_seconds;
  if (window.duration_seconds) j["duration_s"] = *window.duration_seconds;
  if (first_30s) j["first_30s"] = true;
  return j;
}

Manifest read_manifest(const std::filesystem::path& path, bool require_labels) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open manifest " + path.string());
  Manifest manifest;
  manifest.path = path;
  const auto base = path.parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("_meta")) continue;
    require(j.contains("id"), ErrorCode::kInvalidArgument,
            path.string() + ":" + std::to_string(line_no) + ": record without id");
    ManifestRecord r;
    r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    r.audio_path = resolve(base, j.value("audio_path", std::string()));
    r.cqt_cache_path = resolve(base, j.value("cqt_cache_path", std::string()));
    require(!r.audio_path.empty() || !r.cqt_cache_path.empty(), ErrorCode::kInvalidArgument,
            "record " + r.id + " has neither audio_path nor cqt_cache_path");
    if (j.contains("key_label") && !j["key_label"].is_null()) {
      r.key_text = j["key_label"].get<std::string>();
      try {
        r.key = parse_key_label(r.key_text);
      } catch (const Error&) {
        if (require_labels) throw;
      }
    } else if (require_labels) {
      fail(ErrorCode::kMissingReference, "record " + r.id + " has no key_label");
    }
    if (j.contains("genre") && j["genre"].is_string()) r.genre = j["genre"].get<std::string>();
    r.window.start_seconds = j.value("start_s", 0.0);
    if (j.contains("duration_s") && !j["duration_s"].is_null()) r.window.duration_seconds = j["duration_s"].get<double>();
    r.first_30s = j.value("first_30s", false);
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records,
                    const nlohmann::json& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write manifest " + path.string());
  if (!meta.is_null()) out << nlohmann::json{{"_meta", meta}}.dump() << '\n';
  const auto base = path.parent_path();
  for (const auto& r : records) out << r.to_json(base).dump() << '\n';
  require(out.good(), ErrorCode::kIoError, "short write to " + path.string());
}

AudioWindow effective_window(const ManifestRecord& record, bool force_first_30s) {
  AudioWindow w = record.window;
  if (record.first_30s || force_first_30s) {
    w.start_seconds = 0.0;
    w.duration_seconds = std::min(w.duration_seconds.value_or(30.0), 30.0);
  }
  return w;
}

CqtMatrix load_record_cqt(const ManifestRecord& record, const CqtCache& cache, AudioUse use, bool force_first_30s) {
  const AudioWindow window = effective_window(record, force_first_30s);
  if (record.cqt_cache_path.empty()) return cache.load(record.audio_path, use, window);

  CqtMatrix full = read_cqt_cache(record.cqt_cache_path, &cache.params());
  const int start = std::clamp(static_cast<int>(std::lround(window.start_seconds * full.frame_rate)), 0, full.frames());
  int count = full.frames() - start;
  if (window.duration_seconds) {
    count = std::min(count, static_cast<int>(std::floor(*window.duration_seconds * full.frame_rate)) + 1);
  }
  CqtMatrix out;
  out.frame_rate = full.frame_rate;
  out.magnitudes = full.magnitudes.middleCols(start, count);
  const double need = minimum_seconds(use);
  const int min_frames = need > 0 ? static_cast<int>(need * full.frame_rate) + 1 : 1;
  require(out.frames() >= min_frames, ErrorCode::kEmptyAudio, "record " + record.id + " is too short for this use");
  return out;
}

nlohmann::json read_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open config " + path.string());
  nlohmann::json out = nlohmann::json::object();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '-', '_');
    try {
      out[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
        value = value.substr(1, value.size() - 2);
      }
      out[key] = value;
    }
  }
  return out;
}

}  // namespace skey
