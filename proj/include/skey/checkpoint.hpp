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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "skey/chromanet.hpp"

namespace skey {

// AdamW moment buffers, carried across checkpoints for exact resume.
struct OptimizerState {
  std::vector<float> first_moment;
  std::vector<float> second_moment;
  std::int64_t updates = 0;
};

struct Checkpoint {
  ModelState model;
  std::optional<OptimizerState> optimizer;
  nlohmann::json metadata = nlohmann::json::object();  // run info: train config, seed, version
};

// Container layout: 8-byte magic "SKEYCKPT", u32 format version, u64 header
// size, UTF-8 JSON header (config echo, step, norm statistics, calibration,
// tensor table), then the float32 tensors back to back.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline void save_model(const std::filesystem::path& path, const ModelState& model,
                       nlohmann::json metadata = nlohmann::json::object()) {
  save_checkpoint(path, {model, std::nullopt, std::move(metadata)});
}
inline ModelState load_model(const std::filesystem::path& path) { return load_checkpoint(path).model; }

}  // namespace skey
