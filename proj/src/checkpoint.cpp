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

#include "skey/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "skey/error.hpp"

namespace skey {

namespace {

constexpr char kMagic[8] = {'S', 'K', 'E', 'Y', 'C', 'K', 'P', 'T'};

struct Blob {
  std::string name;
  const float* data;
  std::size_t count;
};

std::vector<Blob> model_blobs(const ModelState& model, const ParamLayout& layout) {
  std::vector<Blob> blobs;
  for (std::size_t i = 0; i < layout.layers.size(); ++i) {
    const auto& l = layout.layers[i];
    const std::string prefix = "conv" + std::to_string(i);
    blobs.push_back({prefix + ".weight", model.params.data() + l.weight,
                     static_cast<std::size_t>(l.patch()) * static_cast<std::size_t>(l.cout)});
    blobs.push_back({prefix + ".bias", model.params.data() + l.bias, static_cast<std::size_t>(l.cout)});
  }
  blobs.push_back({"norm.gamma", model.params.data() + layout.gamma, kModes});
  blobs.push_back({"norm.beta", model.params.data() + layout.beta, kModes});
  return blobs;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const ParamLayout layout(ckpt.model.config);
  require(ckpt.model.params.size() == layout.total, ErrorCode::kShapeMismatch,
          "model parameters do not match its config");
  std::vector<Blob> blobs = model_blobs(ckpt.model, layout);
  if (ckpt.optimizer) {
    require(ckpt.optimizer->first_moment.size() == layout.total && ckpt.optimizer->second_moment.size() == layout.total,
            ErrorCode::kShapeMismatch, "optimizer state does not match the model");
    blobs.push_back({"adamw.m", ckpt.optimizer->first_moment.data(), layout.total});
    blobs.push_back({"adamw.v", ckpt.optimizer->second_moment.data(), layout.total});
  }

  nlohmann::json header;
  header["format"] = "skey-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = ckpt.model.config.to_json();
  header["step"] = ckpt.model.step;
  header["norm"] = {{"running_mean", ckpt.model.norm.running_mean}, {"running_var", ckpt.model.norm.running_var}};
  header["calibration"] = ckpt.model.calibration ? ckpt.model.calibration->to_json() : nlohmann::json(nullptr);
  header["metadata"] = ckpt.metadata;
  if (ckpt.optimizer) header["optimizer"] = {{"updates", ckpt.optimizer->updates}};
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& b : blobs) {
    table.push_back({{"name", b.name}, {"offset", offset}, {"count", b.count}});
    offset += b.count;
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), ErrorCode::kIoError, "cannot write " + tmp);
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t size = text.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&size), sizeof(size));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs) {
      out.write(reinterpret_cast<const char*>(b.data), static_cast<std::streamsize>(b.count * sizeof(float)));
    }
    require(out.good(), ErrorCode::kIoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t size = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&size), sizeof(size));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(magic)) == 0, ErrorCode::kUnsupportedCodec,
          path.string() + " is not an skey checkpoint");
  require(version == kCheckpointVersion, ErrorCode::kUnsupportedCodec,
          "unsupported checkpoint version " + std::to_string(version));
  require(size < (1u << 26), ErrorCode::kUnsupportedCodec, "checkpoint header too large");
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  require(in.good(), ErrorCode::kUnsupportedCodec, "truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kUnsupportedCodec, std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.model.config = ModelConfig::from_json(header.at("config"));
  ckpt.model.step = header.at("step").get<std::int64_t>();
  ckpt.model.norm.running_mean = header.at("norm").at("running_mean").get<std::array<double, kModes>>();
  ckpt.model.norm.running_var = header.at("norm").at("running_var").get<std::array<double, kModes>>();
  if (!header.at("calibration").is_null()) ckpt.model.calibration = CalibrationMap::from_json(header["calibration"]);
  ckpt.metadata = header.value("metadata", nlohmann::json::object());

  const ParamLayout layout(ckpt.model.config);
  ckpt.model.params.assign(layout.total, 0.0f);
  const bool has_optimizer = header.contains("optimizer");
  if (has_optimizer) {
    ckpt.optimizer = OptimizerState{};
    ckpt.optimizer->first_moment.assign(layout.total, 0.0f);
    ckpt.optimizer->second_moment.assign(layout.total, 0.0f);
    ckpt.optimizer->updates = header["optimizer"].at("updates").get<std::int64_t>();
  }

  // Blob destinations by name; the table order defines the payload order.
  std::vector<Blob> expected = model_blobs(ckpt.model, layout);
  if (has_optimizer) {
    expected.push_back({"adamw.m", ckpt.optimizer->first_moment.data(), layout.total});
    expected.push_back({"adamw.v", ckpt.optimizer->second_moment.data(), layout.total});
  }
  const auto& table = header.at("tensors");
  require(table.size() == expected.size(), ErrorCode::kShapeMismatch, "checkpoint tensor table does not match config");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& entry = table[i];
    const Blob& dst = expected[i];
    require(entry.at("name").get<std::string>() == dst.name && entry.at("count").get<std::size_t>() == dst.count,
            ErrorCode::kShapeMismatch, "checkpoint tensor " + entry.at("name").get<std::string>() + " mismatch");
    in.read(reinterpret_cast<char*>(const_cast<float*>(dst.data)),
            static_cast<std::streamsize>(dst.count * sizeof(float)));
    require(in.good(), ErrorCode::kUnsupportedCodec, "truncated checkpoint payload");
  }
  for (float p : ckpt.model.params) require(std::isfinite(p), ErrorCode::kNonFiniteActivation, "checkpoint holds non-finite weights");
  for (int m = 0; m < kModes; ++m) {
    require(std::isfinite(ckpt.model.norm.running_mean[m]) && std::isfinite(ckpt.model.norm.running_var[m]),
            ErrorCode::kNonFiniteActivation, "checkpoint holds non-finite norm statistics");
  }
  return ckpt;
}

}  // namespace skey
