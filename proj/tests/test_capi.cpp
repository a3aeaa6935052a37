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

// Exercises the shared library through its C header only.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "skey/skey.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  skey_string_free(s);
  return out;
}

std::filesystem::path fixtures() { return std::filesystem::path(SKEY_FIXTURES_DIR); }

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(skey_version()) > 0);
  CHECK(std::string(skey_status_name(SKEY_DEGENERATE_CALIBRATION)) == "DegenerateCalibration");
  CHECK(std::string(skey_status_name(SKEY_OK)) == "Ok");
}

TEST_CASE("parse_key reports errors through last_error") {
  int tonic = -1;
  int mode = -1;
  CHECK(skey_parse_key("db minor", &tonic, &mode) == SKEY_OK);
  CHECK(tonic == 4);
  CHECK(mode == 1);
  CHECK(skey_parse_key("H major", &tonic, &mode) == SKEY_UNPARSABLE_LABEL);
  CHECK(std::string(skey_last_error()).find("H major") != std::string::npos);
  CHECK(skey_parse_key(nullptr, &tonic, &mode) == SKEY_INVALID_ARGUMENT);
}

TEST_CASE("evaluate the six-record fixture") {
  char* report = nullptr;
  char* table = nullptr;
  const auto m = (fixtures() / "six_manifest.jsonl").string();
  const auto p = (fixtures() / "six_pred.jsonl").string();
  REQUIRE(skey_evaluate(m.c_str(), p.c_str(), nullptr, &report, &table) == SKEY_OK);
  const json j = json::parse(take(report));
  CHECK(j["mirex"].get<double>() == 50.0);
  CHECK(take(table).find("MIREX 50.0") != std::string::npos);

  CHECK(skey_evaluate(m.c_str(), "/nonexistent/pred.jsonl", nullptr, &report, nullptr) == SKEY_UNREADABLE_FILE);
  CHECK(skey_evaluate(m.c_str(), p.c_str(), "{not json", &report, nullptr) == SKEY_INVALID_ARGUMENT);
}

TEST_CASE("model lifecycle") {
  skey_model* model = nullptr;
  REQUIRE(skey_model_init("\"compact\"", 3, &model) == SKEY_OK);
  char* info = nullptr;
  REQUIRE(skey_model_info(model, &info) == SKEY_OK);
  json j = json::parse(take(info));
  CHECK(j["parameters"].get<int>() > 0);
  CHECK(j["calibration"].is_null());

  const auto dir = std::filesystem::temp_directory_path() / "skey_capi_model";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "m.skey").string();
  CHECK(skey_model_set_calibration(model, R"({"major_column": 1, "offset": [3, 4]})") == SKEY_OK);
  CHECK(skey_model_save(model, path.c_str(), R"({"note": "test"})") == SKEY_OK);
  skey_model_free(model);

  skey_model* back = nullptr;
  REQUIRE(skey_model_load(path.c_str(), &back) == SKEY_OK);
  REQUIRE(skey_model_info(back, &info) == SKEY_OK);
  j = json::parse(take(info));
  CHECK(j["calibration"]["major_column"] == 1);
  CHECK(j["metadata"]["note"] == "test");
  CHECK(skey_model_set_calibration(back, R"({"major_column": 2, "offset": [0, 0]})") == SKEY_INVALID_ARGUMENT);
  skey_model_free(back);

  CHECK(skey_model_load((dir / "missing.skey").string().c_str(), &back) == SKEY_UNREADABLE_FILE);
  CHECK(skey_model_init("\"giant\"", 0, &back) == SKEY_INVALID_ARGUMENT);
  std::filesystem::remove_all(dir);
}

TEST_CASE("uncalibrated models refuse to predict") {
  skey_model* model = nullptr;
  REQUIRE(skey_model_init(nullptr, 1, &model) == SKEY_OK);
  char* out = nullptr;
  CHECK(skey_predict_file(model, "whatever.wav", nullptr, &out) == SKEY_INVALID_ARGUMENT);
  skey_model_free(model);
}

TEST_CASE("selftest through the C interface") {
  char* report = nullptr;
  REQUIRE(skey_selftest(0, &report) == SKEY_OK);
  const json j = json::parse(take(report));
  CHECK(j["passed"].get<bool>());
  CHECK(j["suites"].size() == 5);
}

TEST_CASE("training rejects an empty manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "skey_capi_train";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "empty.jsonl") << "";
  skey_model* model = nullptr;
  char* summary = nullptr;
  CHECK(skey_train((dir / "empty.jsonl").string().c_str(), R"({"epochs": 1})", nullptr, nullptr, nullptr, &model,
                   &summary) == SKEY_EMPTY_CORPUS);
  CHECK(skey_train((dir / "empty.jsonl").string().c_str(), R"({"epochs": 0})", nullptr, nullptr, nullptr, &model,
                   &summary) == SKEY_INVALID_ARGUMENT);
  std::filesystem::remove_all(dir);
}
