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
#include <string>
#include <vector>

#include "json.hpp"

namespace skey {

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

SelftestResult selftest_cpsd_zero_set();
SelftestResult selftest_loss_gradients(std::uint64_t seed = 0);
SelftestResult selftest_backbone_gradients(std::uint64_t seed = 0);
SelftestResult selftest_head_equivariance(std::uint64_t seed = 0);
SelftestResult selftest_metric_fixtures();

std::vector<SelftestResult> run_selftest(std::uint64_t seed = 0);
nlohmann::json selftest_to_json(const std::vector<SelftestResult>& results);

// ||a - b|| / max(||a||, ||b||, 1e-12).
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace skey
