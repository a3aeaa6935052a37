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

#include <fstream>
#include <random>

#include "doctest.h"
#include "skey/checkpoint.hpp"
#include "skey/chromanet.hpp"
#include "skey/error.hpp"
#include "skey/selftest.hpp"
#include "test_util.hpp"

using namespace skey;

namespace {

CroppedCqt random_crop(std::mt19937& gen, int frames) {
  std::uniform_real_distribution<float> d(0.0f, 0.05f);
  CroppedCqt x;
  x.magnitudes.resize(kCropBins, frames);
  for (Eigen::Index i = 0; i < x.magnitudes.size(); ++i) x.magnitudes(i) = d(gen);
  return x;
}

}  // namespace

TEST_CASE("model presets") {
  const ModelConfig compact = ModelConfig::compact();
  const ModelConfig reference = ModelConfig::reference();
  compact.validate();
  reference.validate();
  CHECK(reference.layers.size() == 6);
  CHECK(reference.layers.back().channels == kModes);
  CHECK(compact.layers.back().channels == kModes);
  CHECK(reference.parameter_count() > 200000);
  CHECK(reference.parameter_count() < 400000);
  CHECK(compact.parameter_count() < reference.parameter_count());
  CHECK(ParamLayout(compact).total == compact.parameter_count());
  CHECK(ModelConfig::from_json(compact.to_json()).to_json() == compact.to_json());
}

TEST_CASE("backbone output shape does not depend on the frame count") {
  const ModelState state = ModelState::initialize(ModelConfig::compact(), 1);
  std::mt19937 gen(2);
  for (int frames : {79, 158}) {
    const FeatureMap fm = backbone_forward(random_crop(gen, frames), state);
    CHECK(fm.rows() == kCropBins);
    CHECK(fm.cols() == kModes);
    CHECK(fm.allFinite());
  }
}

TEST_CASE("backbone rejects wrong row counts") {
  const ModelState state = ModelState::initialize(ModelConfig::compact(), 1);
  CroppedCqt bad;
  bad.magnitudes = Eigen::MatrixXf::Zero(83, 79);
  CHECK_THROWS_AS(backbone_forward(bad, state), Error);
}

TEST_CASE("initialization is seeded") {
  const auto a = ModelState::initialize(ModelConfig::compact(), 9);
  const auto b = ModelState::initialize(ModelConfig::compact(), 9);
  const auto c = ModelState::initialize(ModelConfig::compact(), 10);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);
}

TEST_CASE("structured head oracles") {
  const ChromaTensor uniform = structured_head(FeatureMap::Zero());
  for (int i = 0; i < uniform.size(); ++i) CHECK(uniform(i) == doctest::Approx(1.0 / 24.0));

  FeatureMap fm = FeatureMap::Zero();
  for (int j = 0; j < kOctaves; ++j) fm(12 * j + 5, 0) = 10.0;
  CHECK(structured_head(fm)(5, 0) > 0.999);

  std::mt19937 gen(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < fm.size(); ++i) fm(i) = n(gen);
  FeatureMap rolled;
  for (int p = 0; p < kCropBins; ++p) rolled.row((p + 12) % kCropBins) = fm.row(p);
  CHECK((structured_head(fm) - structured_head(rolled)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("marginals") {
  ChromaTensor y = ChromaTensor::Constant(1.0 / 24.0);
  Marginals m = marginals(y);
  for (int q = 0; q < 12; ++q) CHECK(m.key(q) == doctest::Approx(1.0 / 12.0));
  CHECK(m.mode(0) == doctest::Approx(0.5));

  y.setZero();
  y(3, 0) = 1.0;
  m = marginals(y);
  CHECK(m.key(3) == 1.0);
  CHECK(m.mode(0) == 1.0);

  FeatureMap fm;
  std::mt19937 gen(8);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < fm.size(); ++i) fm(i) = n(gen);
  m = marginals(structured_head(fm));
  CHECK(m.key.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.mode.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("head equivariance and backbone gradients") {
  const auto eq = selftest_head_equivariance(3);
  CHECK_MESSAGE(eq.passed, eq.detail);
  const auto grad = selftest_backbone_gradients(3);
  CHECK_MESSAGE(grad.passed, grad.detail);
}

TEST_CASE("float and double backbones agree") {
  const ModelState state = ModelState::initialize(ModelConfig::compact(), 6);
  const ParamLayout layout(state.config);
  std::mt19937 gen(1);
  std::vector<MatrixX<float>> xf;
  std::vector<MatrixX<double>> xd;
  for (int i = 0; i < 3; ++i) {
    xf.push_back(network_input(random_crop(gen, 79)));
    xd.push_back(xf.back().cast<double>());
  }
  std::vector<double> pd(state.params.begin(), state.params.end());
  BackboneBatch<float> bf(layout, state.params);
  BackboneBatch<double> bd(layout, pd);
  const auto f = bf.forward(xf, true, nullptr, 0.1, 1e-5);
  const auto d = bd.forward(xd, true, nullptr, 0.1, 1e-5);
  for (int i = 0; i < 3; ++i) CHECK((f[i] - d[i]).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("checkpoint round trip") {
  test::TempDir dir("ckpt");
  ModelState state = ModelState::initialize(ModelConfig::compact(), 2);
  state.step = 17;
  state.norm.running_mean = {0.25, -0.5};
  state.calibration = CalibrationMap{1, {4, 9}};
  OptimizerState opt;
  opt.first_moment.assign(state.params.size(), 0.5f);
  opt.second_moment.assign(state.params.size(), 0.25f);
  opt.updates = 17;
  save_checkpoint(dir / "m.skey", {state, opt, {{"seed", 5}}});

  const Checkpoint back = load_checkpoint(dir / "m.skey");
  CHECK(back.model.params == state.params);
  CHECK(back.model.step == 17);
  CHECK(back.model.norm.running_mean == state.norm.running_mean);
  CHECK(back.model.calibration == state.calibration);
  REQUIRE(back.optimizer);
  CHECK(back.optimizer->first_moment == opt.first_moment);
  CHECK(back.optimizer->updates == 17);
  CHECK(back.metadata["seed"] == 5);

  std::ofstream(dir / "bad.skey") << "NOTACKPT and some bytes";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.skey"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.skey"), Error);
}
