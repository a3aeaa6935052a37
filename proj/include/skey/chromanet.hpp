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

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "skey/constants.hpp"
#include "skey/frontend.hpp"
#include "skey/keys.hpp"

namespace skey {

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

struct ConvLayerSpec {
  int kernel_freq = 3;
  int kernel_time = 3;
  int channels = 1;
  int dilation = 1;   // along frequency only
  int time_pool = 1;  // average pooling along time after the nonlinearity
};

struct ModelConfig {
  std::vector<ConvLayerSpec> layers;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  // Centre-tap weight added per channel path at initialization; 0 keeps
  // plain He-normal weights.
  double dirac_init = 0.0;
  // When > 0, the first layer's centre-time taps at the major-scale offsets
  // above each row start at scale_prior / 7 instead of the centre tap.
  double scale_prior = 0.0;
  double init_noise = 1.0;  // multiplies the He-normal standard deviation

  // Desk-scale default used by the CLI and the acceptance run (~50k weights).
  static ModelConfig compact();
  // 1 -> 32 -> 64 -> 64 -> 128 -> 128 -> 2 with dilations 1,1,2,2,4,4 (~0.28 M weights).
  static ModelConfig reference();

  void validate() const;
  std::size_t parameter_count() const;
  // Smallest input frame count that leaves every layer at least one frame.
  int min_frames() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Offsets of every tensor inside the flat parameter vector.
struct ParamLayout {
  struct Layer {
    std::size_t weight = 0;  // [cin*kf*kt x cout], column-major
    std::size_t bias = 0;
    int cin = 0;
    int cout = 0;
    ConvLayerSpec spec;
    int patch() const { return cin * spec.kernel_freq * spec.kernel_time; }
  };
  std::vector<Layer> layers;
  std::size_t gamma = 0;  // batch-norm scale, one per output channel
  std::size_t beta = 0;
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& config);
};

struct NormStats {
  std::array<double, kModes> running_mean{0.0, 0.0};
  std::array<double, kModes> running_var{1.0, 1.0};
};

struct ModelState {
  ModelConfig config;
  std::vector<float> params;
  NormStats norm;
  std::int64_t step = 0;
  std::optional<CalibrationMap> calibration;

  // He-normal conv weights, zero biases, unit BN scale.
  static ModelState initialize(const ModelConfig& config, std::uint64_t seed);
};

using FeatureMap = Eigen::Matrix<double, kCropBins, kModes>;
using ChromaTensor = Eigen::Matrix<double, kBinsPerOctave, kModes>;
using KeyDistribution = Eigen::Matrix<double, kBinsPerOctave, 1>;
using ModeDistribution = Eigen::Matrix<double, kModes, 1>;

// Per-sample record of the convolutional trunk needed by backprop.
template <typename T>
struct TrunkTrace {
  std::vector<MatrixX<T>> layer_inputs;  // [F*tin x cin], row index f*tin + t
  std::vector<int> layer_frames;         // tin per layer
  std::vector<MatrixX<T>> preactivations;
  FeatureMap output = FeatureMap::Zero();  // time-pooled, before batch norm
};

template <typename T>
TrunkTrace<T> trunk_forward(const ParamLayout& layout, std::span<const T> params, const MatrixX<T>& input);

// Accumulates d(loss)/d(params) for one sample into grad.
template <typename T>
void trunk_backward(const ParamLayout& layout, std::span<const T> params, const TrunkTrace<T>& trace,
                    const FeatureMap& d_output, std::span<T> grad);

struct BatchNormCache {
  std::vector<FeatureMap> normalized;
  std::array<double, kModes> inv_std{};
  bool training = false;
};

// Per-channel normalization over batch and frequency rows. Training mode
// uses batch statistics and updates the running ones when stats is given.
std::vector<FeatureMap> batch_norm_forward(std::span<const FeatureMap> inputs, std::span<const double> gamma,
                                           std::span<const double> beta, bool training, NormStats* stats,
                                           double momentum, double epsilon, BatchNormCache* cache);

// Returns d(loss)/d(inputs) and accumulates d(gamma), d(beta).
std::vector<FeatureMap> batch_norm_backward(std::span<const FeatureMap> d_outputs, std::span<const double> gamma,
                                            const BatchNormCache& cache, std::span<double> d_gamma,
                                            std::span<double> d_beta);

// Runs trunk, normalization and nothing else for a batch of crops. The batch
// shares batch-norm statistics when training.
template <typename T>
class BackboneBatch {
 public:
  BackboneBatch(const ParamLayout& layout, std::span<const T> params, int jobs = 1);

  std::vector<FeatureMap> forward(std::span<const MatrixX<T>> inputs, bool training, NormStats* stats,
                                  double momentum, double epsilon);
  // Full parameter gradient (trunk + batch-norm affine) for the last forward.
  std::vector<T> backward(std::span<const FeatureMap> d_features);

 private:
  const ParamLayout& layout_;
  std::span<const T> params_;
  int jobs_;
  std::vector<TrunkTrace<T>> traces_;
  BatchNormCache bn_cache_;
};

// Single-crop, float-path inference with running statistics.
FeatureMap backbone_forward(const CroppedCqt& x, const ModelState& state);
std::vector<FeatureMap> backbone_forward(std::span<const CroppedCqt> xs, const ModelState& state, bool training,
                                         NormStats* stats = nullptr, int jobs = 1);

// Network input: log-compressed magnitudes.
MatrixX<float> network_input(const CroppedCqt& x);

// z[q, m] = sum_j fm[12 j + q, m]; y = softmax over all 24 entries.
ChromaTensor structured_head(const FeatureMap& fm);
// d(loss)/d(fm) given y and d(loss)/d(y).
FeatureMap structured_head_backward(const ChromaTensor& y, const ChromaTensor& d_y);

struct Marginals {
  KeyDistribution key;    // lambda, sum over modes
  ModeDistribution mode;  // mu, sum over pitch classes
};
Marginals marginals(const ChromaTensor& y);

void validate_chroma(const ChromaTensor& y, double tolerance = 1e-6);

void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace skey
