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

#include "skey/chromanet.hpp"

#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "skey/error.hpp"

namespace skey {

ModelConfig ModelConfig::compact() {
  ModelConfig c;
  c.layers = {
      {3, 3, 16, 1, 3}, {3, 3, 32, 1, 2}, {3, 3, 32, 2, 1}, {3, 3, 48, 2, 1}, {3, 3, 48, 4, 1}, {3, 3, 2, 4, 1},
  };
  c.dirac_init = 1.0;
  return c;
}

ModelConfig ModelConfig::reference() {
  ModelConfig c;
  c.layers = {
      {3, 3, 32, 1, 1}, {3, 3, 64, 1, 1}, {3, 3, 64, 2, 1}, {3, 3, 128, 2, 1}, {3, 3, 128, 4, 1}, {3, 3, 2, 4, 1},
  };
  return c;
}

void ModelConfig::validate() const {
  require(!layers.empty(), ErrorCode::kInvalidArgument, "model needs at least one conv layer");
  require(layers.back().channels == kModes, ErrorCode::kInvalidArgument, "final conv layer must have 2 channels");
  for (const auto& l : layers) {
    require(l.kernel_freq >= 1 && l.kernel_freq % 2 == 1, ErrorCode::kInvalidArgument,
            "frequency kernels must have odd height");
    require(l.kernel_time >= 1 && l.channels >= 1 && l.dilation >= 1 && l.time_pool >= 1,
            ErrorCode::kInvalidArgument, "conv layer fields must be positive");
  }
  require(layers.back().time_pool == 1, ErrorCode::kInvalidArgument, "final layer is averaged over time, not pooled");
  require(bn_epsilon > 0 && bn_momentum > 0 && bn_momentum <= 1, ErrorCode::kInvalidArgument,
          "batch-norm epsilon/momentum out of range");
}

std::size_t ModelConfig::parameter_count() const { return ParamLayout(*this).total; }

int ModelConfig::min_frames() const {
  int need = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) need = need * it->time_pool + it->kernel_time - 1;
  return need;
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& l : layers) {
    ls.push_back({{"kernel_freq", l.kernel_freq},
                  {"kernel_time", l.kernel_time},
                  {"channels", l.channels},
                  {"dilation", l.dilation},
                  {"time_pool", l.time_pool}});
  }
  return {{"layers", ls}, {"bn_momentum", bn_momentum}, {"bn_epsilon", bn_epsilon}, {"dirac_init", dirac_init}, {"scale_prior", scale_prior}, {"init_noise", init_noise}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& l : j.at("layers")) {
    c.layers.push_back({l.at("kernel_freq").get<int>(), l.at("kernel_time").get<int>(), l.at("channels").get<int>(),
                        l.at("dilation").get<int>(), l.value("time_pool", 1)});
  }
  c.bn_momentum = j.value("bn_momentum", 0.1);
  c.bn_epsilon = j.value("bn_epsilon", 1e-5);
  c.dirac_init = j.value("dirac_init", 0.0);
  c.scale_prior = j.value("scale_prior", 0.0);
  c.init_noise = j.value("init_noise", 1.0);
  c.validate();
  return c;
}

ParamLayout::ParamLayout(const ModelConfig& config) {
  config.validate();
  std::size_t offset = 0;
  int cin = 1;
  for (const auto& spec : config.layers) {
    Layer l;
    l.cin = cin;
    l.cout = spec.channels;
    l.spec = spec;
    l.weight = offset;
    offset += static_cast<std::size_t>(l.patch()) * static_cast<std::size_t>(l.cout);
    l.bias = offset;
    offset += static_cast<std::size_t>(l.cout);
    layers.push_back(l);
    cin = spec.channels;
  }
  gamma = offset;
  offset += kModes;
  beta = offset;
  offset += kModes;
  total = offset;
}

ModelState ModelState::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelState s;
  s.config = config;
  const ParamLayout layout(config);
  s.params.assign(layout.total, 0.0f);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < layout.layers.size(); ++i) {
    const auto& l = layout.layers[i];
    const bool last = i + 1 == layout.layers.size();
    const double stddev = config.init_noise * std::sqrt((last ? 1.0 : 2.0) / l.patch());
    std::normal_distribution<double> dist(0.0, stddev);
    const std::size_t n = static_cast<std::size_t>(l.patch()) * static_cast<std::size_t>(l.cout);
    for (std::size_t k = 0; k < n; ++k) s.params[l.weight + k] = static_cast<float>(dist(rng));
    if (i == 0 && config.scale_prior > 0.0) {
      const int kf = l.spec.kernel_freq;
      const int kt = l.spec.kernel_time;
      for (int offset : {0, 2, 4, 5, 7, 9, 11}) {
        const int a = kf / 2 + offset / l.spec.dilation;
        if (offset % l.spec.dilation != 0 || a >= kf) continue;
        for (int co = 0; co < l.cout; ++co) {
          s.params[l.weight + static_cast<std::size_t>(co) * static_cast<std::size_t>(l.patch()) +
                   static_cast<std::size_t>(a * kt + kt / 2)] += static_cast<float>(config.scale_prior / 7.0);
        }
      }
    } else if (config.dirac_init != 0.0) {
      // Output channel co reads input channels ci with ci = co mod cin or
      // co = ci mod cout at the kernel centre.
      const int centre = (l.spec.kernel_freq / 2) * l.spec.kernel_time + l.spec.kernel_time / 2;
      const int fan = std::max(1, l.cin / l.cout);
      for (int co = 0; co < l.cout; ++co) {
        for (int ci = 0; ci < l.cin; ++ci) {
          if (ci != co % l.cin && co != ci % l.cout) continue;
          const std::size_t row = static_cast<std::size_t>(ci * l.spec.kernel_freq * l.spec.kernel_time + centre);
          s.params[l.weight + static_cast<std::size_t>(co) * static_cast<std::size_t>(l.patch()) + row] +=
              static_cast<float>(config.dirac_init / fan);
        }
      }
    }
  }
  for (int m = 0; m < kModes; ++m) s.params[layout.gamma + static_cast<std::size_t>(m)] = 1.0f;
  return s;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min(jobs, count);
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

template <typename T>
using MapConstMatrix = Eigen::Map<const MatrixX<T>>;
template <typename T>
using MapMatrix = Eigen::Map<MatrixX<T>>;

// Patch matrix [F*tout x cin*kf*kt]; frequency is zero-padded ("same"),
// time is valid.
template <typename T>
MatrixX<T> im2col(const MatrixX<T>& x, int tin, const ParamLayout::Layer& l) {
  const int kf = l.spec.kernel_freq;
  const int kt = l.spec.kernel_time;
  const int tout = tin - kt + 1;
  MatrixX<T> col = MatrixX<T>::Zero(static_cast<Eigen::Index>(kCropBins) * tout, l.patch());
  for (int ci = 0; ci < l.cin; ++ci) {
    for (int a = 0; a < kf; ++a) {
      const int shift = (a - kf / 2) * l.spec.dilation;
      for (int b = 0; b < kt; ++b) {
        const int r = (ci * kf + a) * kt + b;
        for (int f = 0; f < kCropBins; ++f) {
          const int fs = f + shift;
          if (fs < 0 || fs >= kCropBins) continue;
          col.col(r).segment(static_cast<Eigen::Index>(f) * tout, tout) =
              x.col(ci).segment(static_cast<Eigen::Index>(fs) * tin + b, tout);
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(const MatrixX<T>& dcol, int tin, const ParamLayout::Layer& l, MatrixX<T>& dx) {
  const int kf = l.spec.kernel_freq;
  const int kt = l.spec.kernel_time;
  const int tout = tin - kt + 1;
  for (int ci = 0; ci < l.cin; ++ci) {
    for (int a = 0; a < kf; ++a) {
      const int shift = (a - kf / 2) * l.spec.dilation;
      for (int b = 0; b < kt; ++b) {
        const int r = (ci * kf + a) * kt + b;
        for (int f = 0; f < kCropBins; ++f) {
          const int fs = f + shift;
          if (fs < 0 || fs >= kCropBins) continue;
          dx.col(ci).segment(static_cast<Eigen::Index>(fs) * tin + b, tout) +=
              dcol.col(r).segment(static_cast<Eigen::Index>(f) * tout, tout);
        }
      }
    }
  }
}

template <typename T>
MapConstMatrix<T> weights(const ParamLayout::Layer& l, std::span<const T> params) {
  return MapConstMatrix<T>(params.data() + l.weight, l.patch(), l.cout);
}

}  // namespace

template <typename T>
TrunkTrace<T> trunk_forward(const ParamLayout& layout, std::span<const T> params, const MatrixX<T>& input) {
  require(params.size() == layout.total, ErrorCode::kShapeMismatch, "parameter vector does not match the model");
  require(input.rows() == kCropBins, ErrorCode::kShapeMismatch,
          "backbone input must have 84 rows, got " + std::to_string(input.rows()));
  int tin = static_cast<int>(input.cols());
  int need = 1;
  for (auto it = layout.layers.rbegin(); it != layout.layers.rend(); ++it) {
    need = need * it->spec.time_pool + it->spec.kernel_time - 1;
  }
  require(tin >= need, ErrorCode::kShapeMismatch,
          "backbone input needs at least " + std::to_string(need) + " frames, got " + std::to_string(tin));

  TrunkTrace<T> trace;
  // [84 x tin] -> [84*tin x 1] with row index f*tin + t.
  MatrixX<T> x(static_cast<Eigen::Index>(kCropBins) * tin, 1);
  for (int f = 0; f < kCropBins; ++f) x.col(0).segment(static_cast<Eigen::Index>(f) * tin, tin) = input.row(f).transpose();

  for (std::size_t li = 0; li < layout.layers.size(); ++li) {
    const auto& l = layout.layers[li];
    const bool last = li + 1 == layout.layers.size();
    const int tout = tin - l.spec.kernel_time + 1;
    MatrixX<T> y = im2col(x, tin, l) * weights(l, params);
    y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(params.data() + l.bias, l.cout);

    trace.layer_inputs.push_back(std::move(x));
    trace.layer_frames.push_back(tin);

    if (last) {
      for (int co = 0; co < kModes; ++co) {
        for (int f = 0; f < kCropBins; ++f) {
          trace.output(f, co) =
              static_cast<double>(y.col(co).segment(static_cast<Eigen::Index>(f) * tout, tout).sum()) / tout;
        }
      }
      trace.preactivations.push_back(MatrixX<T>());
      break;
    }

    const int pool = l.spec.time_pool;
    const int tp = tout / pool;
    MatrixX<T> next(static_cast<Eigen::Index>(kCropBins) * tp, l.cout);
    for (int co = 0; co < l.cout; ++co) {
      for (int f = 0; f < kCropBins; ++f) {
        for (int t = 0; t < tp; ++t) {
          T acc = 0;
          for (int s = 0; s < pool; ++s) acc += std::max(T(0), y(static_cast<Eigen::Index>(f) * tout + t * pool + s, co));
          next(static_cast<Eigen::Index>(f) * tp + t, co) = acc / static_cast<T>(pool);
        }
      }
    }
    trace.preactivations.push_back(std::move(y));
    x = std::move(next);
    tin = tp;
  }
  require(trace.output.allFinite(), ErrorCode::kNonFiniteActivation, "backbone produced non-finite activations");
  return trace;
}

template <typename T>
void trunk_backward(const ParamLayout& layout, std::span<const T> params, const TrunkTrace<T>& trace,
                    const FeatureMap& d_output, std::span<T> grad) {
  require(grad.size() == layout.total, ErrorCode::kShapeMismatch, "gradient vector does not match the model");
  MatrixX<T> d_next;  // gradient w.r.t. the pooled output of the current layer
  for (std::size_t li = layout.layers.size(); li-- > 0;) {
    const auto& l = layout.layers[li];
    const bool last = li + 1 == layout.layers.size();
    const int tin = trace.layer_frames[li];
    const int tout = tin - l.spec.kernel_time + 1;
    MatrixX<T> dy(static_cast<Eigen::Index>(kCropBins) * tout, l.cout);

    if (last) {
      for (int co = 0; co < kModes; ++co) {
        for (int f = 0; f < kCropBins; ++f) {
          dy.col(co).segment(static_cast<Eigen::Index>(f) * tout, tout)
              .setConstant(static_cast<T>(d_output(f, co) / tout));
        }
      }
    } else {
      const MatrixX<T>& pre = trace.preactivations[li];
      const int pool = l.spec.time_pool;
      const int tp = tout / pool;
      dy.setZero();
      for (int co = 0; co < l.cout; ++co) {
        for (int f = 0; f < kCropBins; ++f) {
          for (int t = 0; t < tp; ++t) {
            const T g = d_next(static_cast<Eigen::Index>(f) * tp + t, co) / static_cast<T>(pool);
            for (int s = 0; s < pool; ++s) {
              const Eigen::Index row = static_cast<Eigen::Index>(f) * tout + t * pool + s;
              if (pre(row, co) > T(0)) dy(row, co) = g;
            }
          }
        }
      }
    }

    const MatrixX<T> col = im2col(trace.layer_inputs[li], tin, l);
    MapMatrix<T> dw(grad.data() + l.weight, l.patch(), l.cout);
    dw.noalias() += col.transpose() * dy;
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grad.data() + l.bias, l.cout) += dy.colwise().sum();

    if (li == 0) break;
    const MatrixX<T> dcol = dy * weights(l, params).transpose();
    d_next.setZero(static_cast<Eigen::Index>(kCropBins) * tin, l.cin);
    col2im_add(dcol, tin, l, d_next);
  }
}

std::vector<FeatureMap> batch_norm_forward(std::span<const FeatureMap> inputs, std::span<const double> gamma,
                                           std::span<const double> beta, bool training, NormStats* stats,
                                           double momentum, double epsilon, BatchNormCache* cache) {
  require(!inputs.empty(), ErrorCode::kEmptyBatch, "batch norm needs at least one feature map");
  const double n = static_cast<double>(inputs.size()) * kCropBins;
  std::array<double, kModes> mean{};
  std::array<double, kModes> var{};
  for (int m = 0; m < kModes; ++m) {
    if (training) {
      double s = 0.0;
      for (const auto& fm : inputs) s += fm.col(m).sum();
      mean[m] = s / n;
      double v = 0.0;
      for (const auto& fm : inputs) v += (fm.col(m).array() - mean[m]).square().sum();
      var[m] = v / n;
      if (stats) {
        stats->running_mean[m] = (1 - momentum) * stats->running_mean[m] + momentum * mean[m];
        const double unbiased = n > 1 ? var[m] * n / (n - 1) : var[m];
        stats->running_var[m] = (1 - momentum) * stats->running_var[m] + momentum * unbiased;
      }
    } else {
      require(stats != nullptr, ErrorCode::kInvalidArgument, "inference batch norm needs running statistics");
      mean[m] = stats->running_mean[m];
      var[m] = stats->running_var[m];
    }
  }
  BatchNormCache local;
  BatchNormCache& c = cache ? *cache : local;
  c.training = training;
  c.normalized.resize(inputs.size());
  std::vector<FeatureMap> out(inputs.size());
  for (int m = 0; m < kModes; ++m) c.inv_std[m] = 1.0 / std::sqrt(var[m] + epsilon);
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    for (int m = 0; m < kModes; ++m) {
      c.normalized[b].col(m) = (inputs[b].col(m).array() - mean[m]) * c.inv_std[m];
      out[b].col(m) = c.normalized[b].col(m).array() * gamma[m] + beta[m];
    }
  }
  return out;
}

std::vector<FeatureMap> batch_norm_backward(std::span<const FeatureMap> d_outputs, std::span<const double> gamma,
                                            const BatchNormCache& cache, std::span<double> d_gamma,
                                            std::span<double> d_beta) {
  require(d_outputs.size() == cache.normalized.size(), ErrorCode::kShapeMismatch,
          "batch-norm backward batch size mismatch");
  const double n = static_cast<double>(d_outputs.size()) * kCropBins;
  std::vector<FeatureMap> d_in(d_outputs.size());
  for (int m = 0; m < kModes; ++m) {
    double sum_d = 0.0;
    double sum_dx = 0.0;
    for (std::size_t b = 0; b < d_outputs.size(); ++b) {
      d_gamma[m] += (d_outputs[b].col(m).array() * cache.normalized[b].col(m).array()).sum();
      d_beta[m] += d_outputs[b].col(m).sum();
      sum_d += d_outputs[b].col(m).sum() * gamma[m];
      sum_dx += (d_outputs[b].col(m).array() * cache.normalized[b].col(m).array()).sum() * gamma[m];
    }
    for (std::size_t b = 0; b < d_outputs.size(); ++b) {
      const auto dxhat = d_outputs[b].col(m).array() * gamma[m];
      if (cache.training) {
        d_in[b].col(m) = cache.inv_std[m] / n * (n * dxhat - sum_d - cache.normalized[b].col(m).array() * sum_dx);
      } else {
        d_in[b].col(m) = dxhat * cache.inv_std[m];
      }
    }
  }
  return d_in;
}

template <typename T>
BackboneBatch<T>::BackboneBatch(const ParamLayout& layout, std::span<const T> params, int jobs)
    : layout_(layout), params_(params), jobs_(jobs) {}

template <typename T>
std::vector<FeatureMap> BackboneBatch<T>::forward(std::span<const MatrixX<T>> inputs, bool training,
                                                  NormStats* stats, double momentum, double epsilon) {
  traces_.assign(inputs.size(), TrunkTrace<T>{});
  parallel_for(static_cast<int>(inputs.size()), jobs_,
               [&](int i) { traces_[static_cast<std::size_t>(i)] = trunk_forward<T>(layout_, params_, inputs[static_cast<std::size_t>(i)]); });
  std::vector<FeatureMap> pre(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) pre[i] = traces_[i].output;
  const std::array<double, kModes> gamma{static_cast<double>(params_[layout_.gamma]),
                                         static_cast<double>(params_[layout_.gamma + 1])};
  const std::array<double, kModes> beta{static_cast<double>(params_[layout_.beta]),
                                        static_cast<double>(params_[layout_.beta + 1])};
  return batch_norm_forward(pre, gamma, beta, training, stats, momentum, epsilon, &bn_cache_);
}

template <typename T>
std::vector<T> BackboneBatch<T>::backward(std::span<const FeatureMap> d_features) {
  const std::array<double, kModes> gamma{static_cast<double>(params_[layout_.gamma]),
                                         static_cast<double>(params_[layout_.gamma + 1])};
  std::array<double, kModes> d_gamma{};
  std::array<double, kModes> d_beta{};
  const std::vector<FeatureMap> d_pre = batch_norm_backward(d_features, gamma, bn_cache_, d_gamma, d_beta);

  std::vector<std::vector<T>> per_sample(traces_.size());
  parallel_for(static_cast<int>(traces_.size()), jobs_, [&](int i) {
    auto& g = per_sample[static_cast<std::size_t>(i)];
    g.assign(layout_.total, T(0));
    trunk_backward<T>(layout_, params_, traces_[static_cast<std::size_t>(i)], d_pre[static_cast<std::size_t>(i)], g);
  });
  // Fixed reduction order keeps gradients independent of the job count.
  std::vector<T> grad(layout_.total, T(0));
  for (const auto& g : per_sample) {
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(grad.data(), static_cast<Eigen::Index>(grad.size())) +=
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(g.data(), static_cast<Eigen::Index>(g.size()));
  }
  for (int m = 0; m < kModes; ++m) {
    grad[layout_.gamma + static_cast<std::size_t>(m)] += static_cast<T>(d_gamma[m]);
    grad[layout_.beta + static_cast<std::size_t>(m)] += static_cast<T>(d_beta[m]);
  }
  return grad;
}

template TrunkTrace<float> trunk_forward<float>(const ParamLayout&, std::span<const float>, const MatrixX<float>&);
template TrunkTrace<double> trunk_forward<double>(const ParamLayout&, std::span<const double>, const MatrixX<double>&);
template void trunk_backward<float>(const ParamLayout&, std::span<const float>, const TrunkTrace<float>&,
                                    const FeatureMap&, std::span<float>);
template void trunk_backward<double>(const ParamLayout&, std::span<const double>, const TrunkTrace<double>&,
                                     const FeatureMap&, std::span<double>);
template class BackboneBatch<float>;
template class BackboneBatch<double>;

MatrixX<float> network_input(const CroppedCqt& x) {
  require(x.magnitudes.rows() == kCropBins, ErrorCode::kShapeMismatch, "network input must have 84 rows");
  return compress_magnitudes(x.magnitudes);
}

std::vector<FeatureMap> backbone_forward(std::span<const CroppedCqt> xs, const ModelState& state, bool training,
                                         NormStats* stats, int jobs) {
  const ParamLayout layout(state.config);
  std::vector<MatrixX<float>> inputs;
  inputs.reserve(xs.size());
  for (const auto& x : xs) inputs.push_back(network_input(x));
  BackboneBatch<float> batch(layout, state.params, jobs);
  NormStats frozen = state.norm;
  NormStats* use = training ? stats : &frozen;
  return batch.forward(inputs, training, use, state.config.bn_momentum, state.config.bn_epsilon);
}

FeatureMap backbone_forward(const CroppedCqt& x, const ModelState& state) {
  return backbone_forward(std::span<const CroppedCqt>(&x, 1), state, false).front();
}

ChromaTensor structured_head(const FeatureMap& fm) {
  ChromaTensor z = ChromaTensor::Zero();
  for (int j = 0; j < kOctaves; ++j) z += fm.middleRows<kBinsPerOctave>(j * kBinsPerOctave);
  const double peak = z.maxCoeff();
  ChromaTensor y = (z.array() - peak).exp().matrix();
  y /= y.sum();
  return y;
}

FeatureMap structured_head_backward(const ChromaTensor& y, const ChromaTensor& d_y) {
  const double inner = (y.array() * d_y.array()).sum();
  const ChromaTensor dz = (y.array() * (d_y.array() - inner)).matrix();
  FeatureMap d_fm;
  for (int j = 0; j < kOctaves; ++j) d_fm.middleRows<kBinsPerOctave>(j * kBinsPerOctave) = dz;
  return d_fm;
}

Marginals marginals(const ChromaTensor& y) { return {y.rowwise().sum(), y.colwise().sum().transpose()}; }

void validate_chroma(const ChromaTensor& y, double tolerance) {
  require((y.array() >= 0.0).all() && y.allFinite(), ErrorCode::kInvalidArgument, "chroma tensor must be nonnegative");
  require(std::abs(y.sum() - 1.0) <= tolerance, ErrorCode::kInvalidArgument, "chroma tensor must sum to 1");
}

}  // namespace skey
