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

#include "skey/selftest.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "skey/evaluation.hpp"
#include "skey/objectives.hpp"

namespace skey {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
SelftestResult timed(const std::string& name, Fn&& fn) {
  const auto t0 = Clock::now();
  SelftestResult r;
  r.name = name;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

KeyDistribution one_hot_key(int q) {
  KeyDistribution v = KeyDistribution::Zero();
  v(wrap12(q)) = 1.0;
  return v;
}

ChromaTensor random_chroma(Rng& rng, double spread = 1.5) {
  std::normal_distribution<double> n(0.0, spread);
  ChromaTensor z;
  for (int i = 0; i < z.size(); ++i) z(i) = n(rng);
  ChromaTensor y = (z.array() - z.maxCoeff()).exp().matrix();
  return y / y.sum();
}

// Central differences of f over the entries of x.
template <typename Fn>
std::vector<double> numeric_gradient(std::vector<double> x, Fn&& f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

// Flattens a batch of song forwards into one vector and back.
std::vector<double> flatten(const std::vector<SongForward>& songs) {
  std::vector<double> x;
  for (const auto& s : songs) {
    for (const ChromaTensor* t : {&s.a_c, &s.b_c, &s.a_ck}) x.insert(x.end(), t->data(), t->data() + t->size());
  }
  return x;
}

std::vector<SongForward> unflatten(const std::vector<double>& x, std::vector<SongForward> songs) {
  std::size_t at = 0;
  for (auto& s : songs) {
    for (ChromaTensor* t : {&s.a_c, &s.b_c, &s.a_ck}) {
      for (int i = 0; i < t->size(); ++i) (*t)(i) = x[at++];
    }
  }
  return songs;
}

std::vector<double> flatten(const std::vector<SongGradients>& grads) {
  std::vector<double> x;
  for (const auto& g : grads) {
    for (const ChromaTensor* t : {&g.a_c, &g.b_c, &g.a_ck}) x.insert(x.end(), t->data(), t->data() + t->size());
  }
  return x;
}

}  // namespace

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

SelftestResult selftest_cpsd_zero_set() {
  return timed("cpsd_zero_set", [](SelftestResult& r) {
    const double fifth = 1.0 - std::cos(kPi / 6.0);
    double worst_zero = 0.0;
    double worst_fifth = 0.0;
    for (int q = 0; q < kBinsPerOctave; ++q) {
      for (int k = -12; k <= 12; ++k) {
        worst_zero = std::max(worst_zero, cpsd_distance(one_hot_key(q), one_hot_key(q + k), k));
        for (int off : {5, 7}) {
          const double d = cpsd_distance(one_hot_key(q), one_hot_key(q + k + off), k);
          worst_fifth = std::max(worst_fifth, std::abs(d - fifth));
        }
      }
    }
    r.passed = worst_zero < 1e-10 && worst_fifth < 1e-9;
    r.detail = "max D on shifted pairs " + fmt(worst_zero) + ", max |D - (1 - cos(pi/6))| " + fmt(worst_fifth);
  });
}

SelftestResult selftest_loss_gradients(std::uint64_t seed) {
  return timed("loss_gradients", [seed](SelftestResult& r) {
    Rng rng(seed + 11);
    double worst = 0.0;
    std::ostringstream detail;

    // CPSD on free 12-vectors.
    for (int trial = 0; trial < 5; ++trial) {
      const KeyDistribution a = marginals(random_chroma(rng)).key;
      const KeyDistribution b = marginals(random_chroma(rng)).key;
      const int k = std::uniform_int_distribution<int>(-12, 12)(rng);
      KeyDistribution da;
      KeyDistribution db;
      cpsd_distance(a, b, k, &da, &db);
      std::vector<double> x(a.data(), a.data() + 12);
      x.insert(x.end(), b.data(), b.data() + 12);
      const auto num = numeric_gradient(x, [&](const std::vector<double>& v) {
        return cpsd_distance(Eigen::Map<const KeyDistribution>(v.data()), Eigen::Map<const KeyDistribution>(v.data() + 12), k);
      });
      std::vector<double> ana(da.data(), da.data() + 12);
      ana.insert(ana.end(), db.data(), db.data() + 12);
      worst = std::max(worst, relative_error(ana, num));
    }
    detail << "cpsd " << fmt(worst);

    // BCE against both labels.
    double worst_bce = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const ModeDistribution mu = marginals(random_chroma(rng)).mode;
      for (Mode label : {Mode::kMajor, Mode::kMinor}) {
        ModeDistribution d;
        binary_cross_entropy(label, mu, &d);
        const auto num = numeric_gradient({mu(0), mu(1)}, [&](const std::vector<double>& v) {
          return binary_cross_entropy(label, ModeDistribution(v[0], v[1]));
        });
        worst_bce = std::max(worst_bce, relative_error({d(0), d(1)}, num));
      }
    }
    detail << ", bce " << fmt(worst_bce);

    // L_avg by difference of weightings, and the full total.
    double worst_avg = 0.0;
    double worst_total = 0.0;
    for (BatchReduction red : {BatchReduction::kMean, BatchReduction::kSum}) {
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<SongForward> songs(3);
        for (auto& s : songs) {
          s = {random_chroma(rng), random_chroma(rng), random_chroma(rng), {}, std::uniform_int_distribution<int>(-5, 5)(rng)};
          for (auto& e : s.pcp_c.energies) e = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        }
        const LossWeights full{1.5, 15.0, red};
        const LossWeights none{0.0, 0.0, red};
        const LossWeights avg_only{0.0, 1.0, red};
        std::vector<SongGradients> g_full;
        std::vector<SongGradients> g_none;
        std::vector<SongGradients> g_avg;
        total_loss(songs, full, &g_full);
        total_loss(songs, none, &g_none);
        total_loss(songs, avg_only, &g_avg);
        auto ga = flatten(g_avg);
        const auto gn = flatten(g_none);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] -= gn[i];
        const auto x = flatten(songs);
        const auto num_avg = numeric_gradient(x, [&](const std::vector<double>& v) {
          return total_loss(unflatten(v, songs), avg_only).avg;
        });
        const auto num_total = numeric_gradient(x, [&](const std::vector<double>& v) {
          return total_loss(unflatten(v, songs), full).total;
        });
        worst_avg = std::max(worst_avg, relative_error(ga, num_avg));
        worst_total = std::max(worst_total, relative_error(flatten(g_full), num_total));
      }
    }
    detail << ", avg " << fmt(worst_avg) << ", total " << fmt(worst_total);
    r.passed = worst < 1e-4 && worst_bce < 1e-4 && worst_avg < 1e-4 && worst_total < 1e-4;
    r.detail = "relative errors: " + detail.str();
  });
}

SelftestResult selftest_backbone_gradients(std::uint64_t seed) {
  return timed("backbone_gradients", [seed](SelftestResult& r) {
    ModelConfig cfg;
    cfg.layers = {{3, 3, 4, 1, 2}, {3, 3, 4, 2, 1}, {3, 3, 2, 4, 1}};
    const ModelState state = ModelState::initialize(cfg, seed + 5);
    const ParamLayout layout(cfg);
    std::vector<double> params(state.params.begin(), state.params.end());
    // Non-trivial affine parameters so their gradients are exercised.
    params[layout.gamma] = 0.8;
    params[layout.gamma + 1] = 1.3;
    params[layout.beta] = 0.1;
    params[layout.beta + 1] = -0.2;

    Rng rng(seed + 17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int frames = 12;
    std::vector<MatrixX<double>> inputs(6, MatrixX<double>(kCropBins, frames));
    for (auto& x : inputs) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 3.0 * unit(rng);
    }
    std::vector<Pcp> pcps(2);
    for (auto& p : pcps) {
      for (auto& e : p.energies) e = unit(rng);
    }
    const std::array<int, 2> ks{3, -2};

    auto forward = [&](const std::vector<double>& theta, std::vector<SongGradients>* grads,
                       std::vector<ChromaTensor>* ys_out) {
      BackboneBatch<double> batch(layout, theta, 1);
      const auto fms = batch.forward(inputs, true, nullptr, cfg.bn_momentum, cfg.bn_epsilon);
      std::vector<ChromaTensor> ys;
      for (const auto& fm : fms) ys.push_back(structured_head(fm));
      std::vector<SongForward> songs(2);
      for (int s = 0; s < 2; ++s) {
        songs[static_cast<std::size_t>(s)] = {ys[static_cast<std::size_t>(s)], ys[static_cast<std::size_t>(2 + s)],
                                              ys[static_cast<std::size_t>(4 + s)], pcps[static_cast<std::size_t>(s)],
                                              ks[static_cast<std::size_t>(s)]};
      }
      if (ys_out) *ys_out = ys;
      return total_loss(songs, {}, grads).total;
    };

    std::vector<SongGradients> grads;
    std::vector<ChromaTensor> ys;
    forward(params, &grads, &ys);
    BackboneBatch<double> batch(layout, params, 1);
    batch.forward(inputs, true, nullptr, cfg.bn_momentum, cfg.bn_epsilon);
    std::vector<FeatureMap> d_fm(6);
    for (int s = 0; s < 2; ++s) {
      const auto u = static_cast<std::size_t>(s);
      d_fm[u] = structured_head_backward(ys[u], grads[u].a_c);
      d_fm[2 + u] = structured_head_backward(ys[2 + u], grads[u].b_c);
      d_fm[4 + u] = structured_head_backward(ys[4 + u], grads[u].a_ck);
    }
    const std::vector<double> analytic = batch.backward(d_fm);
    const auto numeric = numeric_gradient(params, [&](const std::vector<double>& v) { return forward(v, nullptr, nullptr); }, 1e-5);
    const double err = relative_error(analytic, numeric);
    r.passed = err < 1e-3;
    r.detail = std::to_string(params.size()) + " parameters, relative error " + fmt(err);
  });
}

SelftestResult selftest_head_equivariance(std::uint64_t seed) {
  return timed("head_equivariance", [seed](SelftestResult& r) {
    Rng rng(seed + 23);
    std::normal_distribution<double> n(0.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      FeatureMap fm;
      for (int i = 0; i < fm.size(); ++i) fm(i) = n(rng);
      const Marginals base = marginals(structured_head(fm));
      for (int s = 0; s < kBinsPerOctave; ++s) {
        FeatureMap shifted;
        for (int p = 0; p < kCropBins; ++p) shifted.row((p + s) % kCropBins) = fm.row(p);
        const Marginals m = marginals(structured_head(shifted));
        for (int q = 0; q < kBinsPerOctave; ++q) worst = std::max(worst, std::abs(m.key(wrap12(q + s)) - base.key(q)));
        worst = std::max(worst, (m.mode - base.mode).cwiseAbs().maxCoeff());
      }
    }
    r.passed = worst < 1e-6;
    r.detail = "max deviation " + fmt(worst);
  });
}

SelftestResult selftest_metric_fixtures() {
  return timed("metric_fixtures", [](SelftestResult& r) {
    const KeyLabel c_major{3, Mode::kMajor};
    const std::vector<EvalRecord> fixture{
        {"exact", c_major, c_major, ""},
        {"fifth", c_major, {10, Mode::kMajor}, ""},
        {"relative", c_major, {0, Mode::kMinor}, ""},
        {"parallel", c_major, {3, Mode::kMinor}, ""},
        {"other", c_major, {5, Mode::kMajor}, ""},
        {"exact_minor", {0, Mode::kMinor}, {0, Mode::kMinor}, ""},
    };
    const MetricsReport six = evaluate(fixture);
    std::vector<EvalRecord> identity;
    for (int i = 0; i < kNumKeys; ++i) identity.push_back({std::to_string(i), KeyLabel::from_index(i), KeyLabel::from_index(i), ""});
    const MetricsReport all = evaluate(identity);
    const bool ok = six.mirex == 50.0 && all.mirex == 100.0 && all.ksea == 100.0 && all.mode_acc == 100.0 &&
                    ksea_score(c_major, {0, Mode::kMinor}) == 1.0 && ksea_score(c_major, {10, Mode::kMajor}) == 0.5;
    r.passed = ok;
    std::ostringstream d;
    d << "six-record MIREX " << six.mirex << ", identity (" << all.mirex << ", " << all.ksea << ", " << all.mode_acc << ")";
    r.detail = d.str();
  });
}

std::vector<SelftestResult> run_selftest(std::uint64_t seed) {
  return {selftest_cpsd_zero_set(), selftest_loss_gradients(seed), selftest_backbone_gradients(seed),
          selftest_head_equivariance(seed), selftest_metric_fixtures()};
}

nlohmann::json selftest_to_json(const std::vector<SelftestResult>& results) {
  nlohmann::json suites = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    suites.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    all = all && r.passed;
  }
  return {{"passed", all}, {"suites", suites}};
}

}  // namespace skey
