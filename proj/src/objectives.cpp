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

#include "skey/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "skey/error.hpp"

namespace skey {

namespace {

Complex root_of_unity(int omega, int q) {
  const double angle = 2.0 * kPi * static_cast<double>(wrap12(omega * q)) / kBinsPerOctave;
  return {std::cos(angle), std::sin(angle)};
}

// Chain rule from y's marginals back to y: dy[q, m] = dlambda[q] + dmu[m].
ChromaTensor marginal_grad(const KeyDistribution& d_key, const ModeDistribution& d_mode) {
  ChromaTensor d;
  for (int q = 0; q < kBinsPerOctave; ++q) {
    for (int m = 0; m < kModes; ++m) d(q, m) = d_key(q) + d_mode(m);
  }
  return d;
}

}  // namespace

Complex dft_at_omega(const KeyDistribution& key, int omega) {
  Complex acc{0.0, 0.0};
  for (int q = 0; q < kBinsPerOctave; ++q) acc += key(q) * root_of_unity(omega, q);
  return acc;
}

double cpsd_distance(const KeyDistribution& a, const KeyDistribution& b, int k, KeyDistribution* d_a,
                     KeyDistribution* d_b) {
  const Complex a_hat = dft_at_omega(a);
  const Complex b_hat = dft_at_omega(b);
  const Complex target = std::conj(root_of_unity(kFifthsOmega, k));
  const Complex residual = target - a_hat * std::conj(b_hat);
  if (d_a) {
    for (int q = 0; q < kBinsPerOctave; ++q) {
      (*d_a)(q) = -std::real(std::conj(residual) * root_of_unity(kFifthsOmega, q) * std::conj(b_hat));
    }
  }
  if (d_b) {
    for (int q = 0; q < kBinsPerOctave; ++q) {
      (*d_b)(q) = -std::real(std::conj(residual) * a_hat * std::conj(root_of_unity(kFifthsOmega, q)));
    }
  }
  return 0.5 * std::norm(residual);
}

double loss_cpsd(const CpsdTerms& t, CpsdGradients* grads) {
  KeyDistribution ga;
  KeyDistribution gb;
  double total = 0.0;
  auto term = [&](const KeyDistribution& x, const KeyDistribution& y, int k, KeyDistribution* dx,
                  KeyDistribution* dy) {
    total += cpsd_distance(x, y, k, grads ? &ga : nullptr, grads ? &gb : nullptr);
    if (grads) {
      *dx += ga;
      *dy += gb;
    }
  };
  if (grads) *grads = CpsdGradients{};
  term(t.a_c, t.b_c, 0, grads ? &grads->a_c : nullptr, grads ? &grads->b_c : nullptr);
  term(t.a_c, t.a_ck, t.k, grads ? &grads->a_c : nullptr, grads ? &grads->a_ck : nullptr);
  term(t.b_c, t.a_ck, t.k, grads ? &grads->b_c : nullptr, grads ? &grads->a_ck : nullptr);
  return total;
}

int key_signature_argmax(const KeyDistribution& a, const KeyDistribution& b) {
  int best = 0;
  double best_value = a(0) + b(0);
  for (int q = 1; q < kBinsPerOctave; ++q) {
    const double v = a(q) + b(q);
    if (v > best_value) {
      best = q;
      best_value = v;
    }
  }
  return best;
}

Mode pseudo_label(const Pcp& u, int q_max) {
  require(q_max >= 0 && q_max < kBinsPerOctave, ErrorCode::kInvalidArgument, "q_max must lie in [0, 12)");
  return u[q_max] > u[q_max - 3] ? Mode::kMajor : Mode::kMinor;
}

double binary_cross_entropy(Mode label, const ModeDistribution& mu, ModeDistribution* d_mu) {
  const ModeDistribution nu = one_hot(label);
  double loss = 0.0;
  for (int m = 0; m < kModes; ++m) {
    const double raw = mu(m);
    const double clamped = std::clamp(raw, kBceEpsilon, 1.0 - kBceEpsilon);
    loss -= nu(m) * std::log(clamped);
    if (d_mu) {
      const bool inside = raw > kBceEpsilon && raw < 1.0 - kBceEpsilon;
      (*d_mu)(m) = inside ? -nu(m) / clamped : 0.0;
    }
  }
  return loss;
}

double loss_skey(Mode label, const ModeDistribution& mu_a_c, const ModeDistribution& mu_b_c,
                 const ModeDistribution& mu_a_ck, SkeyGradients* grads) {
  return binary_cross_entropy(label, mu_a_c, grads ? &grads->a_c : nullptr) +
         binary_cross_entropy(label, mu_b_c, grads ? &grads->b_c : nullptr) +
         binary_cross_entropy(label, mu_a_ck, grads ? &grads->a_ck : nullptr);
}

double batch_mode_average(std::span<const ModeDistribution> mus) {
  require(!mus.empty(), ErrorCode::kEmptyBatch, "batch mode average needs at least one song");
  require(mus.size() % 2 == 0, ErrorCode::kInvalidArgument, "batch mode average needs segments A and B per song");
  const double songs = static_cast<double>(mus.size() / 2);
  double acc = 0.0;
  for (const auto& mu : mus) acc += mu(0);
  return acc / songs;
}

double loss_avg(double batch_average) {
  const double d = batch_average / 2.0 - 0.5;
  return d * d;
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"cpsd", cpsd},
          {"skey", skey},
          {"avg", avg},
          {"total", total},
          {"mode_avg", mode_average},
          {"pseudo_major", pseudo_major_fraction},
          {"reduction", weights.reduction == BatchReduction::kMean ? "mean" : "sum"}};
}

LossBreakdown total_loss(std::span<const SongForward> songs, const LossWeights& weights,
                         std::vector<SongGradients>* grads) {
  require(!songs.empty(), ErrorCode::kEmptyBatch, "loss needs at least one song");
  LossBreakdown out;
  out.weights = weights;
  if (grads) grads->assign(songs.size(), SongGradients{});

  std::vector<ModeDistribution> segment_modes;
  segment_modes.reserve(2 * songs.size());
  std::size_t majors = 0;

  for (std::size_t n = 0; n < songs.size(); ++n) {
    const SongForward& s = songs[n];
    const Marginals a = marginals(s.a_c);
    const Marginals b = marginals(s.b_c);
    const Marginals ak = marginals(s.a_ck);

    CpsdGradients gc;
    out.cpsd += loss_cpsd({a.key, b.key, ak.key, s.k}, grads ? &gc : nullptr);

    const Mode label = pseudo_label(s.pcp_c, key_signature_argmax(a.key, b.key));
    majors += label == Mode::kMajor ? 1 : 0;
    SkeyGradients gs;
    out.skey += loss_skey(label, a.mode, b.mode, ak.mode, grads ? &gs : nullptr);

    segment_modes.push_back(a.mode);
    segment_modes.push_back(b.mode);

    if (grads) {
      SongGradients& g = (*grads)[n];
      g.a_c = marginal_grad(gc.a_c, weights.skey * gs.a_c);
      g.b_c = marginal_grad(gc.b_c, weights.skey * gs.b_c);
      g.a_ck = marginal_grad(gc.a_ck, weights.skey * gs.a_ck);
    }
  }

  if (weights.reduction == BatchReduction::kMean) {
    const double inv = 1.0 / static_cast<double>(songs.size());
    out.cpsd *= inv;
    out.skey *= inv;
    if (grads) {
      for (auto& g : *grads) {
        g.a_c *= inv;
        g.b_c *= inv;
        g.a_ck *= inv;
      }
    }
  }

  const double average = batch_mode_average(segment_modes);
  out.avg = loss_avg(average);
  out.mode_average = average / 2.0;
  out.pseudo_major_fraction = static_cast<double>(majors) / static_cast<double>(songs.size());
  out.total = combine(out.cpsd, out.skey, out.avg, weights);

  if (grads) {
    // d L_avg / d mu_{n,L}[0] = 2 (avg/2 - 1/2) * 1/2 * 1/N.
    const double d_mu0 = weights.avg * (average / 2.0 - 0.5) / static_cast<double>(songs.size());
    for (auto& g : *grads) {
      g.a_c.col(0).array() += d_mu0;
      g.b_c.col(0).array() += d_mu0;
    }
  }
  return out;
}

}  // namespace skey
