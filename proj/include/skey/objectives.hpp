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

#include <complex>
#include <span>
#include <vector>

#include "json.hpp"
#include "skey/chromanet.hpp"
#include "skey/frontend.hpp"
#include "skey/keys.hpp"

namespace skey {

using Complex = std::complex<double>;

inline constexpr double kBceEpsilon = 1e-7;

// lambda_hat[omega] = sum_q lambda[q] exp(+2 pi i omega q / 12). Transposing
// content up by k multiplies it by exp(+2 pi i omega k / 12).
Complex dft_at_omega(const KeyDistribution& key, int omega = kFifthsOmega);

// D = 1/2 |exp(-2 pi i 7 k / 12) - a_hat conj(b_hat)|^2, zero iff a and b are
// one-hot and b is a shifted up by k. Optional outputs receive dD/da, dD/db.
double cpsd_distance(const KeyDistribution& a, const KeyDistribution& b, int k, KeyDistribution* d_a = nullptr,
                     KeyDistribution* d_b = nullptr);

struct CpsdTerms {
  KeyDistribution a_c;   // segment A at transposition c
  KeyDistribution b_c;   // segment B at transposition c
  KeyDistribution a_ck;  // segment A at transposition c + k
  int k = 0;
};

struct CpsdGradients {
  KeyDistribution a_c = KeyDistribution::Zero();
  KeyDistribution b_c = KeyDistribution::Zero();
  KeyDistribution a_ck = KeyDistribution::Zero();
};

// D(A_c, B_c, 0) + D(A_c, A_c+k, k) + D(B_c, A_c+k, k).
double loss_cpsd(const CpsdTerms& terms, CpsdGradients* grads = nullptr);

// argmax_q (a[q] + b[q]), ties toward the smallest q.
int key_signature_argmax(const KeyDistribution& a, const KeyDistribution& b);

// Major iff u[q_max] > u[(q_max - 3) mod 12]; ties go to minor.
Mode pseudo_label(const Pcp& u, int q_max);

inline ModeDistribution one_hot(Mode m) {
  return m == Mode::kMajor ? ModeDistribution(1.0, 0.0) : ModeDistribution(0.0, 1.0);
}

// -nu[0] log mu[0] - nu[1] log mu[1] with mu clamped to [eps, 1 - eps];
// clamped entries carry zero gradient.
double binary_cross_entropy(Mode label, const ModeDistribution& mu, ModeDistribution* d_mu = nullptr);

struct SkeyGradients {
  ModeDistribution a_c = ModeDistribution::Zero();
  ModeDistribution b_c = ModeDistribution::Zero();
  ModeDistribution a_ck = ModeDistribution::Zero();
};

// The same label (computed at transposition c) supervises all three branches.
double loss_skey(Mode label, const ModeDistribution& mu_a_c, const ModeDistribution& mu_b_c,
                 const ModeDistribution& mu_a_ck, SkeyGradients* grads = nullptr);

// (1/N) sum_n sum_{L in A,B} mu_{n,L}[0] over 2N entries; range [0, 2].
double batch_mode_average(std::span<const ModeDistribution> mus);

// (avg / 2 - 1/2)^2: balanced batch scores 0, single-mode batch 1/4.
double loss_avg(double batch_average);

// How per-song terms enter the total: summed over the batch, or averaged so
// that the batch term keeps the same weight at any batch size.
enum class BatchReduction { kSum, kMean };

struct LossWeights {
  double skey = 1.5;
  double avg = 15.0;
  BatchReduction reduction = BatchReduction::kMean;
};

struct LossBreakdown {
  double cpsd = 0.0;
  double skey = 0.0;
  double avg = 0.0;
  double total = 0.0;
  double mode_average = 0.5;  // batch average normalized to [0, 1]
  double pseudo_major_fraction = 0.0;
  LossWeights weights;

  nlohmann::json to_json() const;
};

inline double combine(double cpsd, double skey, double avg, const LossWeights& w = {}) {
  return cpsd + w.skey * skey + w.avg * avg;
}

// The three forward passes of one song and the uncompressed PCP of (A_c, B_c).
struct SongForward {
  ChromaTensor a_c;
  ChromaTensor b_c;
  ChromaTensor a_ck;
  Pcp pcp_c;
  int k = 0;
};

struct SongGradients {
  ChromaTensor a_c = ChromaTensor::Zero();
  ChromaTensor b_c = ChromaTensor::Zero();
  ChromaTensor a_ck = ChromaTensor::Zero();
};

// sum_n L_CPSD + w.skey * sum_n L_SKEY + w.avg * L_avg, with both sums
// divided by N under BatchReduction::kMean. Pseudo-labels are constants for
// differentiation.
LossBreakdown total_loss(std::span<const SongForward> songs, const LossWeights& weights = {},
                         std::vector<SongGradients>* grads = nullptr);

}  // namespace skey
