// Copyright 2026 The dynmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

#include "dynmatch/market.hpp"

namespace dynmatch {

/// Largest p for which the easy-to-hard subset sum is enumerated exactly.
inline constexpr int kMaxExactSubsetTypes = 20;

/// How the easy-to-hard subset sum is evaluated.
enum class SubsetEval {
  Auto,        ///< O(p) binomial shortcut when the other hard sizes are equal, else enumeration.
  Exhaustive,  ///< Always enumerate the 2^(p-1) subsets (subject to the cap).
};

/// log(1 - alpha), with log(0) = -inf for alpha == 1.
double log_survival(double alpha);

/// (1 - alpha)^n for real n >= 0, evaluated as exp(n * log1p(-alpha)).
/// Returns exactly 1 for n == 0, including alpha == 1.
double survival(double n, double alpha);

/// 1 - (1 - alpha)^n without cancellation for small alpha * n.
double hit_probability(double n, double alpha);

/**
 * Probability that the planner matches an agent of type `k` (the one arriving
 * under Greedy or becoming critical under Patient) with a pool agent of type
 * `k_prime`.
 *
 * Hard partners take priority over easy ones. When an easy agent has compatible
 * agents in several hard types, the partner's type is drawn uniformly among
 * those types. Distinct hard types are never compatible, so the result is 0 for
 * 1 <= k != k_prime.
 *
 * Throws std::out_of_range for a bad type index and std::domain_error when the
 * subset sum would need enumeration with p > kMaxExactSubsetTypes.
 */
double match_prob(const PoolState& state, TypeIndex k, TypeIndex k_prime, double alpha,
                  SubsetEval eval = SubsetEval::Auto);

/// (1-alpha)^|S| - (1 - sum_k match_prob(state, 0, k, alpha)); identically zero in exact arithmetic.
double match_prob_identity_residual(const PoolState& state, double alpha);

/**
 * Probability that an agent of type `k` finds no admissible compatible partner.
 * Easy agents see the whole pool; hard agents see the easy pool and their own type.
 */
double perish_prob(const PoolState& state, TypeIndex k, double alpha);

/// log of perish_prob; finite even where perish_prob underflows.
double log_perish_prob(const PoolState& state, TypeIndex k, double alpha);

/// Dense (p+1)x(p+1) table of match_prob; row = agent of interest, column = partner.
class MatchProbTable {
 public:
  MatchProbTable(const PoolState& state, double alpha);

  std::size_t num_types() const { return n_; }
  double operator()(TypeIndex k, TypeIndex k_prime) const { return pi_[k * n_ + k_prime]; }
  double row_sum(TypeIndex k) const;

 private:
  std::size_t n_;
  std::vector<double> pi_;
};

}  // namespace dynmatch
