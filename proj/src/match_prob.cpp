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

#include "dynmatch/match_prob.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dynmatch {

double log_survival(double alpha) { return std::log1p(-alpha); }

double survival(double n, double alpha) {
  if (n == 0.0) return 1.0;
  return std::exp(n * log_survival(alpha));
}

double hit_probability(double n, double alpha) {
  if (n == 0.0) return 0.0;
  return -std::expm1(n * log_survival(alpha));
}

namespace {

void check_index(const PoolState& state, TypeIndex k) {
  if (k >= state.num_types()) {
    throw std::out_of_range("type index " + std::to_string(k) + " out of range for p = " +
                            std::to_string(state.p()));
  }
}

// sum_{J subset of [p]\{j}} beta_J / (|J|+1) where every other hard type has size `s`:
// sum_k C(p-1,k)/(k+1) x^k y^(p-1-k) with x = 1-(1-a)^s, y = (1-a)^s.
double symmetric_subset_sum(int p, double s, double alpha) {
  const int others = p - 1;
  const double x = hit_probability(s, alpha);
  const double y = survival(s, alpha);
  if (x == 0.0) return 1.0;
  if (y == 0.0) return 1.0 / p;
  const double log_x = std::log(x);
  const double log_y = std::log(y);
  double sum = 0.0;
  for (int k = 0; k <= others; ++k) {
    const double log_choose = std::lgamma(others + 1.0) - std::lgamma(k + 1.0) - std::lgamma(others - k + 1.0);
    sum += std::exp(log_choose + k * log_x + (others - k) * log_y) / (k + 1);
  }
  return sum;
}

double exhaustive_subset_sum(const PoolState& state, TypeIndex j, double alpha) {
  const int p = state.p();
  if (p > kMaxExactSubsetTypes) {
    throw std::domain_error("exact subset enumeration needs p <= " + std::to_string(kMaxExactSubsetTypes) +
                            " (got p = " + std::to_string(p) + "); use a hard-symmetric state");
  }
  std::vector<double> hit;
  std::vector<double> miss;
  for (TypeIndex l = 1; l <= static_cast<TypeIndex>(p); ++l) {
    if (l == j) continue;
    hit.push_back(hit_probability(state[l], alpha));
    miss.push_back(survival(state[l], alpha));
  }
  const std::size_t others = hit.size();
  double sum = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << others); ++mask) {
    double beta = 1.0;
    int chosen = 0;
    for (std::size_t i = 0; i < others; ++i) {
      if (mask & (std::uint64_t{1} << i)) {
        beta *= hit[i];
        ++chosen;
      } else {
        beta *= miss[i];
      }
    }
    sum += beta / (chosen + 1);
  }
  return sum;
}

bool others_symmetric(const PoolState& state, TypeIndex j) {
  double ref = -1.0;
  for (TypeIndex l = 1; l < state.num_types(); ++l) {
    if (l == j) continue;
    if (ref < 0.0) {
      ref = state[l];
    } else if (state[l] != ref) {
      return false;
    }
  }
  return true;
}

}  // namespace

double match_prob(const PoolState& state, TypeIndex k, TypeIndex k_prime, double alpha, SubsetEval eval) {
  check_index(state, k);
  check_index(state, k_prime);
  if (k == kEasyType && k_prime == kEasyType) {
    return hit_probability(state[0], alpha) * survival(state.hard_total(), alpha);
  }
  if (k == kEasyType) {
    const double own = hit_probability(state[k_prime], alpha);
    if (own == 0.0) return 0.0;
    double subset_sum;
    if (eval == SubsetEval::Auto && others_symmetric(state, k_prime)) {
      double other = 0.0;
      for (TypeIndex l = 1; l < state.num_types(); ++l) {
        if (l != k_prime) {
          other = state[l];
          break;
        }
      }
      subset_sum = symmetric_subset_sum(state.p(), other, alpha);
    } else {
      subset_sum = exhaustive_subset_sum(state, k_prime, alpha);
    }
    return own * subset_sum;
  }
  if (k_prime == kEasyType) return hit_probability(state[0], alpha) * survival(state[k], alpha);
  if (k == k_prime) return hit_probability(state[k], alpha);
  return 0.0;
}

double match_prob_identity_residual(const PoolState& state, double alpha) {
  double matched = 0.0;
  for (TypeIndex k = 0; k < state.num_types(); ++k) matched += match_prob(state, kEasyType, k, alpha);
  return survival(state.total(), alpha) - (1.0 - matched);
}

double log_perish_prob(const PoolState& state, TypeIndex k, double alpha) {
  check_index(state, k);
  const double visible = k == kEasyType ? state.total() : state[0] + state[k];
  if (visible == 0.0) return 0.0;
  return visible * log_survival(alpha);
}

double perish_prob(const PoolState& state, TypeIndex k, double alpha) {
  return std::exp(log_perish_prob(state, k, alpha));
}

MatchProbTable::MatchProbTable(const PoolState& state, double alpha)
    : n_(state.num_types()), pi_(n_ * n_, 0.0) {
  for (TypeIndex k = 0; k < n_; ++k) {
    if (k == kEasyType) {
      for (TypeIndex kp = 0; kp < n_; ++kp) pi_[kp] = match_prob(state, 0, kp, alpha);
    } else {
      pi_[k * n_] = match_prob(state, k, 0, alpha);
      pi_[k * n_ + k] = match_prob(state, k, k, alpha);
    }
  }
}

double MatchProbTable::row_sum(TypeIndex k) const {
  double sum = 0.0;
  for (TypeIndex kp = 0; kp < n_; ++kp) sum += pi_[k * n_ + kp];
  return sum;
}

}  // namespace dynmatch
