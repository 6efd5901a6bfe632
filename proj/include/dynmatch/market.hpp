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
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dynmatch {

/// Index into the type list: 0 is the easy type, 1..p are the hard types.
using TypeIndex = std::size_t;

inline constexpr TypeIndex kEasyType = 0;

enum class Policy { Greedy, Patient };

std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view text);

/// Thrown when a parameter tuple violates the market's structural constraints.
class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/** Full parameter tuple of the market.
 *
 * Arrivals form a Poisson process of rate `m`; each arrival is easy with
 * probability 1 - p*lambda and of hard type j with probability lambda. Any two
 * agents are compatible with probability `alpha`, except two distinct hard types,
 * which never are. `d = alpha * m` is the network density.
 */
struct MarketParams {
  int p = 2;
  double lambda = 0.2;
  double m = 8000.0;
  double alpha = 10.0 / 8000.0;
  double d = 10.0;
  double horizon = 20.0;

  /// Builds params from the density; alpha is derived as d / m.
  static MarketParams from_density(int p, double lambda, double m, double d, double horizon = 20.0);
  /// Builds params from alpha; d is derived as alpha * m.
  static MarketParams from_alpha(int p, double lambda, double m, double alpha, double horizon = 20.0);

  std::size_t num_types() const { return static_cast<std::size_t>(p) + 1; }
  double easy_share() const { return 1.0 - p * lambda; }
  /// Arrival rate of type k (agents per unit time).
  double arrival_rate(TypeIndex k) const { return k == kEasyType ? easy_share() * m : lambda * m; }

  /// Copy with a new density, keeping m fixed.
  MarketParams with_density(double new_d) const;
  /// Copy with a new hard-type share.
  MarketParams with_lambda(double new_lambda) const;
};

/// Returns `params` unchanged if every invariant holds; otherwise throws
/// InvalidParams naming the violated constraint.
const MarketParams& validate_params(const MarketParams& params);

/// Per-type loss fractions and the arrival-weighted total.
struct LossReport {
  std::vector<double> per_type;
  double total = 0.0;
};

/** Per-type pool sizes at one instant.
 *
 * Entry 0 is the easy type. Sizes are real-valued so the same type serves the
 * mean-field engine; the simulator only ever stores integers here.
 */
class PoolState {
 public:
  PoolState() = default;
  explicit PoolState(std::vector<double> sizes);
  PoolState(std::initializer_list<double> sizes);

  /// Pool with `num_types` entries, all equal to zero.
  static PoolState empty(std::size_t num_types);
  /// Pool (s0, s1, ..., s1) with `p` hard entries.
  static PoolState symmetric(int p, double easy, double hard);

  std::size_t num_types() const { return sizes_.size(); }
  int p() const { return static_cast<int>(sizes_.size()) - 1; }
  double operator[](TypeIndex k) const { return sizes_[k]; }
  double at(TypeIndex k) const;
  std::span<const double> sizes() const { return sizes_; }
  double total() const;
  double hard_total() const;
  /// True when all hard entries are equal.
  bool hard_symmetric() const;

 private:
  std::vector<double> sizes_;
};

}  // namespace dynmatch
