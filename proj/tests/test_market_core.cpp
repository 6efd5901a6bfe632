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

#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dynmatch/market.hpp"
#include "dynmatch/match_prob.hpp"
#include "oracles.hpp"

using namespace dynmatch;

namespace {

PoolState random_state(std::mt19937_64& rng, int p, int max_size) {
  std::uniform_int_distribution<int> size(0, max_size);
  std::vector<double> s(p + 1);
  for (auto& x : s) x = size(rng);
  return PoolState(s);
}

}  // namespace

TEST_CASE("validate_params accepts the reference market") {
  const auto p = MarketParams::from_density(2, 0.2, 8000, 10, 20);
  CHECK(p.alpha == doctest::Approx(0.00125).epsilon(1e-15));
  CHECK_NOTHROW(validate_params(p));
  CHECK(&validate_params(p) == &p);
}

TEST_CASE("validate_params rejects each broken constraint") {
  CHECK_THROWS_AS(validate_params(MarketParams::from_density(2, 0.5, 8000, 10)), InvalidParams);
  CHECK_THROWS_WITH_AS(validate_params(MarketParams::from_density(2, 0.5, 8000, 10)),
                       doctest::Contains("lambda"), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_alpha(2, 0.2, 8000, 0.0)), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_alpha(2, 0.2, 8000, 1.0)), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_density(0, 0.2, 8000, 10)), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_density(2, 0.0, 8000, 10)), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_density(2, 0.2, 0.5, 0.1)), InvalidParams);
  CHECK_THROWS_AS(validate_params(MarketParams::from_density(2, 0.2, 8000, 10, 0.0)), InvalidParams);
  auto inconsistent = MarketParams::from_density(2, 0.2, 8000, 10);
  inconsistent.d = 11;
  CHECK_THROWS_WITH_AS(validate_params(inconsistent), doctest::Contains("d"), InvalidParams);
}

TEST_CASE("PoolState invariants") {
  CHECK_THROWS_AS(PoolState({1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PoolState({1.0}), std::invalid_argument);
  const PoolState s{3, 2, 4};
  CHECK(s.total() == 9);
  CHECK(s.hard_total() == 6);
  CHECK_FALSE(s.hard_symmetric());
  CHECK(PoolState::symmetric(3, 1.5, 2.0).hard_symmetric());
  CHECK_THROWS_AS(s.at(3), std::out_of_range);
}

TEST_CASE("match_prob trivial values") {
  const auto empty = PoolState::empty(4);
  for (TypeIndex k = 0; k < 4; ++k) {
    for (TypeIndex kp = 0; kp < 4; ++kp) CHECK(match_prob(empty, k, kp, 0.3) == 0.0);
  }
  CHECK(match_prob(PoolState{0, 1}, 1, 1, 0.5) == doctest::Approx(0.5));
  CHECK(match_prob(PoolState{5, 1, 1}, 1, 1, 1.0) == 1.0);
  CHECK(match_prob(PoolState{5, 1, 1}, 1, 0, 1.0) == 0.0);
  CHECK_THROWS_AS(match_prob(PoolState{1, 1}, 2, 0, 0.5), std::out_of_range);
}

TEST_CASE("match_prob for an easy agent against two hard types by hand") {
  // sizes (3,2,4), alpha 0.1: pi(0,1) = (1-q^2) [q^4 + (1-q^4)/2].
  const double q = 0.9;
  const double expected = (1 - q * q) * (std::pow(q, 4) + (1 - std::pow(q, 4)) / 2);
  CHECK(match_prob(PoolState{3, 2, 4}, 0, 1, 0.1) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("match_prob agrees with the edge-draw oracle on the reference state") {
  const std::vector<int> sizes{3, 2, 4};
  const auto est = oracle::partner_frequencies(sizes, 0, 0.1, 1'000'000, 17);
  const PoolState s{3, 2, 4};
  for (TypeIndex t = 0; t < 3; ++t) {
    CHECK(std::abs(match_prob(s, 0, t, 0.1) - est[t].mean) <= 4 * est[t].se);
  }
}

TEST_CASE("identity residual vanishes on random states") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> alpha(0.001, 0.99);
  std::uniform_int_distribution<int> pdist(1, 5);
  CHECK(match_prob_identity_residual(PoolState::empty(3), 0.4) == 0.0);
  CHECK(std::abs(match_prob_identity_residual(PoolState{2, 1, 3}, 0.3)) < 1e-12);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_state(rng, pdist(rng), 200);
    CHECK(std::abs(match_prob_identity_residual(s, alpha(rng))) < 1e-12);
  }
}

TEST_CASE("rows are sub-stochastic and distinct hard types never match") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> alpha(0.001, 0.99);
  for (int i = 0; i < 500; ++i) {
    const int p = 1 + static_cast<int>(rng() % 5);
    const auto s = random_state(rng, p, 50);
    const double a = alpha(rng);
    const MatchProbTable table(s, a);
    for (TypeIndex k = 0; k <= static_cast<TypeIndex>(p); ++k) {
      double row = 0.0;
      for (TypeIndex kp = 0; kp <= static_cast<TypeIndex>(p); ++kp) {
        const double v = match_prob(s, k, kp, a);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(table(k, kp) == v);
        if (k >= 1 && kp >= 1 && k != kp) CHECK(v == 0.0);
        row += v;
      }
      CHECK(row <= 1.0 + 1e-12);
      CHECK(table.row_sum(k) == doctest::Approx(row).epsilon(1e-15));
    }
  }
}

TEST_CASE("hard self-match probability is monotone in size and alpha") {
  double prev = -1.0;
  for (int n = 0; n <= 40; ++n) {
    const double v = match_prob(PoolState{4, static_cast<double>(n), 7}, 1, 1, 0.07);
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1.0;
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const double v = match_prob(PoolState{4, 5, 7}, 1, 1, a);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("symmetric shortcut equals the full subset sum") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> alpha(0.001, 0.5);
  std::uniform_real_distribution<double> size(0.0, 300.0);
  for (int i = 0; i < 200; ++i) {
    const int p = 1 + static_cast<int>(rng() % 10);
    const auto s = PoolState::symmetric(p, size(rng), size(rng));
    const double a = alpha(rng);
    for (TypeIndex j = 1; j <= static_cast<TypeIndex>(p); ++j) {
      const double fast = match_prob(s, 0, j, a, SubsetEval::Auto);
      const double full = match_prob(s, 0, j, a, SubsetEval::Exhaustive);
      CHECK(std::abs(fast - full) <= 1e-14);
    }
  }
}

TEST_CASE("subset enumeration is capped but symmetric states scale") {
  std::vector<double> sizes(23, 1.0);
  sizes[3] = 2.0;
  CHECK_THROWS_AS(match_prob(PoolState(sizes), 0, 1, 0.1), std::domain_error);
  const auto sym = PoolState::symmetric(60, 5, 3);
  const double v = match_prob(sym, 0, 1, 0.05);
  // Symmetric closed form: (1 - q^{p s}) / p.
  CHECK(v == doctest::Approx((1 - std::pow(0.95, 60 * 3)) / 60).epsilon(1e-12));
}

TEST_CASE("probabilities stay accurate where (1-alpha)^n underflows") {
  const double a = 1e-3;
  const PoolState huge{2e6, 1e6, 1e6};
  CHECK(match_prob(huge, 0, 0, a) == 0.0);  // q^{hard total} underflows to an exact zero
  CHECK(match_prob(huge, 1, 1, a) == 1.0);
  CHECK(log_perish_prob(huge, 0, a) == doctest::Approx(4e6 * std::log1p(-a)));
  CHECK(std::isfinite(log_perish_prob(huge, 0, a)));
  // Small alpha * n keeps full relative precision.
  CHECK(hit_probability(1.0, 1e-15) == doctest::Approx(1e-15).epsilon(1e-12));
}

TEST_CASE("perish_prob examples") {
  CHECK(perish_prob(PoolState::empty(3), 0, 0.5) == 1.0);
  CHECK(perish_prob(PoolState::empty(3), 2, 0.5) == 1.0);
  CHECK(perish_prob(PoolState{1, 1}, 0, 0.5) == doctest::Approx(0.25));
  CHECK(perish_prob(PoolState{1, 2, 3}, 1, 0.5) == doctest::Approx(0.125));
  CHECK_THROWS_AS(perish_prob(PoolState{1, 2, 3}, 3, 0.5), std::out_of_range);
}

TEST_CASE("perish_prob matches edge draws") {
  // A hard agent perishes iff it has no compatible agent of its own type or easy.
  const std::vector<int> sizes{1, 2, 3};
  const auto est = oracle::partner_frequencies(sizes, 1, 0.5, 400'000, 23);
  const double none = 1.0 - est[0].mean - est[1].mean - est[2].mean;
  const double se = std::sqrt(none * (1 - none) / 400'000.0);
  CHECK(std::abs(none - perish_prob(PoolState{1, 2, 3}, 1, 0.5)) <= 4 * se);
}
