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
#include <sstream>

#include "doctest.h"
#include "dynmatch/ode.hpp"
#include "oracles.hpp"

using namespace dynmatch;

namespace {

// Closed-form two-dimensional fields written out independently of the library.
std::array<double, 2> reference_symmetric(Policy policy, double s0, double s1, const MarketParams& params) {
  const double q = 1.0 - params.alpha;
  const auto E = [&](double n) { return std::pow(q, n); };
  const auto H = [&](double n) { return 1.0 - std::pow(q, n); };
  const double p = params.p;
  const double lm = params.lambda * params.m;
  const double r0 = (1.0 - p * params.lambda) * params.m;
  if (policy == Policy::Greedy) {
    return {r0 * E(s0 + p * s1) - r0 * H(s0) * E(p * s1) - lm * p * E(s1) * H(s0) - s0,
            -r0 * H(p * s1) / p - lm * H(s1) + lm * E(s0 + s1) - s1};
  }
  return {r0 - s0 * H(s0) * E(p * s1) - p * s1 * H(s0) * E(s1) - s0,
          lm - s0 * H(p * s1) / p - s1 * H(s1) - s1};
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("fields at the empty pool are pure arrival rates") {
  const auto params = MarketParams::from_density(3, 0.1, 1000, 10);
  const auto empty = OdeState::empty(4);
  CHECK_THROWS_AS(greedy_rhs(OdeState::empty(3), params), std::invalid_argument);
  const auto g = greedy_rhs(empty, params);
  const auto pt = patient_rhs(empty, params);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(g[k] == doctest::Approx(params.arrival_rate(k)));
    CHECK(pt[k] == doctest::Approx(params.arrival_rate(k)));
  }
}

TEST_CASE("without compatibility the fields reduce to arrivals minus departures") {
  const auto params = MarketParams::from_alpha(2, 0.2, 1000, 1e-300);
  const OdeState s{300, 40, 70};
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    const auto f = policy_rhs(policy, s, params);
    for (std::size_t k = 0; k < 3; ++k) CHECK(f[k] == doctest::Approx(params.arrival_rate(k) - s[k]));
  }
}

TEST_CASE("Patient field at certain compatibility") {
  // alpha = 1: every critical agent matches; hard agents always find their own type.
  const auto params = MarketParams::from_alpha(2, 0.2, 100, 1.0 - 1e-15);
  const OdeState s{7, 3, 3};
  const auto f = patient_rhs(s, params);
  CHECK(f[0] == doctest::Approx(60 - 7).epsilon(1e-9));
  CHECK(f[1] == doctest::Approx(20 - 7.0 / 2 - 2 * 3).epsilon(1e-9));
}

TEST_CASE("full fields agree with the reduced symmetric form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> size(0.0, 3000.0);
  for (int p : {1, 2, 3, 5}) {
    const auto params = MarketParams::from_density(p, 0.9 / p / 2, 8000, 10);
    for (int i = 0; i < 25; ++i) {
      const double s0 = size(rng), s1 = size(rng) / p;
      const auto state = OdeState::symmetric(p, s0, s1);
      for (auto policy : {Policy::Greedy, Policy::Patient}) {
        const auto full = policy_rhs(policy, state, params);
        const auto reduced = symmetric_rhs(policy, s0, s1, params);
        const auto ref = reference_symmetric(policy, s0, s1, params);
        CHECK(rel_diff(full[0], reduced[0]) <= 1e-12);
        CHECK(rel_diff(full[0], ref[0]) <= 1e-9);
        CHECK(rel_diff(reduced[1], ref[1]) <= 1e-9);
        for (int j = 1; j <= p; ++j) CHECK(rel_diff(full[j], reduced[1]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("integrator: exponential decay") {
  const VectorField f = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
  const std::vector<double> y0{1.0};
  IntegratorOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-11;
  const std::vector<double> samples{0.25, 0.5};
  const auto tr = integrate(f, y0, 0.0, 1.0, samples, opts);
  REQUIRE(tr.times.size() == 3);
  CHECK(tr.times.back() == 1.0);
  CHECK(tr.states[0][0] == doctest::Approx(std::exp(-0.25)).epsilon(1e-9));
  CHECK(tr.states[1][0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(tr.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));

  opts.method = StepMethod::ClassicalRK4;
  opts.fixed_step = 1e-3;
  CHECK(integrate(f, y0, 0.0, 1.0, {}, opts).final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("integrator: failures are reported") {
  const VectorField blowup = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
  const std::vector<double> y0{1.0};
  CHECK_THROWS_AS(integrate(blowup, y0, 0.0, 2.0, {}), std::runtime_error);
  IntegratorOptions opts;
  opts.max_steps = 3;
  const VectorField osc = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = std::cos(50 * y[0]); };
  CHECK_THROWS_AS(integrate(osc, y0, 0.0, 100.0, {}, opts), std::runtime_error);
  const std::vector<double> unsorted{0.5, 0.2};
  CHECK_THROWS(integrate(osc, y0, 0.0, 1.0, unsorted));
}

TEST_CASE("dense output is consistent with the field") {
  const auto params = MarketParams::from_density(2, 0.2, 1000, 10);
  const double h = 1e-3;
  std::vector<double> samples;
  for (double t : {0.5, 2.0, 7.0}) {
    samples.push_back(t - h);
    samples.push_back(t + h);
  }
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    const auto tr = integrate(policy, OdeState::empty(3), params, 10.0, 1e-10, samples);
    for (std::size_t i = 0; i + 1 < samples.size(); i += 2) {
      std::vector<double> mid(3);
      for (std::size_t k = 0; k < 3; ++k) mid[k] = 0.5 * (tr.states[i][k] + tr.states[i + 1][k]);
      const auto f = policy_rhs(policy, OdeState(mid), params);
      for (std::size_t k = 0; k < 3; ++k) {
        const double fd = (tr.states[i + 1][k] - tr.states[i][k]) / (2 * h);
        CHECK(std::abs(fd - f[k]) <= 1e-3 * std::max(1.0, std::abs(f[k])));
      }
    }
    for (const auto& s : tr.states) {
      for (double v : s) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("symmetric initial conditions stay symmetric") {
  const auto params = MarketParams::from_density(3, 0.15, 8000, 10);
  const double tol = 1e-10;
  const auto samples = linspace_samples(50.0, 101);
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    const auto tr = integrate(policy, OdeState::symmetric(3, 100, 700), params, 50.0, tol, samples);
    for (const auto& s : tr.states) {
      const auto [lo, hi] = std::minmax({s[1], s[2], s[3]});
      CHECK(hi - lo <= 10 * tol);
    }
  }
}

TEST_CASE("trajectory CSV") {
  const auto params = MarketParams::from_density(1, 0.3, 100, 5);
  const auto tr = integrate(Policy::Greedy, OdeState::empty(2), params, 1.0, 1e-8, linspace_samples(1.0, 3));
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  CHECK(out.str().rfind("t,size_0,size_1\n", 0) == 0);
  CHECK(tr.times.size() == 3);
}

TEST_CASE("fields match the one-event drift of the discrete market") {
  const auto params = MarketParams::from_density(2, 0.2, 8000, 10);
  const std::vector<std::vector<int>> states{{300, 120, 110}, {3000, 400, 420}};
  for (const auto& sizes : states) {
    const OdeState s(std::vector<double>(sizes.begin(), sizes.end()));
    for (auto policy : {Policy::Greedy, Policy::Patient}) {
      const auto f = policy_rhs(policy, s, params);
      const auto est = oracle::one_event_drift(sizes, params, policy, 40'000, 101);
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(f[k] - est[k].mean) <= 4 * est[k].se);
    }
  }
}
