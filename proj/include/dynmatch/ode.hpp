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

#include <array>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "dynmatch/market.hpp"

namespace dynmatch {

/// Mean-field pool sizes; same layout as PoolState.
using OdeState = PoolState;

/// Expected drift of every pool size under Greedy (matching at arrival).
std::vector<double> greedy_rhs(const OdeState& state, const MarketParams& params);

/// Expected drift of every pool size under Patient (matching at criticality).
std::vector<double> patient_rhs(const OdeState& state, const MarketParams& params);

std::vector<double> policy_rhs(Policy policy, const OdeState& state, const MarketParams& params);

/// Two-dimensional field for hard-symmetric states (s0, s1, ..., s1).
/// Written out in closed form, independently of match_prob.
std::array<double, 2> symmetric_rhs(Policy policy, double s0, double s1, const MarketParams& params);

/// y' = f(t, y), written into `dydt`.
using VectorField = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

enum class StepMethod {
  DormandPrince45,  ///< adaptive embedded 5(4) pair with 4th-order dense output
  ClassicalRK4,     ///< fixed step, for debugging
};

struct IntegratorOptions {
  StepMethod method = StepMethod::DormandPrince45;
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double initial_step = 0.0;  ///< 0 picks a step from the initial derivative
  double min_step = 1e-14;    ///< relative to the time span; smaller steps abort
  double fixed_step = 1e-3;   ///< ClassicalRK4 only
  std::size_t max_steps = 50'000'000;
  bool clip_negative = true;  ///< project negative components to 0 after each step
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t clip_events = 0;

  const std::vector<double>& final_state() const { return states.back(); }
};

/**
 * Integrates y' = f(t, y) from `t0` to `t_end`.
 *
 * The trajectory holds the state at every entry of `sample_times` (which must be
 * sorted and lie in [t0, t_end]) and always ends with t_end. Throws
 * std::runtime_error when the step size underflows or the step budget runs out.
 */
Trajectory integrate(const VectorField& field, std::span<const double> y0, double t0, double t_end,
                     std::span<const double> sample_times, const IntegratorOptions& options = {});

/// Mean-field trajectory of `policy` from `initial`. `tol` is relative; the
/// absolute tolerance is tol * m.
Trajectory integrate(Policy policy, const OdeState& initial, const MarketParams& params, double t_end, double tol,
                     std::span<const double> sample_times = {});

/// `count` evenly spaced sample times in [0, t_end], both ends included.
std::vector<double> linspace_samples(double t_end, std::size_t count);

/// CSV with header t,size_0,...,size_p.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace dynmatch
