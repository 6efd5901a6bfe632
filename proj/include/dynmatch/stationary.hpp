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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynmatch/market.hpp"
#include "dynmatch/ode.hpp"

namespace dynmatch {

/// Fixed point of the mean-field field together with derived quantities.
struct StationarySolution {
  Policy policy = Policy::Greedy;
  MarketParams params;
  OdeState sizes;
  double residual = 0.0;   ///< max-norm of the full field at `sizes`
  double tolerance = 0.0;  ///< tolerance the residual was checked against
  LossReport loss;
  std::vector<double> waits;
  /// Every (s0, s1) intersection found by the scan, after polishing.
  std::vector<std::array<double, 2>> candidates;
  bool multiple_roots = false;
  double scan_lo = 0.0;  ///< s1 interval that was scanned
  double scan_hi = 0.0;
};

/// Residual tolerance used when the caller passes none: 1e-10, loosened
/// proportionally to m above m = 1e4 where double rounding of O(m) terms dominates.
double default_stationary_tol(const MarketParams& params);

/**
 * Greedy fixed point on the symmetric manifold.
 *
 * Eliminating s0 from each stationary equation gives two curves s0 = f(s1) and
 * s0 = g(s1); their intersection is bracketed on a log grid of s1 in
 * [1e-6 m, m], bisected and then polished by damped Newton on the full field.
 * Throws std::runtime_error when no sign change is found or the polished
 * residual is not below `tol`.
 */
StationarySolution stationary_greedy(const MarketParams& params, std::optional<double> tol = std::nullopt);

/// Patient counterpart; the scan is restricted to (0, s_hat) where both curves exist.
StationarySolution stationary_patient(const MarketParams& params, std::optional<double> tol = std::nullopt);

StationarySolution stationary(Policy policy, const MarketParams& params, std::optional<double> tol = std::nullopt);

// Curves used by the solvers, exposed for testing. NaN or +inf outside their domain.
double greedy_curve_f(double s1, const MarketParams& params);
double greedy_curve_g(double s1, const MarketParams& params);
double patient_curve_f(double s1, const MarketParams& params);
double patient_curve_g(double s1, const MarketParams& params);

/// Root s* of lambda*m = s * (2 - (1-alpha)^s): where the Patient f reaches zero.
double patient_positivity_root(const MarketParams& params);
/// min(s*, s**) with s** the first s1 at which the Patient g stops being defined.
double patient_domain_bound(const MarketParams& params);

/// Loss at a stationary (or any fixed) state: Greedy s_k / rate_k, Patient
/// s_k * perish_prob_k / rate_k; the total weights each type by its arrival rate.
LossReport loss_ode(Policy policy, const OdeState& sizes, const MarketParams& params);

/// Time-averaged loss integrand over the trajectory samples with t >= window_start.
LossReport loss_ode(Policy policy, const Trajectory& trajectory, const MarketParams& params, double window_start);

/// Little's-law mean sojourn per type: s_k / rate_k.
std::vector<double> little_waiting_times(const OdeState& sizes, const MarketParams& params);

enum class Regime { GreedyLinear, PatientSupercritical, PatientSubcritical, PatientCritical };
std::string_view to_string(Regime regime);

/// Leading-order large-d behaviour of the stationary loss.
struct AsymptoticPrediction {
  Regime regime = Regime::GreedyLinear;
  /// Greedy: power of 1/d in the loss (1). Patient: exponent c in exp(-c d) for hard types.
  double predicted_exponent_or_rate = 1.0;
  /// Patient only: exponent for the easy type (always 1/2).
  double easy_exponent = 0.0;
  /// Leading-order stationary sizes, when known in closed form.
  std::optional<std::vector<double>> predicted_sizes;
};

AsymptoticPrediction asymptotic_prediction(Policy policy, const MarketParams& params);

/// JSON record: params, sizes, residual, losses, waits, regime.
std::string stationary_report_json(const StationarySolution& solution);

}  // namespace dynmatch
