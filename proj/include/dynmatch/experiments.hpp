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

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dynmatch/market.hpp"
#include "dynmatch/simulation.hpp"

namespace dynmatch {

enum class Engine { Discrete, Ode };
enum class SweepAxis { Density, Lambda };

std::string_view to_string(Engine engine);
std::string_view to_string(SweepAxis axis);
Engine parse_engine(std::string_view text);
SweepAxis parse_axis(std::string_view text);

/// Options shared by every discrete cell of a sweep.
struct DiscreteOptions {
  StopRule stop = StopRule::by_events(20000);
  std::optional<double> warmup;  ///< defaults to 75% of the budget
  TieBreak tie_break = TieBreak::TypeUniform;
  EdgeMode edge_mode = EdgeMode::Lazy;
  CriticalityClock clock = CriticalityClock::Aggregate;
};

struct SweepSpec {
  MarketParams base;
  SweepAxis axis = SweepAxis::Density;
  std::vector<double> values;
  std::vector<Policy> policies{Policy::Greedy, Policy::Patient};
  std::vector<Engine> engines{Engine::Discrete, Engine::Ode};
  std::size_t replications = 20;
  std::uint64_t seed = 1;
  DiscreteOptions discrete;
  std::size_t jobs = 1;  ///< worker threads; 0 means hardware concurrency
};

/// Throws InvalidParams / std::invalid_argument naming the offending value.
void validate_sweep(const SweepSpec& spec);

/// Params of the cell at `value` on the spec's axis.
MarketParams cell_params(const SweepSpec& spec, double value);

/// Seed of replication `rep` of discrete cell (`value_index`, `policy_index`).
std::uint64_t cell_seed(const SweepSpec& spec, std::size_t value_index, std::size_t policy_index, std::size_t rep);

/// One (axis value, policy, engine) cell. Discrete cells carry replication means
/// and standard errors; ODE cells carry the stationary values with zero errors.
struct SweepRow {
  double axis_value = 0.0;
  Policy policy = Policy::Greedy;
  Engine engine = Engine::Ode;
  MarketParams params;
  std::size_t replications = 0;
  LossReport loss;
  std::vector<double> loss_se;
  double loss_total_se = 0.0;
  std::vector<double> waits;
  std::vector<double> wait_se;
  std::vector<double> pool;
  std::vector<double> pool_se;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;  ///< ordered by value, then policy, then engine

  const SweepRow& find(double axis_value, Policy policy, Engine engine) const;
};

/// Runs every cell, replications concurrently up to `spec.jobs`. Output does not
/// depend on the job count. Engine errors are rethrown annotated with the cell.
SweepResult run_sweep(const SweepSpec& spec);

/// Columns: axis_value,policy,engine,replications,loss_total,loss_type_k..,
/// se_loss_total,se_loss_type_k..,wait_type_k..,se_wait_type_k..,pool_k..,se_pool_k..
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Mean and standard error of a sample (NaN entries skipped; SE 0 for n < 2).
std::pair<double, double> mean_and_se(const std::vector<double>& sample);

struct ScalingResult {
  Policy policy = Policy::Patient;
  Engine engine = Engine::Ode;
  std::vector<double> d_values;
  std::vector<double> scaled;  ///< e^{d/2} * loss of the easy type
  double max_min_ratio = 1.0;
  bool plateau = true;         ///< max/min <= threshold
};

/// e^{d/2} * easy-type loss over `d_values`; a plateau is max/min <= `threshold`.
ScalingResult scaling_check(const MarketParams& base, const std::vector<double>& d_values,
                            Policy policy = Policy::Patient, Engine engine = Engine::Ode, double threshold = 2.0,
                            std::size_t replications = 20, std::uint64_t seed = 1, const DiscreteOptions& discrete = {},
                            std::size_t jobs = 1);

struct RatioCurve {
  Engine engine = Engine::Ode;
  std::vector<double> d_values;
  std::vector<double> ratio;     ///< Patient total loss / Greedy total loss
  std::vector<double> ratio_se;  ///< delta-method SE (0 for the ODE engine)
  bool monotone = true;
  /// First adjacent pair (i, i+1) that breaks the decrease.
  std::optional<std::pair<std::size_t, std::size_t>> first_violation;
};

/// Patient/Greedy loss ratio along d. ODE: strict decrease. Discrete: a step may
/// rise by at most `se_band` combined standard errors.
RatioCurve ratio_curve(const MarketParams& base, const std::vector<double>& d_values, Engine engine = Engine::Ode,
                       std::size_t replications = 20, std::uint64_t seed = 1, const DiscreteOptions& discrete = {},
                       std::size_t jobs = 1, double se_band = 2.0);

struct PhaseWitness {
  double lambda_low = 0.15;
  double lambda_high = 0.35;
  double hard_ratio = 0.0;  ///< hard-type loss at lambda_high / at lambda_low
  double easy_ratio = 0.0;
  bool passed = false;      ///< hard_ratio >= 5 and easy_ratio in [1/2, 2]
};

/// Patient stationary losses (ODE) at two hard shares, other params from `base`.
PhaseWitness phase_transition_witness(const MarketParams& base, double lambda_low = 0.15, double lambda_high = 0.35);

struct CoherenceCell {
  double axis_value = 0.0;
  Policy policy = Policy::Greedy;
  TypeIndex type = 0;
  double discrete = 0.0;
  double ode = 0.0;
  double se = 0.0;
  bool exempt = false;  ///< d below the small-density threshold
  bool passed = true;
};

/// Discrete mean within max(rel_tol relative, se_mult SE) of the ODE value, per
/// type, for cells with both engines. Cells with d < min_density are exempt.
std::vector<CoherenceCell> engine_coherence(const SweepResult& result, double rel_tol = 0.10, double se_mult = 3.0,
                                            double min_density = 4.0);

/// JSON summary: axis, verdict flags and per-check details. Absent checks are omitted.
std::string summary_json(const SweepResult* sweep, const std::vector<CoherenceCell>* coherence,
                         const std::vector<ScalingResult>* scaling, const RatioCurve* ratio,
                         const PhaseWitness* phase);

}  // namespace dynmatch
