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

#include "dynmatch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dynmatch/rng.hpp"
#include "dynmatch/stationary.hpp"
#include "json.hpp"

namespace dynmatch {

std::string_view to_string(Engine engine) { return engine == Engine::Discrete ? "discrete" : "ode"; }

std::string_view to_string(SweepAxis axis) { return axis == SweepAxis::Density ? "d" : "lambda"; }

Engine parse_engine(std::string_view text) {
  if (text == "discrete") return Engine::Discrete;
  if (text == "ode") return Engine::Ode;
  throw std::invalid_argument("unknown engine '" + std::string(text) + "' (expected discrete or ode)");
}

SweepAxis parse_axis(std::string_view text) {
  if (text == "d" || text == "density") return SweepAxis::Density;
  if (text == "lambda") return SweepAxis::Lambda;
  throw std::invalid_argument("unknown axis '" + std::string(text) + "' (expected d or lambda)");
}

MarketParams cell_params(const SweepSpec& spec, double value) {
  return spec.axis == SweepAxis::Density ? spec.base.with_density(value) : spec.base.with_lambda(value);
}

std::uint64_t cell_seed(const SweepSpec& spec, std::size_t value_index, std::size_t policy_index, std::size_t rep) {
  const std::uint64_t cell = value_index * spec.policies.size() + policy_index;
  return derive_seed(spec.seed, (cell << 32) + rep);
}

namespace {

template <typename T>
void require_unique(const std::vector<T>& items, const char* what) {
  if (items.empty()) throw std::invalid_argument(std::string("sweep needs at least one ") + what);
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (items[i] == items[j]) throw std::invalid_argument(std::string("duplicate ") + what + " in sweep");
    }
  }
}

SimConfig discrete_config(const SweepSpec& spec, const MarketParams& params, Policy policy, std::uint64_t seed) {
  SimConfig config;
  config.params = params;
  config.policy = policy;
  config.tie_break = spec.discrete.tie_break;
  config.edge_mode = spec.discrete.edge_mode;
  config.clock = spec.discrete.clock;
  config.stop = spec.discrete.stop;
  config.warmup = spec.discrete.warmup;
  config.seed = seed;
  return config;
}

struct RepStats {
  std::vector<double> loss;  // per type, then total
  std::vector<double> waits;
  std::vector<double> pool;
};

RepStats run_replication(const SimConfig& config) {
  const SimResult result = run_simulation(config);
  if (!conservation_holds(result.metrics)) throw std::logic_error("agent conservation violated");
  const LossReport loss = loss_from_metrics(result.metrics);
  RepStats out;
  out.loss = loss.per_type;
  out.loss.push_back(loss.total);
  out.waits = waiting_times(result.metrics);
  out.pool = mean_pool_sizes(result.metrics);
  return out;
}

/// Runs `count` independent tasks on up to `jobs` threads; task i writes only slot i.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::string cell_label(const SweepSpec& spec, double value, Policy policy, Engine engine) {
  std::ostringstream out;
  out << "cell (" << to_string(spec.axis) << "=" << value << ", " << to_string(policy) << ", " << to_string(engine)
      << ")";
  return out.str();
}

}  // namespace

void validate_sweep(const SweepSpec& spec) {
  validate_params(spec.base);
  require_unique(spec.values, "axis value");
  require_unique(spec.policies, "policy");
  require_unique(spec.engines, "engine");
  if (spec.replications < 1) throw std::invalid_argument("replications must be at least 1");
  for (double v : spec.values) {
    const MarketParams params = cell_params(spec, v);
    validate_params(params);
    if (std::find(spec.engines.begin(), spec.engines.end(), Engine::Discrete) != spec.engines.end()) {
      validate_config(discrete_config(spec, params, spec.policies.front(), spec.seed));
    }
  }
}

std::pair<double, double> mean_and_se(const std::vector<double>& sample) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : sample) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  if (n == 0) return {std::nan(""), std::nan("")};
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : sample) {
    if (!std::isnan(x)) ss += (x - mean) * (x - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

const SweepRow& SweepResult::find(double axis_value, Policy policy, Engine engine) const {
  for (const auto& row : rows) {
    if (row.axis_value == axis_value && row.policy == policy && row.engine == engine) return row;
  }
  throw std::out_of_range("no sweep row for the requested cell");
}

SweepResult run_sweep(const SweepSpec& spec) {
  validate_sweep(spec);
  const std::size_t nv = spec.values.size();
  const std::size_t np = spec.policies.size();
  const bool has_discrete =
      std::find(spec.engines.begin(), spec.engines.end(), Engine::Discrete) != spec.engines.end();
  const bool has_ode = std::find(spec.engines.begin(), spec.engines.end(), Engine::Ode) != spec.engines.end();

  // Discrete tasks: (value, policy, rep); ODE tasks: (value, policy).
  const std::size_t reps = has_discrete ? spec.replications : 0;
  const std::size_t discrete_tasks = nv * np * reps;
  const std::size_t ode_tasks = has_ode ? nv * np : 0;
  std::vector<RepStats> rep_out(discrete_tasks);
  std::vector<std::optional<StationarySolution>> ode_out(ode_tasks);
  std::vector<std::string> errors(discrete_tasks + ode_tasks);

  parallel_for(discrete_tasks + ode_tasks, spec.jobs, [&](std::size_t task) {
    try {
      if (task < discrete_tasks) {
        const std::size_t rep = task % reps;
        const std::size_t pi = (task / reps) % np;
        const std::size_t vi = task / reps / np;
        const auto config =
            discrete_config(spec, cell_params(spec, spec.values[vi]), spec.policies[pi], cell_seed(spec, vi, pi, rep));
        rep_out[task] = run_replication(config);
      } else {
        const std::size_t idx = task - discrete_tasks;
        const std::size_t pi = idx % np;
        const std::size_t vi = idx / np;
        ode_out[idx] = stationary(spec.policies[pi], cell_params(spec, spec.values[vi]));
      }
    } catch (const std::exception& e) {
      std::size_t vi, pi;
      Engine engine;
      if (task < discrete_tasks) {
        pi = (task / reps) % np;
        vi = task / reps / np;
        engine = Engine::Discrete;
      } else {
        pi = (task - discrete_tasks) % np;
        vi = (task - discrete_tasks) / np;
        engine = Engine::Ode;
      }
      errors[task] = cell_label(spec, spec.values[vi], spec.policies[pi], engine) + ": " + e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw std::runtime_error(err);
  }

  SweepResult result;
  result.spec = spec;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    const MarketParams params = cell_params(spec, spec.values[vi]);
    const std::size_t n = params.num_types();
    for (std::size_t pi = 0; pi < np; ++pi) {
      for (Engine engine : spec.engines) {
        SweepRow row;
        row.axis_value = spec.values[vi];
        row.policy = spec.policies[pi];
        row.engine = engine;
        row.params = params;
        if (engine == Engine::Ode) {
          const auto& sol = *ode_out[vi * np + pi];
          row.replications = 1;
          row.loss = sol.loss;
          row.loss_se.assign(n, 0.0);
          row.waits = sol.waits;
          row.wait_se.assign(n, 0.0);
          row.pool.assign(sol.sizes.sizes().begin(), sol.sizes.sizes().end());
          row.pool_se.assign(n, 0.0);
        } else {
          row.replications = reps;
          const std::size_t first = (vi * np + pi) * reps;
          const auto column = [&](auto member, std::size_t k) {
            std::vector<double> sample;
            for (std::size_t r = 0; r < reps; ++r) sample.push_back((rep_out[first + r].*member)[k]);
            return mean_and_se(sample);
          };
          for (std::size_t k = 0; k < n; ++k) {
            const auto [lm, ls] = column(&RepStats::loss, k);
            row.loss.per_type.push_back(lm);
            row.loss_se.push_back(ls);
            const auto [wm, ws] = column(&RepStats::waits, k);
            row.waits.push_back(wm);
            row.wait_se.push_back(ws);
            const auto [pm, ps] = column(&RepStats::pool, k);
            row.pool.push_back(pm);
            row.pool_se.push_back(ps);
          }
          const auto [tm, ts] = column(&RepStats::loss, n);
          row.loss.total = tm;
          row.loss_total_se = ts;
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  const std::size_t n = result.spec.base.num_types();
  out << "axis_value,policy,engine,replications,loss_total";
  for (std::size_t k = 0; k < n; ++k) out << ",loss_type_" << k;
  out << ",se_loss_total";
  for (std::size_t k = 0; k < n; ++k) out << ",se_loss_type_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",wait_type_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",se_wait_type_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",pool_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",se_pool_" << k;
  out << '\n';
  std::ostringstream line;
  line << std::setprecision(12);
  for (const auto& row : result.rows) {
    line.str("");
    line << row.axis_value << ',' << to_string(row.policy) << ',' << to_string(row.engine) << ',' << row.replications
         << ',' << row.loss.total;
    for (double v : row.loss.per_type) line << ',' << v;
    line << ',' << row.loss_total_se;
    for (const auto* col : {&row.loss_se, &row.waits, &row.wait_se, &row.pool, &row.pool_se}) {
      for (double v : *col) line << ',' << v;
    }
    out << line.str() << '\n';
  }
}

ScalingResult scaling_check(const MarketParams& base, const std::vector<double>& d_values, Policy policy,
                            Engine engine, double threshold, std::size_t replications, std::uint64_t seed,
                            const DiscreteOptions& discrete, std::size_t jobs) {
  SweepSpec spec;
  spec.base = base;
  spec.axis = SweepAxis::Density;
  spec.values = d_values;
  spec.policies = {policy};
  spec.engines = {engine};
  spec.replications = replications;
  spec.seed = seed;
  spec.discrete = discrete;
  spec.jobs = jobs;
  const SweepResult sweep = run_sweep(spec);

  ScalingResult out;
  out.policy = policy;
  out.engine = engine;
  out.d_values = d_values;
  for (const auto& row : sweep.rows) out.scaled.push_back(std::exp(row.axis_value / 2.0) * row.loss.per_type[0]);
  const auto [lo, hi] = std::minmax_element(out.scaled.begin(), out.scaled.end());
  out.max_min_ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  out.plateau = out.max_min_ratio <= threshold;
  return out;
}

RatioCurve ratio_curve(const MarketParams& base, const std::vector<double>& d_values, Engine engine,
                       std::size_t replications, std::uint64_t seed, const DiscreteOptions& discrete,
                       std::size_t jobs, double se_band) {
  SweepSpec spec;
  spec.base = base;
  spec.axis = SweepAxis::Density;
  spec.values = d_values;
  spec.policies = {Policy::Patient, Policy::Greedy};
  spec.engines = {engine};
  spec.replications = replications;
  spec.seed = seed;
  spec.discrete = discrete;
  spec.jobs = jobs;
  const SweepResult sweep = run_sweep(spec);

  RatioCurve out;
  out.engine = engine;
  out.d_values = d_values;
  for (double d : d_values) {
    const auto& pat = sweep.find(d, Policy::Patient, engine);
    const auto& gre = sweep.find(d, Policy::Greedy, engine);
    const double r = pat.loss.total / gre.loss.total;
    out.ratio.push_back(r);
    const double rel_p = pat.loss.total > 0.0 ? pat.loss_total_se / pat.loss.total : 0.0;
    const double rel_g = gre.loss.total > 0.0 ? gre.loss_total_se / gre.loss.total : 0.0;
    out.ratio_se.push_back(std::abs(r) * std::sqrt(rel_p * rel_p + rel_g * rel_g));
  }
  for (std::size_t i = 0; i + 1 < out.ratio.size(); ++i) {
    const bool broken = engine == Engine::Ode
                            ? !(out.ratio[i + 1] < out.ratio[i])
                            : out.ratio[i + 1] - out.ratio[i] >
                                  se_band * std::hypot(out.ratio_se[i], out.ratio_se[i + 1]);
    if (broken) {
      out.monotone = false;
      out.first_violation = std::make_pair(i, i + 1);
      break;
    }
  }
  return out;
}

PhaseWitness phase_transition_witness(const MarketParams& base, double lambda_low, double lambda_high) {
  PhaseWitness out;
  out.lambda_low = lambda_low;
  out.lambda_high = lambda_high;
  const auto low = stationary_patient(base.with_lambda(lambda_low));
  const auto high = stationary_patient(base.with_lambda(lambda_high));
  out.hard_ratio = high.loss.per_type[1] / low.loss.per_type[1];
  out.easy_ratio = high.loss.per_type[0] / low.loss.per_type[0];
  out.passed = out.hard_ratio >= 5.0 && out.easy_ratio >= 0.5 && out.easy_ratio <= 2.0;
  return out;
}

std::vector<CoherenceCell> engine_coherence(const SweepResult& result, double rel_tol, double se_mult,
                                            double min_density) {
  std::vector<CoherenceCell> out;
  for (const auto& row : result.rows) {
    if (row.engine != Engine::Discrete) continue;
    const SweepRow* ode = nullptr;
    for (const auto& other : result.rows) {
      if (other.engine == Engine::Ode && other.policy == row.policy && other.axis_value == row.axis_value) {
        ode = &other;
      }
    }
    if (ode == nullptr) continue;
    for (TypeIndex k = 0; k < row.loss.per_type.size(); ++k) {
      CoherenceCell cell;
      cell.axis_value = row.axis_value;
      cell.policy = row.policy;
      cell.type = k;
      cell.discrete = row.loss.per_type[k];
      cell.ode = ode->loss.per_type[k];
      cell.se = row.loss_se[k];
      cell.exempt = row.params.d < min_density;
      const double band = std::max(rel_tol * std::abs(cell.ode), se_mult * cell.se);
      cell.passed = cell.exempt || std::abs(cell.discrete - cell.ode) <= band;
      out.push_back(cell);
    }
  }
  return out;
}

std::string summary_json(const SweepResult* sweep, const std::vector<CoherenceCell>* coherence,
                         const std::vector<ScalingResult>* scaling, const RatioCurve* ratio,
                         const PhaseWitness* phase) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::object();
  if (sweep != nullptr) {
    j["axis"] = to_string(sweep->spec.axis);
    j["values"] = sweep->spec.values;
    j["rows"] = sweep->rows.size();
  }
  if (coherence != nullptr) {
    bool all = true;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : *coherence) {
      all = all && c.passed;
      cells.push_back({{"axis_value", c.axis_value},
                       {"policy", to_string(c.policy)},
                       {"type", c.type},
                       {"discrete", c.discrete},
                       {"ode", c.ode},
                       {"se", c.se},
                       {"exempt", c.exempt},
                       {"passed", c.passed}});
    }
    j["engine_coherence"] = cells;
    verdicts["engine_coherence"] = all;
  }
  if (scaling != nullptr) {
    bool all = true;
    auto items = nlohmann::ordered_json::array();
    for (const auto& s : *scaling) {
      all = all && s.plateau;
      items.push_back({{"policy", to_string(s.policy)},
                       {"engine", to_string(s.engine)},
                       {"d_values", s.d_values},
                       {"scaled_loss_type_0", s.scaled},
                       {"max_min_ratio", s.max_min_ratio},
                       {"plateau", s.plateau}});
    }
    j["scaling"] = items;
    verdicts["plateau"] = all;
  }
  if (ratio != nullptr) {
    nlohmann::ordered_json r = {{"engine", to_string(ratio->engine)},
                                {"d_values", ratio->d_values},
                                {"ratio", ratio->ratio},
                                {"ratio_se", ratio->ratio_se},
                                {"monotone", ratio->monotone}};
    if (ratio->first_violation) {
      r["first_violation"] = {ratio->first_violation->first, ratio->first_violation->second};
    }
    j["ratio_curve"] = r;
    verdicts["monotone_ratio"] = ratio->monotone;
  }
  if (phase != nullptr) {
    j["phase_transition"] = {{"lambda_low", phase->lambda_low},
                             {"lambda_high", phase->lambda_high},
                             {"hard_ratio", phase->hard_ratio},
                             {"easy_ratio", phase->easy_ratio},
                             {"passed", phase->passed}};
    verdicts["phase_transition_witness"] = phase->passed;
  }
  j["verdicts"] = verdicts;
  return j.dump(2);
}

}  // namespace dynmatch
