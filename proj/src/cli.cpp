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

#include "dynmatch/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "dynmatch/experiments.hpp"
#include "dynmatch/market.hpp"
#include "dynmatch/ode.hpp"
#include "dynmatch/simulation.hpp"
#include "dynmatch/stationary.hpp"
#include "json.hpp"

namespace dynmatch::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Thrown for bad user input; reported as a usage error.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CliConfig {
  std::string subcommand;
  // Market.
  int p = 2;
  double lambda = 0.2;
  double m = 8000.0;
  std::optional<double> d;
  std::optional<double> alpha;
  double horizon = 20.0;
  // Engines.
  std::string policy = "greedy";
  std::vector<std::string> policies{"greedy", "patient"};
  std::vector<std::string> engines{"discrete", "ode"};
  std::string engine = "ode";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> events;
  std::optional<double> time;
  std::optional<double> warmup;
  std::string tie_break = "type-uniform";
  std::string edge_mode = "lazy";
  std::string clock = "aggregate";
  bool trace = false;
  bool audit = false;
  // ODE.
  std::optional<double> t_end;
  double tol = 1e-9;
  std::size_t samples = 101;
  std::string initial;
  std::optional<double> window_start;
  std::optional<double> stationary_tol;
  // Experiments.
  std::string axis = "d";
  std::string values;
  std::string lambdas;
  std::size_t reps = 20;
  std::size_t jobs = 1;
  double threshold = 2.0;
  // Output.
  std::string out_dir;
  std::string format = "both";
  bool assert_plateau = false;
  bool assert_monotone = false;
  bool assert_coherence = false;
  bool assert_phase = false;
  int verbose = 0;
};

class Outputs {
 public:
  Outputs(const CliConfig& cfg, std::ostream& log) : dir_(cfg.out_dir), format_(cfg.format), log_(log) {}

  bool csv() const { return format_ == "csv" || format_ == "both"; }
  bool json() const { return format_ == "json" || format_ == "both"; }

  void prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    const fs::path probe = dir_ / ".dynmatch_write_probe";
    {
      std::ofstream f(probe);
      if (!f) throw UsageError("output directory '" + dir_.string() + "' is not writable");
    }
    fs::remove(probe, ec);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
    written_.push_back(name);
    log_ << "wrote " << path.string() << '\n';
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::string format_;
  std::ostream& log_;
  std::vector<std::string> written_;
};

double round_sig(double x) {
  if (x == 0.0) return 0.0;
  std::ostringstream s;
  s << std::setprecision(12) << x;
  return std::stod(s.str());
}

MarketParams resolve_params(const CliConfig& cfg) {
  if (cfg.alpha) return validate_params(MarketParams::from_alpha(cfg.p, cfg.lambda, cfg.m, *cfg.alpha, cfg.horizon));
  return validate_params(MarketParams::from_density(cfg.p, cfg.lambda, cfg.m, cfg.d.value_or(10.0), cfg.horizon));
}

StopRule resolve_stop(const CliConfig& cfg) {
  if (cfg.time) return StopRule::by_time(*cfg.time);
  return StopRule::by_events(cfg.events.value_or(20000));
}

CriticalityClock parse_clock(std::string_view text) {
  if (text == "aggregate") return CriticalityClock::Aggregate;
  if (text == "calendar") return CriticalityClock::Calendar;
  throw UsageError("unknown clock '" + std::string(text) + "' (expected aggregate or calendar)");
}

DiscreteOptions resolve_discrete(const CliConfig& cfg) {
  DiscreteOptions opt;
  opt.stop = resolve_stop(cfg);
  opt.warmup = cfg.warmup;
  opt.tie_break = parse_tie_break(cfg.tie_break);
  opt.edge_mode = parse_edge_mode(cfg.edge_mode);
  opt.clock = parse_clock(cfg.clock);
  return opt;
}

std::vector<Policy> resolve_policies(const std::vector<std::string>& names) {
  std::vector<Policy> out;
  for (const auto& n : names) out.push_back(parse_policy(n));
  return out;
}

std::vector<Engine> resolve_engines(const std::vector<std::string>& names) {
  std::vector<Engine> out;
  for (const auto& n : names) out.push_back(parse_engine(n));
  return out;
}

Json params_json(const MarketParams& p) {
  return {{"p", p.p}, {"lambda", p.lambda}, {"m", p.m}, {"alpha", p.alpha}, {"d", p.d}, {"horizon", p.horizon}};
}

Json stop_json(const StopRule& stop, std::optional<double> warmup) {
  SimConfig tmp;
  tmp.stop = stop;
  tmp.warmup = warmup;
  return {{"kind", stop.kind == StopRule::Kind::ByTime ? "time" : "events"},
          {"bound", stop.bound()},
          {"warmup", tmp.effective_warmup()}};
}

Json discrete_json(const DiscreteOptions& opt) {
  return {{"stop", stop_json(opt.stop, opt.warmup)},
          {"tie_break", to_string(opt.tie_break)},
          {"edge_mode", to_string(opt.edge_mode)},
          {"clock", opt.clock == CriticalityClock::Aggregate ? "aggregate" : "calendar"}};
}

// ---------------------------------------------------------------------------

int run_simulate(const CliConfig& cfg, Outputs& outs, Json& manifest) {
  SimConfig config;
  config.params = resolve_params(cfg);
  config.policy = parse_policy(cfg.policy);
  const DiscreteOptions opt = resolve_discrete(cfg);
  config.tie_break = opt.tie_break;
  config.edge_mode = opt.edge_mode;
  config.clock = opt.clock;
  config.stop = opt.stop;
  config.warmup = opt.warmup;
  config.seed = cfg.seed;
  config.record_trace = cfg.trace;
  config.audit_graph = cfg.audit;
  validate_config(config);
  manifest["params"] = params_json(config.params);
  manifest["policy"] = to_string(config.policy);
  manifest["seed"] = cfg.seed;
  manifest["discrete"] = discrete_json(opt);
  manifest["trace"] = cfg.trace;
  manifest["audit"] = cfg.audit;

  const SimResult result = run_simulation(config);
  const SimMetrics& mt = result.metrics;
  const LossReport loss = loss_from_metrics(mt);
  const auto waits = waiting_times(mt);
  const auto pools = mean_pool_sizes(mt);
  const std::size_t n = mt.num_types();

  if (outs.json()) {
    Json types = Json::array();
    for (std::size_t k = 0; k < n; ++k) {
      types.push_back({{"type", k},
                       {"arrivals", mt.window.arrivals[k]},
                       {"matched", mt.window.matched[k]},
                       {"perished", mt.window.perished[k]},
                       {"loss", loss.per_type[k]},
                       {"mean_wait", std::isfinite(waits[k]) ? Json(waits[k]) : Json(nullptr)},
                       {"mean_pool", pools[k]},
                       {"final_pool", mt.final_pool[k]}});
    }
    Json j = {{"policy", to_string(config.policy)},
              {"seed", cfg.seed},
              {"events", mt.total.events},
              {"window_events", mt.window.events},
              {"window_start", mt.window.start_time},
              {"window_end", mt.window.end_time},
              {"loss_total", loss.total},
              {"conservation", conservation_holds(mt)},
              {"types", types}};
    if (result.audit) {
      j["audit"] = {{"decisions_checked", result.audit->decisions_checked},
                    {"priority_violations", result.audit->priority_violations},
                    {"independence_checks", result.audit->independence_checks},
                    {"pool_edges_seen", result.audit->pool_edges_seen}};
    }
    outs.write("simulate.json", j.dump(2) + "\n");
  }
  if (outs.csv()) {
    std::ostringstream s;
    s << std::setprecision(12) << "type,arrivals,matched,perished,loss,mean_wait,mean_pool,final_pool\n";
    for (std::size_t k = 0; k < n; ++k) {
      s << k << ',' << mt.window.arrivals[k] << ',' << mt.window.matched[k] << ',' << mt.window.perished[k] << ','
        << loss.per_type[k] << ',' << waits[k] << ',' << pools[k] << ',' << mt.final_pool[k] << '\n';
    }
    outs.write("simulate.csv", s.str());
  }
  if (cfg.trace) {
    std::ostringstream s;
    write_trace_csv(s, result.trace, n);
    outs.write("trace.csv", s.str());
  }
  return conservation_holds(mt) ? kExitOk : kExitVerdictFailed;
}

int run_ode(const CliConfig& cfg, Outputs& outs, Json& manifest) {
  const MarketParams params = resolve_params(cfg);
  const Policy policy = parse_policy(cfg.policy);
  const double t_end = cfg.t_end.value_or(params.horizon);
  if (!(t_end > 0.0)) throw UsageError("--t-end must be positive");
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive");
  OdeState initial = OdeState::empty(params.num_types());
  if (!cfg.initial.empty()) {
    const auto v = parse_values(cfg.initial);
    if (v.size() != params.num_types()) throw UsageError("--initial needs p+1 comma-separated sizes");
    try {
      initial = OdeState(v);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const double window_start = cfg.window_start.value_or(0.5 * t_end);
  manifest["params"] = params_json(params);
  manifest["policy"] = to_string(policy);
  manifest["t_end"] = t_end;
  manifest["tol"] = cfg.tol;
  manifest["samples"] = cfg.samples;
  manifest["initial"] = std::vector<double>(initial.sizes().begin(), initial.sizes().end());
  manifest["window_start"] = window_start;

  const auto samples = linspace_samples(t_end, std::max<std::size_t>(cfg.samples, 2));
  const Trajectory traj = integrate(policy, initial, params, t_end, cfg.tol, samples);
  if (outs.csv()) {
    std::ostringstream s;
    write_trajectory_csv(s, traj);
    outs.write("trajectory.csv", s.str());
  }
  if (outs.json()) {
    const LossReport loss = loss_ode(policy, traj, params, window_start);
    Json j = {{"policy", to_string(policy)},
              {"final_state", traj.final_state()},
              {"accepted_steps", traj.accepted_steps},
              {"rejected_steps", traj.rejected_steps},
              {"clip_events", traj.clip_events},
              {"window_start", window_start},
              {"loss_per_type", loss.per_type},
              {"loss_total", loss.total}};
    outs.write("ode.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

int run_stationary(const CliConfig& cfg, Outputs& outs, Json& manifest) {
  const MarketParams params = resolve_params(cfg);
  const Policy policy = parse_policy(cfg.policy);
  const double tol = cfg.stationary_tol.value_or(default_stationary_tol(params));
  manifest["params"] = params_json(params);
  manifest["policy"] = to_string(policy);
  manifest["tol"] = tol;
  const StationarySolution sol = stationary(policy, params, tol);
  if (outs.json()) outs.write("stationary.json", stationary_report_json(sol) + "\n");
  if (outs.csv()) {
    std::ostringstream s;
    s << std::setprecision(17) << "type,size,loss,wait\n";
    for (std::size_t k = 0; k < params.num_types(); ++k) {
      s << k << ',' << sol.sizes[k] << ',' << sol.loss.per_type[k] << ',' << sol.waits[k] << '\n';
    }
    outs.write("stationary.csv", s.str());
  }
  return sol.residual < tol ? kExitOk : kExitVerdictFailed;
}

SweepSpec build_sweep(const CliConfig& cfg, bool force_both_engines) {
  SweepSpec spec;
  spec.base = resolve_params(cfg);
  spec.axis = parse_axis(cfg.axis);
  if (cfg.values.empty()) throw UsageError("--values is required");
  spec.values = parse_values(cfg.values);
  spec.policies = resolve_policies(cfg.policies);
  spec.engines = force_both_engines ? std::vector<Engine>{Engine::Discrete, Engine::Ode} : resolve_engines(cfg.engines);
  spec.replications = cfg.reps;
  spec.seed = cfg.seed;
  spec.discrete = resolve_discrete(cfg);
  spec.jobs = cfg.jobs;
  validate_sweep(spec);
  return spec;
}

Json sweep_manifest(const SweepSpec& spec) {
  std::vector<std::string> policies, engines;
  for (auto p : spec.policies) policies.emplace_back(to_string(p));
  for (auto e : spec.engines) engines.emplace_back(to_string(e));
  return {{"params", params_json(spec.base)},
          {"axis", to_string(spec.axis)},
          {"values", spec.values},
          {"policies", policies},
          {"engines", engines},
          {"replications", spec.replications},
          {"seed", spec.seed},
          {"jobs", spec.jobs},
          {"discrete", discrete_json(spec.discrete)}};
}

int run_sweep_cmd(const CliConfig& cfg, Outputs& outs, Json& manifest, bool compare) {
  const SweepSpec spec = build_sweep(cfg, compare);
  manifest.update(sweep_manifest(spec));
  const bool want_coherence = compare || cfg.assert_coherence;
  const bool want_phase = cfg.assert_phase;
  manifest["assert_coherence"] = want_coherence;
  manifest["assert_phase"] = want_phase;

  const SweepResult result = run_sweep(spec);
  const auto coherence = engine_coherence(result);
  std::optional<PhaseWitness> phase;
  if (want_phase) phase = phase_transition_witness(spec.base);

  if (outs.csv()) {
    std::ostringstream s;
    write_sweep_csv(s, result);
    outs.write("sweep.csv", s.str());
  }
  if (outs.json()) {
    outs.write("summary.json",
               summary_json(&result, coherence.empty() ? nullptr : &coherence, nullptr, nullptr,
                            phase ? &*phase : nullptr) +
                   "\n");
  }
  bool ok = true;
  if (want_coherence) {
    if (coherence.empty()) throw UsageError("coherence assertion needs both discrete and ode engines");
    for (const auto& c : coherence) ok = ok && c.passed;
  }
  if (phase) ok = ok && phase->passed;
  return ok ? kExitOk : kExitVerdictFailed;
}

int run_scaling(const CliConfig& cfg, Outputs& outs, Json& manifest) {
  const MarketParams base = resolve_params(cfg);
  const auto policies = resolve_policies(cfg.policies);
  bool any_patient = false;
  for (auto p : policies) any_patient = any_patient || p == Policy::Patient;
  if (cfg.assert_plateau && !any_patient) {
    throw UsageError("invalid combination: --assert-plateau needs the patient policy (greedy loss has no plateau)");
  }
  const auto d_values = parse_values(cfg.values.empty() ? "6:14:1" : cfg.values);
  const auto lambdas = cfg.lambdas.empty() ? std::vector<double>{base.lambda} : parse_values(cfg.lambdas);
  const Engine engine = parse_engine(cfg.engine);
  const DiscreteOptions discrete = resolve_discrete(cfg);
  for (double l : lambdas) validate_params(base.with_lambda(l));

  manifest["params"] = params_json(base);
  manifest["d_values"] = d_values;
  manifest["lambdas"] = lambdas;
  manifest["policies"] = cfg.policies;
  manifest["engine"] = to_string(engine);
  manifest["threshold"] = cfg.threshold;
  manifest["replications"] = cfg.reps;
  manifest["seed"] = cfg.seed;
  manifest["discrete"] = discrete_json(discrete);
  manifest["assert_plateau"] = cfg.assert_plateau;

  std::vector<ScalingResult> results;
  std::vector<double> result_lambda;
  for (double l : lambdas) {
    for (auto policy : policies) {
      results.push_back(scaling_check(base.with_lambda(l), d_values, policy, engine, cfg.threshold, cfg.reps, cfg.seed,
                                      discrete, cfg.jobs));
      result_lambda.push_back(l);
    }
  }
  if (outs.csv()) {
    std::ostringstream s;
    s << std::setprecision(12) << "lambda,policy,engine,d,scaled_loss_type_0\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (std::size_t k = 0; k < results[i].d_values.size(); ++k) {
        s << result_lambda[i] << ',' << to_string(results[i].policy) << ',' << to_string(results[i].engine) << ','
          << results[i].d_values[k] << ',' << results[i].scaled[k] << '\n';
      }
    }
    outs.write("scaling.csv", s.str());
  }
  if (outs.json()) outs.write("summary.json", summary_json(nullptr, nullptr, &results, nullptr, nullptr) + "\n");
  bool ok = true;
  if (cfg.assert_plateau) {
    for (const auto& r : results) {
      if (r.policy == Policy::Patient) ok = ok && r.plateau;
    }
  }
  return ok ? kExitOk : kExitVerdictFailed;
}

int run_ratio(const CliConfig& cfg, Outputs& outs, Json& manifest) {
  const MarketParams base = resolve_params(cfg);
  const auto d_values = parse_values(cfg.values.empty() ? "2:10:1" : cfg.values);
  const Engine engine = parse_engine(cfg.engine);
  const DiscreteOptions discrete = resolve_discrete(cfg);
  for (double d : d_values) validate_params(base.with_density(d));
  manifest["params"] = params_json(base);
  manifest["d_values"] = d_values;
  manifest["engine"] = to_string(engine);
  manifest["replications"] = cfg.reps;
  manifest["seed"] = cfg.seed;
  manifest["discrete"] = discrete_json(discrete);
  manifest["assert_monotone"] = cfg.assert_monotone;

  const RatioCurve curve = ratio_curve(base, d_values, engine, cfg.reps, cfg.seed, discrete, cfg.jobs);
  if (outs.csv()) {
    std::ostringstream s;
    s << std::setprecision(12) << "d,ratio,ratio_se\n";
    for (std::size_t i = 0; i < curve.d_values.size(); ++i) {
      s << curve.d_values[i] << ',' << curve.ratio[i] << ',' << curve.ratio_se[i] << '\n';
    }
    outs.write("ratio.csv", s.str());
  }
  if (outs.json()) outs.write("summary.json", summary_json(nullptr, nullptr, nullptr, &curve, nullptr) + "\n");
  return (!cfg.assert_monotone || curve.monotone) ? kExitOk : kExitVerdictFailed;
}

// ---------------------------------------------------------------------------

void add_market_options(CLI::App* app, CliConfig& cfg) {
  app->add_option("--p", cfg.p, "number of hard types")->capture_default_str();
  app->add_option("--lambda", cfg.lambda, "arrival share of each hard type")->capture_default_str();
  app->add_option("--m", cfg.m, "arrival rate")->capture_default_str();
  auto* d = app->add_option("--d", cfg.d, "network density d = alpha * m (default 10)");
  auto* a = app->add_option("--alpha", cfg.alpha, "compatibility probability");
  d->excludes(a);
  a->excludes(d);
  app->add_option("--horizon", cfg.horizon, "end time T")->capture_default_str();
}

void add_output_options(CLI::App* app, CliConfig& cfg) {
  app->add_option("--out", cfg.out_dir, std::string("output directory (default $") + kOutputDirEnv + " or .)");
  app->add_option("--format", cfg.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->capture_default_str();
  app->add_flag("-v,--verbose", cfg.verbose, "progress output");
}

void add_discrete_options(CLI::App* app, CliConfig& cfg) {
  auto* ev = app->add_option("--events", cfg.events, "stop after this many events (default 20000)");
  auto* tm = app->add_option("--time", cfg.time, "stop at this time instead of an event count");
  ev->excludes(tm);
  tm->excludes(ev);
  app->add_option("--warmup", cfg.warmup, "excluded prefix in the stop rule's unit (default 75%)");
  app->add_option("--tie-break", cfg.tie_break, "type-uniform or agent-uniform")
      ->check(CLI::IsMember({"type-uniform", "agent-uniform"}))
      ->capture_default_str();
  app->add_option("--edge-mode", cfg.edge_mode, "lazy or explicit")
      ->check(CLI::IsMember({"lazy", "explicit"}))
      ->capture_default_str();
  app->add_option("--clock", cfg.clock, "aggregate or calendar")
      ->check(CLI::IsMember({"aggregate", "calendar"}))
      ->capture_default_str();
  app->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
}

void add_experiment_options(CLI::App* app, CliConfig& cfg) {
  app->add_option("--reps", cfg.reps, "replications per discrete cell")->capture_default_str();
  app->add_option("--jobs", cfg.jobs, "worker threads (0 = all cores)")->capture_default_str();
}

const CLI::Validator kPolicy = CLI::IsMember({"greedy", "patient"});
const CLI::Validator kEngine = CLI::IsMember({"discrete", "ode"});

int dispatch(CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    cfg.out_dir = (env != nullptr && *env != '\0') ? env : ".";
  }
  std::ostringstream sink;
  Outputs outs(cfg, cfg.verbose > 0 ? err : static_cast<std::ostream&>(sink));
  outs.prepare();
  Json manifest;
  manifest["subcommand"] = cfg.subcommand;
  manifest["format"] = cfg.format;

  int status = kExitOk;
  if (cfg.subcommand == "simulate") status = run_simulate(cfg, outs, manifest);
  else if (cfg.subcommand == "ode") status = run_ode(cfg, outs, manifest);
  else if (cfg.subcommand == "stationary") status = run_stationary(cfg, outs, manifest);
  else if (cfg.subcommand == "sweep") status = run_sweep_cmd(cfg, outs, manifest, false);
  else if (cfg.subcommand == "compare") status = run_sweep_cmd(cfg, outs, manifest, true);
  else if (cfg.subcommand == "scaling") status = run_scaling(cfg, outs, manifest);
  else if (cfg.subcommand == "ratio") status = run_ratio(cfg, outs, manifest);

  manifest["outputs"] = outs.written();
  manifest["exit_status"] = status;
  outs.write("manifest.json", manifest.dump(2) + "\n");
  out << cfg.subcommand << ": " << (status == kExitOk ? "ok" : "verdict failed") << '\n';
  return status;
}

}  // namespace

std::vector<double> parse_values(std::string_view text) {
  const std::string s(text);
  const auto to_num = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size() || !std::isfinite(v)) {
      throw UsageError("invalid number '" + token + "' in value list '" + s + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw UsageError("range must be start:stop:step, got '" + s + "'");
    const double start = to_num(parts[0]), stop = to_num(parts[1]), step = to_num(parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError("range '" + s + "' needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 1'000'000) throw UsageError("range '" + s + "' has too many values");
    for (std::size_t i = 0; i < count; ++i) out.push_back(round_sig(start + static_cast<double>(i) * step));
    return out;
  }
  std::stringstream ss(s);
  for (std::string token; std::getline(ss, token, ',');) out.push_back(to_num(token));
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"dynmatch: dynamic matching market lab"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "expanded help");

  auto* sim = app.add_subcommand("simulate", "run the discrete-event market once");
  add_market_options(sim, cfg);
  add_discrete_options(sim, cfg);
  add_output_options(sim, cfg);
  sim->add_option("--policy", cfg.policy, "greedy or patient")->check(kPolicy)->capture_default_str();
  sim->add_flag("--trace", cfg.trace, "also write trace.csv");
  sim->add_flag("--audit", cfg.audit, "explicit edge mode: audit priority and independence");

  auto* ode = app.add_subcommand("ode", "integrate the mean-field ODE");
  add_market_options(ode, cfg);
  add_output_options(ode, cfg);
  ode->add_option("--policy", cfg.policy, "greedy or patient")->check(kPolicy)->capture_default_str();
  ode->add_option("--t-end", cfg.t_end, "end time (default horizon)");
  ode->add_option("--tol", cfg.tol, "relative tolerance (absolute = tol * m)")->capture_default_str();
  ode->add_option("--samples", cfg.samples, "evenly spaced output samples")->capture_default_str();
  ode->add_option("--initial", cfg.initial, "initial sizes s0,s1,...,sp (default 0)");
  ode->add_option("--window-start", cfg.window_start, "start of the loss averaging window (default t_end/2)");

  auto* st = app.add_subcommand("stationary", "solve for the stationary pool sizes");
  add_market_options(st, cfg);
  add_output_options(st, cfg);
  st->add_option("--policy", cfg.policy, "greedy or patient")->check(kPolicy)->capture_default_str();
  st->add_option("--tol", cfg.stationary_tol, "residual tolerance (default 1e-10, scaled above m = 1e4)");

  for (const char* name : {"sweep", "compare"}) {
    const bool compare = std::string_view(name) == "compare";
    auto* sw = app.add_subcommand(name, compare ? "discrete vs ODE agreement over a grid"
                                                : "sweep d or lambda over engines and policies");
    add_market_options(sw, cfg);
    add_discrete_options(sw, cfg);
    add_experiment_options(sw, cfg);
    add_output_options(sw, cfg);
    sw->add_option("--axis", cfg.axis, "d or lambda")->check(CLI::IsMember({"d", "lambda"}))->capture_default_str();
    sw->add_option("--values", cfg.values, "start:stop:step or a comma list")->required();
    sw->add_option("--policies", cfg.policies, "comma list")->delimiter(',')->check(kPolicy)->capture_default_str();
    if (!compare) {
      sw->add_option("--engines", cfg.engines, "comma list")->delimiter(',')->check(kEngine)->capture_default_str();
      sw->add_flag("--assert-coherence", cfg.assert_coherence, "fail unless discrete and ODE agree");
    }
    sw->add_flag("--assert-phase", cfg.assert_phase, "fail unless the phase-transition witness holds");
  }

  auto* sc = app.add_subcommand("scaling", "e^{d/2} times the easy-type loss over d");
  add_market_options(sc, cfg);
  add_discrete_options(sc, cfg);
  add_experiment_options(sc, cfg);
  add_output_options(sc, cfg);
  cfg.policies = {"patient"};
  sc->add_option("--values", cfg.values, "d grid (default 6:14:1)");
  sc->add_option("--lambdas", cfg.lambdas, "comma list of hard shares (default --lambda)");
  sc->add_option("--policies", cfg.policies, "comma list")->delimiter(',')->check(kPolicy)->capture_default_str();
  sc->add_option("--engine", cfg.engine, "discrete or ode")->check(kEngine)->capture_default_str();
  sc->add_option("--threshold", cfg.threshold, "plateau max/min bound")->capture_default_str();
  sc->add_flag("--assert-plateau", cfg.assert_plateau, "fail unless every patient curve plateaus");

  auto* ra = app.add_subcommand("ratio", "patient/greedy total-loss ratio over d");
  add_market_options(ra, cfg);
  add_discrete_options(ra, cfg);
  add_experiment_options(ra, cfg);
  add_output_options(ra, cfg);
  ra->add_option("--values", cfg.values, "d grid (default 2:10:1)");
  ra->add_option("--engine", cfg.engine, "discrete or ode")->check(kEngine)->capture_default_str();
  ra->add_flag("--assert-monotone", cfg.assert_monotone, "fail unless the ratio decreases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dynmatch: " << e.what() << '\n';
    return kExitUsage;
  }
  // Only scaling defaults to the patient policy.
  const auto* chosen = app.get_subcommands().front();
  cfg.subcommand = chosen->get_name();
  const auto* policies_opt = chosen->get_option_no_throw("--policies");
  if (cfg.subcommand != "scaling" && (policies_opt == nullptr || policies_opt->count() == 0)) {
    cfg.policies = {"greedy", "patient"};
  }

  try {
    return dispatch(cfg, out, err);
  } catch (const UsageError& e) {
    err << "dynmatch: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // includes InvalidParams
    err << "dynmatch: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "dynmatch: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"dynmatch"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dynmatch::cli
