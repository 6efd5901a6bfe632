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

#include "dynmatch/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "dynmatch/match_prob.hpp"

namespace dynmatch {

std::string_view to_string(TieBreak tie_break) {
  return tie_break == TieBreak::TypeUniform ? "type-uniform" : "agent-uniform";
}

std::string_view to_string(EdgeMode mode) { return mode == EdgeMode::Lazy ? "lazy" : "explicit"; }

TieBreak parse_tie_break(std::string_view text) {
  if (text == "type-uniform") return TieBreak::TypeUniform;
  if (text == "agent-uniform") return TieBreak::AgentUniform;
  throw std::invalid_argument("unknown tie-break '" + std::string(text) + "'");
}

EdgeMode parse_edge_mode(std::string_view text) {
  if (text == "lazy") return EdgeMode::Lazy;
  if (text == "explicit") return EdgeMode::ExplicitGraph;
  throw std::invalid_argument("unknown edge mode '" + std::string(text) + "'");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Join: return "join";
    case EventKind::MatchOnArrival: return "match_on_arrival";
    case EventKind::MatchOnCritical: return "match_on_critical";
    case EventKind::Perish: return "perish";
  }
  return "unknown";
}

void validate_config(const SimConfig& config) {
  validate_params(config.params);
  const double bound = config.stop.bound();
  if (!(bound > 0.0)) throw std::invalid_argument("stop bound must be positive");
  const double warmup = config.effective_warmup();
  if (!(warmup >= 0.0 && warmup < bound)) {
    throw std::invalid_argument("warmup " + std::to_string(warmup) + " must lie in [0, " + std::to_string(bound) +
                                ")");
  }
  if (config.audit_graph && config.edge_mode != EdgeMode::ExplicitGraph) {
    throw std::invalid_argument("graph audit requires the explicit edge mode");
  }
}

// ---------------------------------------------------------------------------
// Pool

const PoolAgent& Pool::find(AgentId id) const {
  if (!contains(id)) throw std::out_of_range("agent " + std::to_string(id) + " is not in the pool");
  const Slot slot = slots_[id];
  return members_[static_cast<std::size_t>(slot.type)][slot.index];
}

PoolState Pool::state() const {
  std::vector<double> sizes(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) sizes[k] = static_cast<double>(members_[k].size());
  return PoolState(std::move(sizes));
}

void Pool::add(const PoolAgent& agent) {
  if (agent.type >= members_.size()) throw std::out_of_range("agent type out of range");
  if (contains(agent.id)) throw std::invalid_argument("agent already in pool");
  if (agent.id >= slots_.size()) slots_.resize(std::max<std::size_t>(agent.id + 1, 2 * slots_.size()));
  slots_[agent.id] = Slot{static_cast<std::int32_t>(agent.type), static_cast<std::uint32_t>(members_[agent.type].size())};
  members_[agent.type].push_back(agent);
  ++total_;
}

PoolAgent Pool::remove_at(TypeIndex k, std::size_t index) {
  auto& bucket = members_[k];
  PoolAgent out = bucket[index];
  bucket[index] = bucket.back();
  slots_[bucket[index].id].index = static_cast<std::uint32_t>(index);
  bucket.pop_back();
  slots_[out.id] = Slot{};
  --total_;
  return out;
}

PoolAgent Pool::remove(AgentId id) {
  const PoolAgent& agent = find(id);
  return remove_at(agent.type, slots_[id].index);
}

// ---------------------------------------------------------------------------
// Lazy match attempts

namespace {

std::vector<TypeIndex> admissible_hard_types(TypeIndex type, std::size_t num_types) {
  std::vector<TypeIndex> out;
  if (type == kEasyType) {
    for (TypeIndex j = 1; j < num_types; ++j) out.push_back(j);
  } else {
    out.push_back(type);
  }
  return out;
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Picks an entry among `weights` (all >= 0, at least one > 0). TypeUniform ignores
// magnitudes and picks uniformly among positive entries.
std::size_t pick_bucket(const std::vector<std::uint64_t>& weights, TieBreak tie_break, Rng& rng) {
  std::uint64_t total = 0;
  std::size_t nonzero = 0;
  for (auto w : weights) {
    total += w;
    nonzero += w > 0 ? 1 : 0;
  }
  if (tie_break == TieBreak::TypeUniform) {
    std::size_t r = uniform_index(nonzero, rng);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0 && r-- == 0) return i;
    }
  } else {
    std::uint64_t r = std::uniform_int_distribution<std::uint64_t>(0, total - 1)(rng);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r < weights[i]) return i;
      r -= weights[i];
    }
  }
  throw std::logic_error("pick_bucket: no positive weight");
}

// Match `agent` (not in the pool) against the pool; removes and returns the partner.
std::optional<PoolAgent> attempt_match(Pool& pool, const PoolAgent& agent, double alpha, TieBreak tie_break,
                                       Rng& rng, LazySampling sampling) {
  const auto hard = admissible_hard_types(agent.type, pool.num_types());

  if (sampling == LazySampling::Binomial) {
    std::vector<std::uint64_t> weights(hard.size(), 0);
    for (std::size_t i = 0; i < hard.size(); ++i) {
      const std::size_t n = pool.size(hard[i]);
      if (n == 0) continue;
      if (tie_break == TieBreak::TypeUniform) {
        weights[i] = std::bernoulli_distribution(hit_probability(static_cast<double>(n), alpha))(rng) ? 1 : 0;
      } else {
        weights[i] = std::binomial_distribution<std::uint64_t>(n, alpha)(rng);
      }
    }
    if (std::any_of(weights.begin(), weights.end(), [](auto w) { return w > 0; })) {
      const TypeIndex j = hard[pick_bucket(weights, tie_break, rng)];
      return pool.remove_at(j, uniform_index(pool.size(j), rng));
    }
    const std::size_t n0 = pool.size(kEasyType);
    if (n0 > 0 && std::bernoulli_distribution(hit_probability(static_cast<double>(n0), alpha))(rng)) {
      return pool.remove_at(kEasyType, uniform_index(n0, rng));
    }
    return std::nullopt;
  }

  std::bernoulli_distribution edge(alpha);
  std::vector<std::vector<std::size_t>> compatible(hard.size());
  std::vector<std::uint64_t> weights(hard.size(), 0);
  for (std::size_t i = 0; i < hard.size(); ++i) {
    for (std::size_t idx = 0; idx < pool.size(hard[i]); ++idx) {
      if (edge(rng)) compatible[i].push_back(idx);
    }
    weights[i] = compatible[i].size();
  }
  std::vector<std::size_t> easy;
  for (std::size_t idx = 0; idx < pool.size(kEasyType); ++idx) {
    if (edge(rng)) easy.push_back(idx);
  }
  if (std::any_of(weights.begin(), weights.end(), [](auto w) { return w > 0; })) {
    const std::size_t i = pick_bucket(weights, tie_break, rng);
    return pool.remove_at(hard[i], compatible[i][uniform_index(compatible[i].size(), rng)]);
  }
  if (!easy.empty()) return pool.remove_at(kEasyType, easy[uniform_index(easy.size(), rng)]);
  return std::nullopt;
}

}  // namespace

MatchOutcome greedy_match_attempt(Pool& pool, const PoolAgent& new_agent, double alpha, TieBreak tie_break,
                                  Rng& rng, LazySampling sampling) {
  if (pool.contains(new_agent.id)) throw std::invalid_argument("arriving agent is already in the pool");
  MatchOutcome outcome{attempt_match(pool, new_agent, alpha, tie_break, rng, sampling)};
  if (!outcome.matched()) pool.add(new_agent);
  return outcome;
}

MatchOutcome patient_match_attempt(Pool& pool, const PoolAgent& critical_agent, double alpha,
                                   TieBreak tie_break, Rng& rng, LazySampling sampling) {
  const PoolAgent agent = pool.remove(critical_agent.id);
  return MatchOutcome{attempt_match(pool, agent, alpha, tie_break, rng, sampling)};
}

// ---------------------------------------------------------------------------
// Metrics

SpanCounters::SpanCounters(std::size_t num_types)
    : arrivals(num_types, 0),
      matched(num_types, 0),
      perished(num_types, 0),
      matches_by_pair(num_types * num_types, 0),
      pool_time_integral(num_types, 0.0),
      waiting_time_sum(num_types, 0.0),
      departures(num_types, 0) {}

bool conservation_holds(const SimMetrics& metrics) {
  const std::size_t n = metrics.num_types();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& t = metrics.total;
    if (t.arrivals[k] != t.matched[k] + t.perished[k] + metrics.final_pool[k]) return false;
    const auto& w = metrics.window;
    if (metrics.window_start_pool[k] + w.arrivals[k] != w.matched[k] + w.perished[k] + metrics.final_pool[k]) {
      return false;
    }
  }
  return true;
}

LossReport loss_from_metrics(const SimMetrics& metrics) {
  const auto& w = metrics.window;
  if (!(w.end_time > w.start_time) && w.events == 0) throw std::invalid_argument("empty measurement window");
  std::uint64_t arrived = 0;
  std::uint64_t perished = 0;
  LossReport report;
  for (std::size_t k = 0; k < w.num_types(); ++k) {
    arrived += w.arrivals[k];
    perished += w.perished[k];
    report.per_type.push_back(w.arrivals[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                 : static_cast<double>(w.perished[k]) / w.arrivals[k]);
  }
  if (arrived == 0) throw std::invalid_argument("no arrivals in the measurement window");
  report.total = static_cast<double>(perished) / arrived;
  return report;
}

std::vector<double> waiting_times(const SimMetrics& metrics) {
  const auto& w = metrics.window;
  std::vector<double> out(w.num_types());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = w.departures[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : w.waiting_time_sum[k] / static_cast<double>(w.departures[k]);
  }
  return out;
}

std::vector<double> mean_pool_sizes(const SimMetrics& metrics) {
  const auto& w = metrics.window;
  const double span = w.end_time - w.start_time;
  std::vector<double> out(w.num_types(), std::numeric_limits<double>::quiet_NaN());
  if (span <= 0.0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = w.pool_time_integral[k] / span;
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& trace, std::size_t num_types) {
  out << "time,event_kind,agent_id,agent_type,partner_id";
  for (std::size_t k = 0; k < num_types; ++k) out << ",pool_" << k;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& e : trace) {
    out << e.time << ',' << to_string(e.kind) << ',' << e.agent << ',' << e.type << ',';
    if (e.partner) out << *e.partner;
    for (auto s : e.pool_sizes) out << ',' << s;
    out << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

class Simulator {
 public:
  explicit Simulator(const SimConfig& config)
      : config_(config),
        params_(config.params),
        n_types_(params_.num_types()),
        rng_(config.seed),
        pool_(n_types_),
        explicit_(config.edge_mode == EdgeMode::ExplicitGraph),
        calendar_(explicit_ || config.clock == CriticalityClock::Calendar) {
    metrics_.total = SpanCounters(n_types_);
    metrics_.window = SpanCounters(n_types_);
    metrics_.window_start_pool.assign(n_types_, 0);
    if (config.audit_graph) audit_ = GraphAudit{};
    type_cdf_.resize(n_types_);
    double acc = 0.0;
    for (TypeIndex k = 0; k < n_types_; ++k) {
      acc += params_.arrival_rate(k) / params_.m;
      type_cdf_[k] = acc;
    }
  }

  SimResult run() {
    const bool by_time = config_.stop.kind == StopRule::Kind::ByTime;
    const double warmup = config_.effective_warmup();
    const auto warmup_events = static_cast<std::uint64_t>(std::floor(warmup));
    std::exponential_distribution<double> arrival_gap(params_.m);
    double next_arrival = calendar_ ? arrival_gap(rng_) : 0.0;

    if (warmup == 0.0) open_window();
    while (true) {
      if (!by_time && metrics_.total.events >= config_.stop.events) break;
      if (by_time && metrics_.total.events >= config_.max_events) {
        throw std::runtime_error("event budget of " + std::to_string(config_.max_events) +
                                 " exceeded before reaching the time horizon");
      }
      if (!by_time && !window_open_ && metrics_.total.events == warmup_events) open_window();

      if (calendar_) {
        drop_stale_deadlines();
        const bool critical_next = !deadlines_.empty() && deadlines_.top().first < next_arrival;
        const double t_next = critical_next ? deadlines_.top().first : next_arrival;
        if (by_time && t_next > config_.stop.time) break;
        advance_to(t_next, by_time, warmup);
        if (critical_next) {
          const AgentId id = deadlines_.top().second;
          deadlines_.pop();
          on_critical(pool_.find(id));
        } else {
          on_arrival();
          next_arrival = t_ + arrival_gap(rng_);
        }
      } else {
        const double rate = params_.m + static_cast<double>(pool_.total());
        const double t_next = t_ + std::exponential_distribution<double>(rate)(rng_);
        if (by_time && t_next > config_.stop.time) break;
        advance_to(t_next, by_time, warmup);
        if (std::uniform_real_distribution<double>(0.0, rate)(rng_) < params_.m) {
          on_arrival();
        } else {
          on_critical(pick_critical_by_count());
        }
      }
      ++metrics_.total.events;
      if (window_open_) ++metrics_.window.events;
      if (audit_ && config_.policy == Policy::Greedy && metrics_.total.events % 256 == 0) {
        check_independence();
      }
    }
    if (by_time) advance_to(config_.stop.time, by_time, warmup);
    if (!window_open_) open_window();
    metrics_.total.end_time = t_;
    metrics_.window.end_time = t_;
    metrics_.final_pool.resize(n_types_);
    for (TypeIndex k = 0; k < n_types_; ++k) metrics_.final_pool[k] = pool_.size(k);
    if (audit_ && config_.policy == Policy::Greedy) check_independence();

    SimResult result;
    result.metrics = std::move(metrics_);
    result.trace = std::move(trace_);
    result.agents = std::move(agents_);
    result.audit = audit_;
    return result;
  }

 private:
  void advance_to(double t_new, bool by_time, double warmup) {
    if (by_time && !window_open_ && t_new >= warmup) {
      integrate(warmup);
      open_window();
    }
    integrate(t_new);
  }

  void integrate(double t_new) {
    const double dt = t_new - t_;
    for (TypeIndex k = 0; k < n_types_; ++k) {
      const double area = static_cast<double>(pool_.size(k)) * dt;
      metrics_.total.pool_time_integral[k] += area;
      if (window_open_) metrics_.window.pool_time_integral[k] += area;
    }
    t_ = t_new;
  }

  void open_window() {
    window_open_ = true;
    metrics_.window.start_time = t_;
    for (TypeIndex k = 0; k < n_types_; ++k) metrics_.window_start_pool[k] = pool_.size(k);
  }

  TypeIndex draw_type() {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    for (TypeIndex k = 0; k + 1 < n_types_; ++k) {
      if (u < type_cdf_[k]) return k;
    }
    return n_types_ - 1;
  }

  PoolAgent pick_critical_by_count() {
    std::size_t r = uniform_index(pool_.total(), rng_);
    for (TypeIndex k = 0; k < n_types_; ++k) {
      if (r < pool_.size(k)) return pool_.member(k, r);
      r -= pool_.size(k);
    }
    throw std::logic_error("critical agent selection out of range");
  }

  void drop_stale_deadlines() {
    while (!deadlines_.empty() && !pool_.contains(deadlines_.top().second)) deadlines_.pop();
  }

  template <typename Fn>
  void for_both_spans(Fn&& fn) {
    fn(metrics_.total);
    if (window_open_) fn(metrics_.window);
  }

  void on_arrival() {
    PoolAgent agent{next_id_++, draw_type(), t_, 0.0};
    if (calendar_) agent.deadline = t_ + std::exponential_distribution<double>(1.0)(rng_);
    for_both_spans([&](SpanCounters& s) { ++s.arrivals[agent.type]; });
    if (config_.record_agents) {
      AgentRecord rec;
      rec.id = agent.id;
      rec.type = agent.type;
      rec.arrival_time = t_;
      if (calendar_) rec.criticality_time = agent.deadline;
      agents_.push_back(rec);
    }

    std::optional<PoolAgent> partner;
    if (explicit_) {
      draw_edges(agent);
      if (config_.policy == Policy::Greedy) partner = choose_neighbor(agent);
      if (!partner) pool_.add(agent);
    } else if (config_.policy == Policy::Greedy) {
      partner = greedy_match_attempt(pool_, agent, params_.alpha, config_.tie_break, rng_, config_.sampling).partner;
    } else {
      pool_.add(agent);
    }
    if (partner) {
      record_match(agent, *partner, EventKind::MatchOnArrival);
    } else {
      if (calendar_) deadlines_.emplace(agent.deadline, agent.id);
      trace(EventKind::Join, agent, std::nullopt);
    }
  }

  void on_critical(const PoolAgent& agent_ref) {
    const PoolAgent agent = agent_ref;
    if (config_.record_agents) agents_[agent.id].criticality_time = t_;
    std::optional<PoolAgent> partner;
    if (config_.policy == Policy::Patient) {
      if (explicit_) {
        pool_.remove(agent.id);
        partner = choose_neighbor(agent);
      } else {
        partner = patient_match_attempt(pool_, agent, params_.alpha, config_.tie_break, rng_, config_.sampling)
                      .partner;
      }
    } else {
      pool_.remove(agent.id);
    }
    if (explicit_) adjacency_[agent.id].clear();
    if (partner) {
      record_match(agent, *partner, EventKind::MatchOnCritical);
      return;
    }
    for_both_spans([&](SpanCounters& s) {
      ++s.perished[agent.type];
      ++s.departures[agent.type];
      s.waiting_time_sum[agent.type] += t_ - agent.arrival_time;
    });
    if (config_.record_agents) {
      auto& rec = agents_[agent.id];
      rec.outcome = AgentRecord::Outcome::Perished;
      rec.departure_time = t_;
    }
    trace(EventKind::Perish, agent, std::nullopt);
  }

  void record_match(const PoolAgent& mover, const PoolAgent& partner, EventKind kind) {
    for_both_spans([&](SpanCounters& s) {
      ++s.matched[mover.type];
      ++s.matched[partner.type];
      ++s.matches_by_pair[mover.type * n_types_ + partner.type];
      ++s.departures[mover.type];
      ++s.departures[partner.type];
      s.waiting_time_sum[mover.type] += t_ - mover.arrival_time;
      s.waiting_time_sum[partner.type] += t_ - partner.arrival_time;
    });
    if (explicit_) {
      adjacency_[mover.id].clear();
      adjacency_[partner.id].clear();
    }
    if (config_.record_agents) {
      for (auto [self, other] : {std::pair{mover.id, partner.id}, std::pair{partner.id, mover.id}}) {
        auto& rec = agents_[self];
        rec.outcome = AgentRecord::Outcome::Matched;
        rec.partner = other;
        rec.departure_time = t_;
      }
    }
    trace(kind, mover, partner.id);
  }

  void trace(EventKind kind, const PoolAgent& agent, std::optional<AgentId> partner) {
    if (!config_.record_trace) return;
    TraceEvent e{t_, kind, agent.id, agent.type, partner, {}};
    e.pool_sizes.resize(n_types_);
    for (TypeIndex k = 0; k < n_types_; ++k) e.pool_sizes[k] = static_cast<std::uint32_t>(pool_.size(k));
    trace_.push_back(std::move(e));
  }

  // Explicit graph: persistent Bernoulli(alpha) edges between the newcomer and
  // every pool agent of an admissible type, drawn by geometric skipping.
  void draw_edges(const PoolAgent& agent) {
    if (adjacency_.size() <= agent.id) adjacency_.resize(agent.id + 1);
    std::vector<TypeIndex> types = admissible_hard_types(agent.type, n_types_);
    types.push_back(kEasyType);
    const double log_miss = log_survival(params_.alpha);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (TypeIndex k : types) {
      const auto& bucket = pool_.members(k);
      double pos = -1.0;
      while (true) {
        const double u = 1.0 - unit(rng_);  // (0, 1]
        pos += 1.0 + std::floor(std::log(u) / log_miss);
        if (pos >= static_cast<double>(bucket.size())) break;
        const AgentId other = bucket[static_cast<std::size_t>(pos)].id;
        adjacency_[agent.id].push_back(other);
        adjacency_[other].push_back(agent.id);
      }
    }
  }

  // Chooses a live neighbor of `agent` (already out of the pool) and removes it.
  std::optional<PoolAgent> choose_neighbor(const PoolAgent& agent) {
    std::vector<std::vector<AgentId>> hard_by_type(n_types_);
    std::vector<AgentId> easy;
    for (AgentId other : adjacency_[agent.id]) {
      if (!pool_.contains(other)) continue;
      const TypeIndex type = pool_.find(other).type;
      if (type == kEasyType) {
        easy.push_back(other);
      } else {
        hard_by_type[type].push_back(other);
      }
    }
    std::vector<std::uint64_t> weights(n_types_, 0);
    for (TypeIndex k = 1; k < n_types_; ++k) weights[k] = hard_by_type[k].size();
    std::optional<PoolAgent> chosen;
    if (std::any_of(weights.begin(), weights.end(), [](auto w) { return w > 0; })) {
      const TypeIndex j = pick_bucket(weights, config_.tie_break, rng_);
      chosen = pool_.remove(hard_by_type[j][uniform_index(hard_by_type[j].size(), rng_)]);
    } else if (!easy.empty()) {
      chosen = pool_.remove(easy[uniform_index(easy.size(), rng_)]);
    }
    if (audit_) audit_decision(agent, chosen);
    return chosen;
  }

  // Re-derives from the raw adjacency whether a hard neighbor was available.
  void audit_decision(const PoolAgent& agent, const std::optional<PoolAgent>& chosen) {
    ++audit_->decisions_checked;
    bool hard_available = false;
    for (AgentId other : adjacency_[agent.id]) {
      if (chosen && other == chosen->id && chosen->type != kEasyType) hard_available = true;
      if (pool_.contains(other) && pool_.find(other).type != kEasyType) hard_available = true;
    }
    if (hard_available && (!chosen || chosen->type == kEasyType)) ++audit_->priority_violations;
  }

  void check_independence() {
    ++audit_->independence_checks;
    std::uint64_t edges = 0;
    for (TypeIndex k = 0; k < n_types_; ++k) {
      for (const auto& a : pool_.members(k)) {
        for (AgentId other : adjacency_[a.id]) edges += pool_.contains(other) ? 1 : 0;
      }
    }
    audit_->pool_edges_seen += edges / 2;
  }

  const SimConfig& config_;
  const MarketParams& params_;
  const std::size_t n_types_;
  Rng rng_;
  Pool pool_;
  const bool explicit_;
  const bool calendar_;
  double t_ = 0.0;
  AgentId next_id_ = 0;
  bool window_open_ = false;
  std::vector<double> type_cdf_;
  SimMetrics metrics_;
  std::vector<TraceEvent> trace_;
  std::vector<AgentRecord> agents_;
  std::optional<GraphAudit> audit_;
  std::vector<std::vector<AgentId>> adjacency_;
  using Deadline = std::pair<double, AgentId>;
  std::priority_queue<Deadline, std::vector<Deadline>, std::greater<>> deadlines_;
};

}  // namespace

SimResult run_simulation(const SimConfig& config) {
  validate_config(config);
  return Simulator(config).run();
}

}  // namespace dynmatch
