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
#include <string_view>
#include <vector>

#include "dynmatch/market.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

using AgentId = std::uint64_t;

/// How a partner is drawn when several hard types (or agents) are compatible.
enum class TieBreak {
  TypeUniform,   ///< uniform over hard types with a compatible agent, then uniform agent
  AgentUniform,  ///< uniform over all compatible hard agents
};

enum class EdgeMode {
  Lazy,           ///< compatibility drawn when a pair is first (and only) tested
  ExplicitGraph,  ///< edges drawn on arrival and kept for the agents' lifetime
};

enum class CriticalityClock {
  Aggregate,  ///< next critical agent drawn uniformly by count from an Exp(|S|) clock
  Calendar,   ///< every agent carries its own Exp(1) deadline
};

/// Per-type sampling used by lazy edge mode.
enum class LazySampling {
  Binomial,  ///< draw the compatible count per type, then a uniform member
  PerAgent,  ///< one Bernoulli(alpha) per admissible pool agent
};

std::string_view to_string(TieBreak tie_break);
std::string_view to_string(EdgeMode mode);
TieBreak parse_tie_break(std::string_view text);
EdgeMode parse_edge_mode(std::string_view text);

struct StopRule {
  enum class Kind { ByTime, ByEventCount };
  Kind kind = Kind::ByEventCount;
  double time = 0.0;
  std::uint64_t events = 20000;

  static StopRule by_time(double t) { return {Kind::ByTime, t, 0}; }
  static StopRule by_events(std::uint64_t n) { return {Kind::ByEventCount, 0.0, n}; }
  /// Budget in the rule's own unit (time or events).
  double bound() const { return kind == Kind::ByTime ? time : static_cast<double>(events); }
};

struct SimConfig {
  MarketParams params;
  Policy policy = Policy::Greedy;
  TieBreak tie_break = TieBreak::TypeUniform;
  EdgeMode edge_mode = EdgeMode::Lazy;
  CriticalityClock clock = CriticalityClock::Aggregate;  // ExplicitGraph always uses Calendar
  LazySampling sampling = LazySampling::Binomial;
  StopRule stop = StopRule::by_events(20000);
  /// Excluded prefix, in the stop rule's unit. Defaults to 75% of the budget.
  std::optional<double> warmup;
  std::uint64_t seed = 1;
  /// Hard cap on processed events for time-bounded runs.
  std::uint64_t max_events = 1'000'000'000;
  bool record_trace = false;
  bool record_agents = false;
  /// ExplicitGraph only: independently re-check hard priority and pool independence.
  bool audit_graph = false;

  double effective_warmup() const { return warmup.value_or(0.75 * stop.bound()); }
};

/// Throws InvalidParams / std::invalid_argument if the config cannot run.
void validate_config(const SimConfig& config);

struct PoolAgent {
  AgentId id = 0;
  TypeIndex type = 0;
  double arrival_time = 0.0;
  double deadline = 0.0;  // only meaningful under the calendar clock
};

/** Agents currently waiting, bucketed by type. */
class Pool {
 public:
  explicit Pool(std::size_t num_types) : members_(num_types) {}

  std::size_t num_types() const { return members_.size(); }
  std::size_t size(TypeIndex k) const { return members_[k].size(); }
  std::size_t total() const { return total_; }
  const PoolAgent& member(TypeIndex k, std::size_t index) const { return members_[k][index]; }
  const std::vector<PoolAgent>& members(TypeIndex k) const { return members_[k]; }
  bool contains(AgentId id) const { return id < slots_.size() && slots_[id].type >= 0; }
  const PoolAgent& find(AgentId id) const;
  PoolState state() const;

  void add(const PoolAgent& agent);
  PoolAgent remove_at(TypeIndex k, std::size_t index);
  PoolAgent remove(AgentId id);

 private:
  std::vector<std::vector<PoolAgent>> members_;
  struct Slot {
    std::int32_t type = -1;  // -1 when absent
    std::uint32_t index = 0;
  };
  std::vector<Slot> slots_;
  std::size_t total_ = 0;
};

struct MatchOutcome {
  std::optional<PoolAgent> partner;  ///< set when a match was made
  bool matched() const { return partner.has_value(); }
};

/// Greedy step for an arriving agent: match with a compatible pool agent (hard
/// partners first) or add it to the pool. Compatibility is drawn fresh.
MatchOutcome greedy_match_attempt(Pool& pool, const PoolAgent& new_agent, double alpha, TieBreak tie_break,
                                  Rng& rng, LazySampling sampling = LazySampling::Binomial);

/// Patient step for a critical pool agent: it leaves the pool either matched or
/// perished. Compatibility is drawn fresh.
MatchOutcome patient_match_attempt(Pool& pool, const PoolAgent& critical_agent, double alpha,
                                   TieBreak tie_break, Rng& rng,
                                   LazySampling sampling = LazySampling::Binomial);

/// Counters over one accounting span. Vectors are indexed by type.
struct SpanCounters {
  std::vector<std::uint64_t> arrivals;
  std::vector<std::uint64_t> matched;   // agents of this type that left matched
  std::vector<std::uint64_t> perished;
  std::vector<std::uint64_t> matches_by_pair;  // row-major (mover type, partner type)
  std::vector<double> pool_time_integral;      // agent * time
  std::vector<double> waiting_time_sum;
  std::vector<std::uint64_t> departures;
  double start_time = 0.0;
  double end_time = 0.0;
  std::uint64_t events = 0;

  explicit SpanCounters(std::size_t num_types = 0);
  std::size_t num_types() const { return arrivals.size(); }
  std::uint64_t pair_count(TypeIndex mover, TypeIndex partner) const {
    return matches_by_pair[mover * num_types() + partner];
  }
  bool operator==(const SpanCounters&) const = default;
};

struct SimMetrics {
  SpanCounters total;    ///< whole run, starting from the empty pool
  SpanCounters window;   ///< measurement window after warmup
  std::vector<std::uint64_t> window_start_pool;
  std::vector<std::uint64_t> final_pool;

  std::size_t num_types() const { return final_pool.size(); }
  bool operator==(const SimMetrics&) const = default;
};

/// arrivals + starting pool == matched + perished + final pool, per type, for both spans.
bool conservation_holds(const SimMetrics& metrics);

/// Perished / arrived over the measurement window.
LossReport loss_from_metrics(const SimMetrics& metrics);

/// Mean sojourn (departure - arrival) per type over agents departing in the window.
/// Arrivals matched on the spot count with zero sojourn. NaN for types with no departures.
std::vector<double> waiting_times(const SimMetrics& metrics);

/// Time-averaged pool size per type over the window.
std::vector<double> mean_pool_sizes(const SimMetrics& metrics);

enum class EventKind { Join, MatchOnArrival, MatchOnCritical, Perish };
std::string_view to_string(EventKind kind);

struct TraceEvent {
  double time = 0.0;
  EventKind kind = EventKind::Join;
  AgentId agent = 0;
  TypeIndex type = 0;
  std::optional<AgentId> partner;
  std::vector<std::uint32_t> pool_sizes;  // after the event
};

/// CSV with header: time,event_kind,agent_id,agent_type,partner_id,pool_0..pool_p
void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& trace, std::size_t num_types);

struct AgentRecord {
  enum class Outcome { InPool, Matched, Perished };
  AgentId id = 0;
  TypeIndex type = 0;
  double arrival_time = 0.0;
  std::optional<double> criticality_time;  // known once drawn or revealed
  Outcome outcome = Outcome::InPool;
  std::optional<AgentId> partner;
  std::optional<double> departure_time;
};

struct GraphAudit {
  std::uint64_t decisions_checked = 0;
  std::uint64_t priority_violations = 0;  // easy partner taken while a hard neighbor existed
  std::uint64_t independence_checks = 0;
  std::uint64_t pool_edges_seen = 0;      // edges between two pool agents (Greedy must keep 0)
};

struct SimResult {
  SimMetrics metrics;
  std::vector<TraceEvent> trace;
  std::vector<AgentRecord> agents;
  std::optional<GraphAudit> audit;
};

SimResult run_simulation(const SimConfig& config);

}  // namespace dynmatch
