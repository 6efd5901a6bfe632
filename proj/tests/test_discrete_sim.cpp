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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "dynmatch/experiments.hpp"
#include "dynmatch/simulation.hpp"

using namespace dynmatch;

namespace {

Pool make_pool(const std::vector<int>& sizes, AgentId& next_id) {
  Pool pool(sizes.size());
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (int i = 0; i < sizes[t]; ++i) pool.add(PoolAgent{next_id++, t, 0.0, 0.0});
  }
  return pool;
}

/// Frequency of each partner type (index num_types = no match) over `draws` attempts.
std::vector<double> partner_type_freq(const std::vector<int>& sizes, TypeIndex mover, double alpha, TieBreak tb,
                                      LazySampling sampling, Policy policy, int draws, std::uint64_t seed) {
  AgentId next = 0;
  Pool pool = make_pool(sizes, next);
  Rng rng(seed);
  std::vector<double> freq(sizes.size() + 1, 0.0);
  for (int i = 0; i < draws; ++i) {
    MatchOutcome out;
    if (policy == Policy::Greedy) {
      const PoolAgent a{next, mover, 0.0, 0.0};
      out = greedy_match_attempt(pool, a, alpha, tb, rng, sampling);
      if (!out.matched()) pool.remove(a.id);
    } else {
      const PoolAgent a{next, mover, 0.0, 0.0};
      pool.add(a);
      out = patient_match_attempt(pool, a, alpha, tb, rng, sampling);
    }
    if (out.matched()) {
      freq[out.partner->type] += 1.0 / draws;
      pool.add(*out.partner);
    } else {
      freq.back() += 1.0 / draws;
    }
  }
  return freq;
}

SimConfig small_config(Policy policy, std::uint64_t seed) {
  SimConfig c;
  c.params = MarketParams::from_density(2, 0.2, 500, 6);
  c.policy = policy;
  c.stop = StopRule::by_time(6.0);
  c.warmup = 2.0;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("greedy: an arrival to an empty pool joins") {
  Pool pool(3);
  Rng rng(1);
  const auto out = greedy_match_attempt(pool, PoolAgent{0, 1, 0.0, 0.0}, 0.5, TieBreak::TypeUniform, rng);
  CHECK_FALSE(out.matched());
  CHECK(pool.size(1) == 1);
  CHECK(pool.contains(0));
}

TEST_CASE("greedy: hard partners take priority") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    AgentId next = 0;
    Pool pool = make_pool({1, 1, 0}, next);
    Rng rng(seed);
    const auto out = greedy_match_attempt(pool, PoolAgent{next, 1, 0.0, 0.0}, 1.0, TieBreak::AgentUniform, rng);
    REQUIRE(out.matched());
    CHECK(out.partner->type == 1);
    CHECK(pool.total() == 1);
    CHECK(pool.size(0) == 1);
  }
}

TEST_CASE("greedy: easy arrival facing one agent of each hard type") {
  // Exact enumeration of the four edge outcomes at alpha = 1/2:
  // P(A1) = 1/4 (only A1) + 1/4 * 1/2 (both) = 3/8.
  const int draws = 200000;
  for (auto tb : {TieBreak::TypeUniform, TieBreak::AgentUniform}) {
    const auto f = partner_type_freq({0, 1, 1}, 0, 0.5, tb, LazySampling::Binomial, Policy::Greedy, draws, 9);
    const double se = std::sqrt(0.375 * 0.625 / draws);
    CHECK(std::abs(f[1] - 0.375) < 4 * se);
    CHECK(std::abs(f[2] - 0.375) < 4 * se);
    CHECK(std::abs(f[3] - 0.25) < 4 * std::sqrt(0.25 * 0.75 / draws));
    CHECK(f[0] == 0.0);
  }
}

TEST_CASE("tie-break modes differ on asymmetric pools") {
  const int draws = 100000;
  const auto type_u =
      partner_type_freq({0, 10, 1}, 0, 1.0, TieBreak::TypeUniform, LazySampling::Binomial, Policy::Greedy, draws, 4);
  const auto agent_u =
      partner_type_freq({0, 10, 1}, 0, 1.0, TieBreak::AgentUniform, LazySampling::Binomial, Policy::Greedy, draws, 4);
  CHECK(std::abs(type_u[1] - 0.5) < 4 * std::sqrt(0.25 / draws));
  CHECK(std::abs(agent_u[1] - 10.0 / 11.0) < 4 * std::sqrt((10.0 / 11) * (1.0 / 11) / draws));
}

TEST_CASE("binomial fast path matches per-agent Bernoulli draws") {
  const int draws = 200000;
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    for (auto tb : {TieBreak::TypeUniform, TieBreak::AgentUniform}) {
      for (TypeIndex mover : {TypeIndex{0}, TypeIndex{2}}) {
        const std::vector<int> sizes{4, 7, 2};
        const auto a = partner_type_freq(sizes, mover, 0.15, tb, LazySampling::Binomial, policy, draws, 31);
        const auto b = partner_type_freq(sizes, mover, 0.15, tb, LazySampling::PerAgent, policy, draws, 77);
        for (std::size_t t = 0; t < a.size(); ++t) {
          const double p = 0.5 * (a[t] + b[t]);
          const double se = std::sqrt(2 * p * (1 - p) / draws);
          CHECK(std::abs(a[t] - b[t]) <= 4 * se + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("patient: examples") {
  SUBCASE("alone in the pool") {
    Pool pool(3);
    pool.add(PoolAgent{0, 1, 0.0, 0.0});
    Rng rng(2);
    const PoolAgent critical = pool.find(0);
    const auto out = patient_match_attempt(pool, critical, 0.9, TieBreak::TypeUniform, rng);
    CHECK_FALSE(out.matched());
    CHECK(pool.total() == 0);
  }
  SUBCASE("certain compatibility with a hard agent") {
    AgentId next = 0;
    Pool pool = make_pool({1, 0, 1}, next);
    Rng rng(3);
    const PoolAgent critical = pool.member(0, 0);
    const auto out = patient_match_attempt(pool, critical, 1.0, TieBreak::TypeUniform, rng);
    REQUIRE(out.matched());
    CHECK(out.partner->type == 2);
    CHECK(pool.total() == 0);
  }
  SUBCASE("perish probability (1-alpha)^2") {
    const int draws = 200000;
    const auto f =
        partner_type_freq({2, 0, 0}, 1, 0.5, TieBreak::TypeUniform, LazySampling::Binomial, Policy::Patient, draws, 5);
    CHECK(std::abs(f.back() - 0.25) < 4 * std::sqrt(0.25 * 0.75 / draws));
  }
}

TEST_CASE("simulation conserves agents exactly and is deterministic") {
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    for (auto mode : {EdgeMode::Lazy, EdgeMode::ExplicitGraph}) {
      SimConfig c = small_config(policy, 42);
      c.edge_mode = mode;
      c.record_trace = true;
      const auto a = run_simulation(c);
      const auto b = run_simulation(c);
      CHECK(conservation_holds(a.metrics));
      CHECK(a.metrics == b.metrics);
      std::ostringstream ta, tb;
      write_trace_csv(ta, a.trace, 3);
      write_trace_csv(tb, b.trace, 3);
      CHECK(ta.str() == tb.str());
      c.seed = 43;
      CHECK_FALSE(run_simulation(c).metrics == a.metrics);
    }
  }
}

TEST_CASE("event-count stop rule and its default window") {
  SimConfig c = small_config(Policy::Greedy, 1);
  c.stop = StopRule::by_events(4000);
  c.warmup.reset();
  const auto r = run_simulation(c);
  CHECK(r.metrics.total.events == 4000);
  CHECK(r.metrics.window.events == 1000);
  CHECK(conservation_holds(r.metrics));
}

TEST_CASE("trace rows agree with the metrics") {
  SimConfig c = small_config(Policy::Patient, 8);
  c.record_trace = true;
  const auto r = run_simulation(c);
  std::map<EventKind, std::uint64_t> kinds;
  for (const auto& e : r.trace) ++kinds[e.kind];
  std::uint64_t perished = 0, arrivals = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    perished += r.metrics.total.perished[k];
    arrivals += r.metrics.total.arrivals[k];
  }
  CHECK(kinds[EventKind::Perish] == perished);
  CHECK(kinds[EventKind::Join] == arrivals);  // Patient never matches on arrival
  CHECK(kinds[EventKind::MatchOnArrival] == 0);
  std::ostringstream csv;
  write_trace_csv(csv, r.trace, 3);
  CHECK(csv.str().rfind("time,event_kind,agent_id,agent_type,partner_id,pool_0,pool_1,pool_2\n", 0) == 0);
}

TEST_CASE("agent records are consistent") {
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    SimConfig c = small_config(policy, 12);
    c.clock = CriticalityClock::Calendar;
    c.record_agents = true;
    const auto r = run_simulation(c);
    std::uint64_t matched = 0;
    for (const auto& a : r.agents) {
      REQUIRE(a.criticality_time.has_value());
      CHECK(*a.criticality_time > a.arrival_time);
      if (a.outcome == AgentRecord::Outcome::InPool) {
        CHECK_FALSE(a.departure_time.has_value());
        continue;
      }
      REQUIRE(a.departure_time.has_value());
      CHECK(*a.departure_time >= a.arrival_time);
      CHECK(*a.departure_time <= c.stop.time);
      if (a.outcome == AgentRecord::Outcome::Matched) {
        ++matched;
        REQUIRE(a.partner.has_value());
        const auto& other = r.agents[*a.partner];
        CHECK(other.outcome == AgentRecord::Outcome::Matched);
        CHECK(other.partner == a.id);
        CHECK(other.departure_time == a.departure_time);
      } else {
        // Perishing happens exactly at the agent's own deadline.
        CHECK(*a.departure_time == doctest::Approx(*a.criticality_time));
      }
    }
    CHECK(matched % 2 == 0);
  }
}

TEST_CASE("no-matching limit behaves like M/M/infinity") {
  // alpha ~ 0: pool size of type k is Poisson(rate_k); sojourn is Exp(1).
  auto params = MarketParams::from_alpha(2, 0.2, 100, 1e-12, 10);
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    std::vector<std::vector<double>> pools(3), waits(3), losses(3);
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
      SimConfig c;
      c.params = params;
      c.policy = policy;
      c.stop = StopRule::by_time(10);
      c.warmup = 5;
      c.seed = derive_seed(99, rep);
      const auto r = run_simulation(c);
      CHECK(conservation_holds(r.metrics));
      const auto p = mean_pool_sizes(r.metrics);
      const auto w = waiting_times(r.metrics);
      const auto l = loss_from_metrics(r.metrics);
      for (std::size_t k = 0; k < 3; ++k) {
        pools[k].push_back(p[k]);
        waits[k].push_back(w[k]);
        losses[k].push_back(l.per_type[k]);
        CHECK(r.metrics.total.matched[k] == 0);
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const auto [pm, ps] = mean_and_se(pools[k]);
      CHECK(std::abs(pm - params.arrival_rate(k)) <= 3 * ps);
      const auto [wm, ws] = mean_and_se(waits[k]);
      CHECK(wm == doctest::Approx(1.0).epsilon(0.1));
      // Arrivals in the window either perish or remain; the pool is at its stationary level.
      const auto [lm, ls] = mean_and_se(losses[k]);
      CHECK(lm == doctest::Approx(1.0).epsilon(0.15));
    }
  }
}

TEST_CASE("explicit graph keeps priority and Greedy pool independence") {
  for (auto policy : {Policy::Greedy, Policy::Patient}) {
    for (auto tb : {TieBreak::TypeUniform, TieBreak::AgentUniform}) {
      SimConfig c = small_config(policy, 5);
      c.edge_mode = EdgeMode::ExplicitGraph;
      c.tie_break = tb;
      c.audit_graph = true;
      const auto r = run_simulation(c);
      REQUIRE(r.audit.has_value());
      CHECK(r.audit->decisions_checked > 0);
      CHECK(r.audit->priority_violations == 0);
      if (policy == Policy::Greedy) {
        CHECK(r.audit->independence_checks > 0);
        CHECK(r.audit->pool_edges_seen == 0);
      }
    }
  }
}

TEST_CASE("config validation and budgets") {
  SimConfig c = small_config(Policy::Greedy, 1);
  c.warmup = 6.0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c.warmup = 1.0;
  c.audit_graph = true;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c.audit_graph = false;
  c.max_events = 100;
  CHECK_THROWS_AS(run_simulation(c), std::runtime_error);
  c.params.lambda = 0.6;
  CHECK_THROWS_AS(run_simulation(c), InvalidParams);
}

TEST_CASE("Greedy waiting time scales like 1/d") {
  std::vector<double> scaled;
  for (double d : {10.0, 20.0, 40.0}) {
    std::vector<double> w;
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
      SimConfig c;
      c.params = MarketParams::from_density(2, 0.2, 2000, d);
      c.policy = Policy::Greedy;
      c.stop = StopRule::by_time(6);
      c.warmup = 2;
      c.seed = derive_seed(3, rep);
      w.push_back(waiting_times(run_simulation(c).metrics)[0]);
    }
    scaled.push_back(d * mean_and_se(w).first);
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi / *lo <= 2.0);
}

TEST_CASE("loss_from_metrics edge cases") {
  SimMetrics m;
  m.total = SpanCounters(2);
  m.window = SpanCounters(2);
  m.final_pool = {0, 0};
  m.window_start_pool = {0, 0};
  CHECK_THROWS_AS(loss_from_metrics(m), std::invalid_argument);
  m.window.end_time = 1.0;
  m.window.events = 5;
  m.window.arrivals = {5, 0};
  m.window.matched = {4, 0};
  m.final_pool = {1, 0};
  const auto l = loss_from_metrics(m);
  CHECK(l.total == 0.0);
  CHECK(l.per_type[0] == 0.0);
  CHECK(std::isnan(l.per_type[1]));
}
