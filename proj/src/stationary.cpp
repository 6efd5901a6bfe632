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

#include "dynmatch/stationary.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dynmatch/match_prob.hpp"
#include "json.hpp"

namespace dynmatch {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kScanPoints = 2000;

double max_norm(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = i + 1 == count ? hi : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

double bisect(const std::function<double(double)>& h, double a, double b, double width) {
  double ha = h(a);
  for (int it = 0; it < 300 && b - a > width; ++it) {
    const double mid = 0.5 * (a + b);
    const double hm = h(mid);
    if (hm == 0.0) return mid;
    if ((hm < 0.0) == (ha < 0.0)) {
      a = mid;
      ha = hm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> full_residual(Policy policy, const std::vector<double>& x, const MarketParams& params) {
  return policy_rhs(policy, OdeState(x), params);
}

/// Damped Newton on the full field with a central-difference Jacobian.
std::vector<double> newton_polish(Policy policy, std::vector<double> x, const MarketParams& params, double tol) {
  const std::size_t n = x.size();
  std::vector<double> f = full_residual(policy, x, params);
  double norm = max_norm(f);
  for (int iter = 0; iter < 100 && norm > 1e-3 * tol; ++iter) {
    Eigen::MatrixXd jac(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, x[j]);
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] = std::max(0.0, xm[j] - h);
      const auto fp = full_residual(policy, xp, params);
      const auto fm = full_residual(policy, xm, params);
      for (std::size_t i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (xp[j] - xm[j]);
    }
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = -f[i];
    const Eigen::VectorXd delta = jac.fullPivLu().solve(rhs);
    bool improved = false;
    for (double step = 1.0; step > 1e-12; step *= 0.5) {
      std::vector<double> trial(n);
      bool positive = true;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = x[i] + step * delta(i);
        if (!(trial[i] > 0.0)) positive = false;
      }
      if (!positive) continue;
      auto ft = full_residual(policy, trial, params);
      const double nt = max_norm(ft);
      if (nt < norm) {
        x = std::move(trial);
        f = std::move(ft);
        norm = nt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return x;
}

struct Bracketing {
  std::function<double(double)> sign;  // same sign as f - g
  std::function<double(double)> s0;    // s0 on the curve at a root
};

StationarySolution solve(Policy policy, const MarketParams& params, double tol, double lo, double hi,
                         const Bracketing& curves) {
  StationarySolution out;
  out.policy = policy;
  out.params = params;
  out.tolerance = tol;
  out.scan_lo = lo;
  out.scan_hi = hi;

  const auto& h = curves.sign;
  const auto grid = log_grid(lo, hi, kScanPoints);
  std::vector<double> hv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) hv[i] = h(grid[i]);

  std::vector<OdeState> polished;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!std::isfinite(hv[i]) || !std::isfinite(hv[i + 1])) continue;
    if ((hv[i] < 0.0) == (hv[i + 1] < 0.0) && hv[i] != 0.0) continue;
    const double s1 = bisect(h, grid[i], grid[i + 1], 1e-12 * params.m);
    const double s0 = curves.s0(s1);
    if (!(s0 > 0.0) || !(s1 > 0.0)) continue;
    const auto start = PoolState::symmetric(params.p, s0, s1);
    std::vector<double> x(start.sizes().begin(), start.sizes().end());
    x = newton_polish(policy, std::move(x), params, tol);
    OdeState candidate(x);
    bool duplicate = false;
    for (const auto& other : polished) {
      bool same = true;
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (std::abs(other[k] - x[k]) > 1e-8 * std::max(1.0, std::abs(x[k]))) same = false;
      }
      if (same) duplicate = true;
    }
    if (!duplicate) {
      polished.push_back(candidate);
      out.candidates.push_back({candidate[0], candidate[1]});
    }
  }
  if (polished.empty()) {
    std::ostringstream msg;
    msg << "stationary " << to_string(policy) << ": no sign change of f - g on s1 in [" << lo << ", " << hi << "]";
    throw std::runtime_error(msg.str());
  }
  out.multiple_roots = polished.size() > 1;

  double best = kInf;
  for (const auto& c : polished) {
    const double r = max_norm(policy_rhs(policy, c, params));
    if (r < best) {
      best = r;
      out.sizes = c;
    }
  }
  out.residual = best;
  if (!(best < tol)) {
    std::ostringstream msg;
    msg << "stationary " << to_string(policy) << ": residual " << best << " not below tolerance " << tol;
    throw std::runtime_error(msg.str());
  }
  for (double s : out.sizes.sizes()) {
    if (!(s > 0.0)) throw std::runtime_error("stationary solution has a nonpositive coordinate");
  }
  out.loss = loss_ode(policy, out.sizes, params);
  out.waits = little_waiting_times(out.sizes, params);
  return out;
}

}  // namespace

double default_stationary_tol(const MarketParams& params) { return 1e-10 * std::max(1.0, params.m / 1e4); }

// Greedy: the hard-type equation gives q^{s0} = Q(s1) = E(s1) / (lambda m q^{s1}); substituting
// into the easy-type equation gives s0 = f(s1).
namespace {
double greedy_e(double s1, const MarketParams& params) {
  const double a = params.alpha;
  return params.lambda * params.m * hit_probability(s1, a) +
         params.arrival_rate(kEasyType) * hit_probability(params.p * s1, a) / params.p + s1;
}
}  // namespace

double greedy_curve_f(double s1, const MarketParams& params) {
  const double a = params.alpha;
  const double p = params.p;
  const double r0 = params.arrival_rate(kEasyType);
  const double hard_rate = params.lambda * params.m;
  const double e = greedy_e(s1, params);
  return 2.0 * r0 * e * survival((p - 1) * s1, a) / hard_rate - r0 * survival(p * s1, a) -
         hard_rate * p * survival(s1, a) + p * e;
}

double greedy_curve_g(double s1, const MarketParams& params) {
  const double e = greedy_e(s1, params);
  if (!(e > 0.0)) return kInf;
  const double lq = log_survival(params.alpha);
  return (std::log(e) - std::log(params.lambda * params.m)) / lq - s1;
}

double patient_curve_f(double s1, const MarketParams& params) {
  const double a = params.alpha;
  const double denom = hit_probability(params.p * s1, a);
  if (denom == 0.0) return kInf;
  return params.p * (params.lambda * params.m - s1 * (2.0 - survival(s1, a))) / denom;
}

double patient_curve_g(double s1, const MarketParams& params) {
  const double a = params.alpha;
  const double f = patient_curve_f(s1, params);
  if (!std::isfinite(f)) return kNaN;
  const double denom = params.p * s1 * survival(s1, a) + f * survival(params.p * s1, a);
  if (!(denom > 0.0)) return kInf;
  const double x = (f - params.arrival_rate(kEasyType)) / denom;
  if (!(x > -1.0)) return kInf;
  return std::log1p(x) / log_survival(a);
}

double patient_positivity_root(const MarketParams& params) {
  const double target = params.lambda * params.m;
  const auto h = [&](double s) { return s * (2.0 - survival(s, params.alpha)) - target; };
  // s (2 - q^s) is increasing and lies in [s, 2s], so the root is in [target/2, target].
  return bisect(h, 0.5 * target, target, 1e-14 * params.m);
}

double patient_domain_bound(const MarketParams& params) {
  const double s_star = patient_positivity_root(params);
  const auto defined = [&](double s1) { return std::isfinite(patient_curve_g(s1, params)); };
  const auto grid = log_grid(1e-9 * s_star, s_star, kScanPoints);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!defined(grid[i])) {
      double a = grid[i - 1], b = grid[i];
      for (int it = 0; it < 200 && b - a > 1e-14 * params.m; ++it) {
        const double mid = 0.5 * (a + b);
        (defined(mid) ? a : b) = mid;
      }
      return std::min(a, s_star);
    }
  }
  return s_star;
}

StationarySolution stationary_greedy(const MarketParams& params, std::optional<double> tol) {
  validate_params(params);
  const Bracketing curves{[&](double s) { return greedy_curve_f(s, params) - greedy_curve_g(s, params); },
                          [&](double s) { return greedy_curve_g(s, params); }};
  return solve(Policy::Greedy, params, tol.value_or(default_stationary_tol(params)), 1e-6 * params.m, params.m,
               curves);
}

StationarySolution stationary_patient(const MarketParams& params, std::optional<double> tol) {
  validate_params(params);
  // g needs log(q^{s0}) recovered from 1 + x with x near -1, which cancels once
  // alpha * s0 is large. The easy-type residual at s0 = f(s1) is decreasing in s0,
  // so its negative has the sign of f - g and is +inf-safe past s**. Scan up to s*.
  const double s_star = patient_positivity_root(params);
  const double hi = s_star * (1.0 - 1e-12);
  const double lo = std::min(1e-6 * params.m, 1e-6 * s_star);
  const Bracketing curves{[&](double s1) {
                            const double s0 = patient_curve_f(s1, params);
                            return -symmetric_rhs(Policy::Patient, s0, s1, params)[0];
                          },
                          [&](double s) { return patient_curve_f(s, params); }};
  return solve(Policy::Patient, params, tol.value_or(default_stationary_tol(params)), lo, hi, curves);
}

StationarySolution stationary(Policy policy, const MarketParams& params, std::optional<double> tol) {
  return policy == Policy::Greedy ? stationary_greedy(params, tol) : stationary_patient(params, tol);
}

namespace {

std::vector<double> loss_integrand(Policy policy, std::span<const double> sizes, const MarketParams& params) {
  std::vector<double> out(sizes.begin(), sizes.end());
  if (policy == Policy::Patient) {
    const OdeState state(out);
    for (TypeIndex k = 0; k < out.size(); ++k) {
      out[k] = out[k] == 0.0 ? 0.0 : std::exp(std::log(out[k]) + log_perish_prob(state, k, params.alpha));
    }
  }
  return out;
}

LossReport finish_loss(const std::vector<double>& integrand, const MarketParams& params) {
  LossReport report;
  double sum = 0.0;
  for (TypeIndex k = 0; k < integrand.size(); ++k) {
    report.per_type.push_back(integrand[k] / params.arrival_rate(k));
    sum += integrand[k];
  }
  report.total = sum / params.m;
  return report;
}

}  // namespace

LossReport loss_ode(Policy policy, const OdeState& sizes, const MarketParams& params) {
  if (sizes.num_types() != params.num_types()) throw std::invalid_argument("state has the wrong length");
  return finish_loss(loss_integrand(policy, sizes.sizes(), params), params);
}

LossReport loss_ode(Policy policy, const Trajectory& trajectory, const MarketParams& params, double window_start) {
  std::vector<double> avg(params.num_types(), 0.0);
  double span = 0.0;
  std::optional<std::pair<double, std::vector<double>>> prev;
  std::vector<double> last;
  for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
    if (trajectory.times[i] < window_start) continue;
    auto cur = loss_integrand(policy, trajectory.states[i], params);
    if (prev) {
      const double dt = trajectory.times[i] - prev->first;
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += 0.5 * dt * (prev->second[k] + cur[k]);
      span += dt;
    }
    last = cur;
    prev.emplace(trajectory.times[i], std::move(cur));
  }
  if (!prev) throw std::invalid_argument("trajectory has no samples after the window start");
  if (span > 0.0) {
    for (double& v : avg) v /= span;
  } else {
    avg = last;
  }
  return finish_loss(avg, params);
}

std::vector<double> little_waiting_times(const OdeState& sizes, const MarketParams& params) {
  std::vector<double> out;
  for (TypeIndex k = 0; k < sizes.num_types(); ++k) out.push_back(sizes[k] / params.arrival_rate(k));
  return out;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::GreedyLinear: return "greedy-linear";
    case Regime::PatientSupercritical: return "patient-supercritical";
    case Regime::PatientSubcritical: return "patient-subcritical";
    case Regime::PatientCritical: return "patient-critical";
  }
  return "unknown";
}

AsymptoticPrediction asymptotic_prediction(Policy policy, const MarketParams& params) {
  validate_params(params);
  AsymptoticPrediction out;
  if (policy == Policy::Greedy) {
    out.regime = Regime::GreedyLinear;
    out.predicted_exponent_or_rate = 1.0;
    return out;
  }
  const double p = params.p;
  const double load = p * params.lambda;
  out.easy_exponent = 0.5;
  if (std::abs(load - 0.5) <= 1e-12) {
    out.regime = Regime::PatientCritical;
    out.predicted_exponent_or_rate = 0.5;
  } else if (load > 0.5) {
    out.regime = Regime::PatientSupercritical;
    out.predicted_exponent_or_rate = 1.0 - 1.0 / (2.0 * p) - (p - 1.0) * params.lambda;
    std::vector<double> sizes(params.num_types(), (params.lambda - 1.0 / (2.0 * p)) * params.m);
    sizes[0] = params.easy_share() * params.m;
    out.predicted_sizes = std::move(sizes);
  } else {
    out.regime = Regime::PatientSubcritical;
    out.predicted_exponent_or_rate = 0.5;
    const double hard = std::log(1.0 / (1.0 - 2.0 * load)) / (p * params.alpha) + std::log(1.0 - 2.0 * load) / (2.0 * p);
    std::vector<double> sizes(params.num_types(), hard);
    sizes[0] = 0.5 * params.m;
    out.predicted_sizes = std::move(sizes);
  }
  return out;
}

std::string stationary_report_json(const StationarySolution& solution) {
  const auto& prm = solution.params;
  nlohmann::ordered_json j;
  j["policy"] = to_string(solution.policy);
  j["params"] = {{"p", prm.p}, {"lambda", prm.lambda}, {"m", prm.m}, {"alpha", prm.alpha}, {"d", prm.d}};
  j["sizes"] = std::vector<double>(solution.sizes.sizes().begin(), solution.sizes.sizes().end());
  j["residual"] = solution.residual;
  j["tolerance"] = solution.tolerance;
  j["loss_per_type"] = solution.loss.per_type;
  j["loss_total"] = solution.loss.total;
  j["waits"] = solution.waits;
  j["multiple_roots"] = solution.multiple_roots;
  j["candidates"] = solution.candidates;
  const auto pred = asymptotic_prediction(solution.policy, prm);
  j["regime"] = to_string(pred.regime);
  j["predicted_exponent_or_rate"] = pred.predicted_exponent_or_rate;
  if (pred.predicted_sizes) j["predicted_sizes"] = *pred.predicted_sizes;
  return j.dump(2);
}

}  // namespace dynmatch
