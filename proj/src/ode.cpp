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

#include "dynmatch/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dynmatch/match_prob.hpp"

namespace dynmatch {

namespace {

void check_dimension(const OdeState& state, const MarketParams& params) {
  if (state.num_types() != params.num_types()) throw std::invalid_argument("state has the wrong number of types");
}

}  // namespace

std::vector<double> greedy_rhs(const OdeState& state, const MarketParams& params) {
  check_dimension(state, params);
  const MatchProbTable pi(state, params.alpha);
  const std::size_t n = state.num_types();
  const double easy_rate = params.arrival_rate(kEasyType);
  const double hard_rate = params.lambda * params.m;
  std::vector<double> out(n);

  double easy_lost_to_hard = 0.0;
  for (TypeIndex j = 1; j < n; ++j) easy_lost_to_hard += pi(j, 0);
  out[0] = easy_rate * (1.0 - pi.row_sum(0)) - easy_rate * pi(0, 0) - hard_rate * easy_lost_to_hard - state[0];
  for (TypeIndex j = 1; j < n; ++j) {
    out[j] = -easy_rate * pi(0, j) - hard_rate * pi(j, j) + hard_rate * (1.0 - pi(j, 0) - pi(j, j)) - state[j];
  }
  return out;
}

std::vector<double> patient_rhs(const OdeState& state, const MarketParams& params) {
  check_dimension(state, params);
  const MatchProbTable pi(state, params.alpha);
  const std::size_t n = state.num_types();
  const double hard_rate = params.lambda * params.m;
  std::vector<double> out(n);

  double easy_taken = 0.0;
  for (TypeIndex k = 0; k < n; ++k) easy_taken += state[k] * pi(k, 0);
  out[0] = params.arrival_rate(kEasyType) - easy_taken - state[0];
  for (TypeIndex j = 1; j < n; ++j) {
    out[j] = hard_rate - state[0] * pi(0, j) - state[j] * pi(j, j) - state[j];
  }
  return out;
}

std::vector<double> policy_rhs(Policy policy, const OdeState& state, const MarketParams& params) {
  return policy == Policy::Greedy ? greedy_rhs(state, params) : patient_rhs(state, params);
}

std::array<double, 2> symmetric_rhs(Policy policy, double s0, double s1, const MarketParams& params) {
  const double a = params.alpha;
  const double p = params.p;
  const double easy_rate = params.arrival_rate(kEasyType);
  const double hard_rate = params.lambda * params.m;
  if (policy == Policy::Greedy) {
    const double ds0 = easy_rate * survival(s0 + p * s1, a) - easy_rate * hit_probability(s0, a) * survival(p * s1, a) -
                       hard_rate * p * survival(s1, a) * hit_probability(s0, a) - s0;
    const double ds1 = -easy_rate * hit_probability(p * s1, a) / p - hard_rate * hit_probability(s1, a) +
                       hard_rate * survival(s0 + s1, a) - s1;
    return {ds0, ds1};
  }
  const double ds0 = easy_rate - s0 * hit_probability(s0, a) * survival(p * s1, a) -
                     p * s1 * hit_probability(s0, a) * survival(s1, a) - s0;
  const double ds1 = hard_rate - s0 * hit_probability(p * s1, a) / p - s1 * hit_probability(s1, a) - s1;
  return {ds0, ds1};
}

// ---------------------------------------------------------------------------
// Integrators

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension (Hairer & Wanner's DOPRI5 dense output).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

using Vec = std::vector<double>;

double scaled_rms(const Vec& v, const Vec& y, const IntegratorOptions& opt) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
    acc += (v[i] / sc) * (v[i] / sc);
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double initial_step(const VectorField& f, double t0, const Vec& y0, const Vec& f0, double span,
                    const IntegratorOptions& opt) {
  const double d0 = scaled_rms(y0, y0, opt);
  const double d1n = scaled_rms(f0, y0, opt);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  Vec y1(y0.size()), f1(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) y1[i] = y0[i] + h0 * f0[i];
  f(t0 + h0, y1, f1);
  Vec diff(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) diff[i] = f1[i] - f0[i];
  const double d2 = scaled_rms(diff, y0, opt) / h0;
  const double dmax = std::max(d1n, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

class SampleSink {
 public:
  SampleSink(std::span<const double> samples, double t0, double t_end, Trajectory& out)
      : samples_(samples), out_(out) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i] < t0 || samples[i] > t_end || (i > 0 && samples[i] < samples[i - 1])) {
        throw std::invalid_argument("sample times must be sorted and inside the integration interval");
      }
    }
  }

  bool pending() const { return next_ < samples_.size(); }
  double next_time() const { return samples_[next_]; }
  void emit(double t, Vec y) {
    out_.times.push_back(t);
    out_.states.push_back(std::move(y));
    ++next_;
  }

 private:
  std::span<const double> samples_;
  Trajectory& out_;
  std::size_t next_ = 0;
};

void clip(Vec& y, Trajectory& out) {
  bool clipped = false;
  for (double& v : y) {
    if (v < 0.0) {
      v = 0.0;
      clipped = true;
    }
  }
  if (clipped) ++out.clip_events;
}

Trajectory integrate_dopri(const VectorField& f, std::span<const double> y0_in, double t0, double t_end,
                           std::span<const double> samples, const IntegratorOptions& opt) {
  Trajectory out;
  SampleSink sink(samples, t0, t_end, out);
  const std::size_t n = y0_in.size();
  const double span = t_end - t0;
  const double h_min = opt.min_step * span;

  Vec y(y0_in.begin(), y0_in.end());
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);
  f(t0, y, k1);
  double t = t0;
  while (sink.pending() && sink.next_time() == t0) sink.emit(t0, y);
  double h = opt.initial_step > 0.0 ? std::min(opt.initial_step, span) : initial_step(f, t0, y, k1, span, opt);

  while (t < t_end) {
    if (out.accepted_steps + out.rejected_steps >= opt.max_steps) {
      throw std::runtime_error("integrator step budget exhausted at t = " + std::to_string(t));
    }
    if (h < h_min) throw std::runtime_error("step size underflow at t = " + std::to_string(t));
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    f(t + h, y_new, k7);
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      acc += (err[i] / sc) * (err[i] / sc);
    }
    const double err_norm = std::sqrt(acc / static_cast<double>(n));
    if (!std::isfinite(err_norm)) {
      ++out.rejected_steps;
      h *= 0.1;
      continue;
    }
    if (err_norm > 1.0) {
      ++out.rejected_steps;
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      continue;
    }

    const double t_new = last ? t_end : t + h;
    while (sink.pending() && sink.next_time() <= t_new) {
      const double theta = (sink.next_time() - t) / h;
      const double theta1 = 1.0 - theta;
      Vec ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double r1 = y[i];
        const double r2 = y_new[i] - y[i];
        const double r3 = h * k1[i] - r2;
        const double r4 = r2 - h * k7[i] - r3;
        const double r5 = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        ys[i] = r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
      }
      if (opt.clip_negative) {
        for (double& v : ys) v = std::max(v, 0.0);
      }
      sink.emit(sink.next_time(), std::move(ys));
    }

    ++out.accepted_steps;
    t = t_new;
    y.swap(y_new);
    if (opt.clip_negative && std::any_of(y.begin(), y.end(), [](double v) { return v < 0.0; })) {
      clip(y, out);
      f(t, y, k7);
    }
    k1.swap(k7);
    const double factor = err_norm == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
    h *= factor;
  }
  if (out.times.empty() || out.times.back() != t_end) {
    out.times.push_back(t_end);
    out.states.push_back(y);
  }
  return out;
}

Trajectory integrate_rk4(const VectorField& f, std::span<const double> y0_in, double t0, double t_end,
                         std::span<const double> samples, const IntegratorOptions& opt) {
  Trajectory out;
  SampleSink sink(samples, t0, t_end, out);
  const std::size_t n = y0_in.size();
  Vec y(y0_in.begin(), y0_in.end());
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n), y_new(n), f_new(n);
  double t = t0;
  f(t, y, k1);
  while (sink.pending() && sink.next_time() == t0) sink.emit(t0, y);
  while (t < t_end) {
    if (out.accepted_steps >= opt.max_steps) throw std::runtime_error("integrator step budget exhausted");
    const double h = std::min(opt.fixed_step, t_end - t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    f(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    f(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    f(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) y_new[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    if (opt.clip_negative) clip(y_new, out);
    const double t_new = t + h >= t_end ? t_end : t + h;
    f(t_new, y_new, f_new);
    // Cubic Hermite interpolation between the step ends.
    while (sink.pending() && sink.next_time() <= t_new) {
      const double s = (sink.next_time() - t) / h;
      const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
      const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
      Vec ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        ys[i] = h00 * y[i] + h10 * h * k1[i] + h01 * y_new[i] + h11 * h * f_new[i];
      }
      sink.emit(sink.next_time(), std::move(ys));
    }
    ++out.accepted_steps;
    t = t_new;
    y.swap(y_new);
    k1.swap(f_new);
  }
  if (out.times.empty() || out.times.back() != t_end) {
    out.times.push_back(t_end);
    out.states.push_back(y);
  }
  return out;
}

}  // namespace

Trajectory integrate(const VectorField& field, std::span<const double> y0, double t0, double t_end,
                     std::span<const double> sample_times, const IntegratorOptions& options) {
  if (!(t_end > t0)) throw std::invalid_argument("integration end time must exceed the start time");
  if (y0.empty()) throw std::invalid_argument("empty initial state");
  if (options.method == StepMethod::ClassicalRK4) return integrate_rk4(field, y0, t0, t_end, sample_times, options);
  return integrate_dopri(field, y0, t0, t_end, sample_times, options);
}

Trajectory integrate(Policy policy, const OdeState& initial, const MarketParams& params, double t_end, double tol,
                     std::span<const double> sample_times) {
  validate_params(params);
  if (initial.num_types() != params.num_types()) throw std::invalid_argument("initial state has the wrong length");
  // Stages may dip below zero near an empty pool; the field is evaluated at the projection.
  VectorField field = [&](double, std::span<const double> y, std::span<double> dydt) {
    std::vector<double> sizes(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sizes[i] = std::max(y[i], 0.0);
    const auto rhs = policy_rhs(policy, OdeState(std::move(sizes)), params);
    std::copy(rhs.begin(), rhs.end(), dydt.begin());
  };
  IntegratorOptions options;
  options.abs_tol = tol * params.m;
  options.rel_tol = tol;
  return integrate(field, initial.sizes(), 0.0, t_end, sample_times, options);
}

std::vector<double> linspace_samples(double t_end, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {t_end};
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(i + 1 == count ? t_end : t_end * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t n = trajectory.states.empty() ? 0 : trajectory.states.front().size();
  out << 't';
  for (std::size_t k = 0; k < n; ++k) out << ",size_" << k;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
    out << trajectory.times[i];
    for (double v : trajectory.states[i]) out << ',' << v;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dynmatch
