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

#include "dynmatch/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dynmatch {

std::string_view to_string(Policy policy) {
  return policy == Policy::Greedy ? "greedy" : "patient";
}

Policy parse_policy(std::string_view text) {
  if (text == "greedy") return Policy::Greedy;
  if (text == "patient") return Policy::Patient;
  throw std::invalid_argument("unknown policy '" + std::string(text) + "' (expected greedy or patient)");
}

MarketParams MarketParams::from_density(int p, double lambda, double m, double d, double horizon) {
  MarketParams params;
  params.p = p;
  params.lambda = lambda;
  params.m = m;
  params.d = d;
  params.alpha = d / m;
  params.horizon = horizon;
  return params;
}

MarketParams MarketParams::from_alpha(int p, double lambda, double m, double alpha, double horizon) {
  MarketParams params;
  params.p = p;
  params.lambda = lambda;
  params.m = m;
  params.alpha = alpha;
  params.d = alpha * m;
  params.horizon = horizon;
  return params;
}

MarketParams MarketParams::with_density(double new_d) const {
  return from_density(p, lambda, m, new_d, horizon);
}

MarketParams MarketParams::with_lambda(double new_lambda) const {
  MarketParams copy = *this;
  copy.lambda = new_lambda;
  return copy;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw InvalidParams("invalid market parameters: " + what); }

template <typename T>
std::string fmt(const char* name, T value) {
  std::ostringstream out;
  out << name << " = " << value;
  return out.str();
}

}  // namespace

const MarketParams& validate_params(const MarketParams& params) {
  if (params.p < 1) fail(fmt("p", params.p) + " (need at least one hard type)");
  for (double v : {params.lambda, params.m, params.alpha, params.d, params.horizon}) {
    if (!std::isfinite(v)) fail("non-finite parameter value");
  }
  if (!(params.lambda > 0.0)) fail(fmt("lambda", params.lambda) + " (need lambda > 0)");
  if (!(params.p * params.lambda < 1.0)) {
    fail(fmt("p*lambda", params.p * params.lambda) + " (need lambda < 1/p)");
  }
  if (!(params.m >= 1.0)) fail(fmt("m", params.m) + " (need m >= 1)");
  if (!(params.alpha > 0.0 && params.alpha < 1.0)) fail(fmt("alpha", params.alpha) + " (need 0 < alpha < 1)");
  const double implied = params.alpha * params.m;
  if (std::abs(params.d - implied) > 1e-12 * std::max(1.0, std::abs(params.d))) {
    fail(fmt("d", params.d) + " but alpha*m = " + std::to_string(implied) + " (need d = alpha*m)");
  }
  if (!(params.horizon > 0.0)) fail(fmt("horizon", params.horizon) + " (need horizon > 0)");
  return params;
}

PoolState::PoolState(std::vector<double> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("pool state needs the easy type and at least one hard type");
  for (double s : sizes_) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("pool sizes must be finite and nonnegative");
  }
}

PoolState::PoolState(std::initializer_list<double> sizes) : PoolState(std::vector<double>(sizes)) {}

PoolState PoolState::empty(std::size_t num_types) { return PoolState(std::vector<double>(num_types, 0.0)); }

PoolState PoolState::symmetric(int p, double easy, double hard) {
  std::vector<double> sizes(static_cast<std::size_t>(p) + 1, hard);
  sizes[0] = easy;
  return PoolState(std::move(sizes));
}

double PoolState::at(TypeIndex k) const {
  if (k >= sizes_.size()) throw std::out_of_range("type index " + std::to_string(k) + " out of range");
  return sizes_[k];
}

double PoolState::total() const { return std::accumulate(sizes_.begin(), sizes_.end(), 0.0); }

double PoolState::hard_total() const { return std::accumulate(sizes_.begin() + 1, sizes_.end(), 0.0); }

bool PoolState::hard_symmetric() const {
  return std::all_of(sizes_.begin() + 1, sizes_.end(), [&](double s) { return s == sizes_[1]; });
}

}  // namespace dynmatch
