// Copyright 2026 The pfpl-se Authors
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

#include "pfpl/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfpl/error.hpp"

namespace pfpl {

namespace {

void check_sample(std::span<const double> x, const char* name) {
  require(!x.empty(), std::string("empirical sample '") + name + "' is empty");
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidInput(std::string("empirical sample '") + name + "' is not finite");
}

std::vector<std::size_t> sorted_order(std::span<const double> x) {
  // (value, index) order equals a stable sort on value
  std::vector<std::pair<double, std::size_t>> keyed(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) keyed[i] = {x[i], i};
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) idx[i] = keyed[i].second;
  return idx;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Hungarian algorithm (shortest augmenting path, O(n^3)) on a square cost
// matrix; returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

struct OracleSolution {
  Coupling coupling;
  double cost = 0.0;  // expected |x - y|^p under the coupling
};

OracleSolution solve_oracle(std::span<const double> a, std::span<const double> b, int p) {
  check_sample(a, "a");
  check_sample(b, "b");
  constexpr std::size_t kCap = 8;
  require(a.size() <= kCap && b.size() <= kCap,
          "exhaustive transport oracle supports at most 8 points per sample");
  require(p >= 1, "transport cost exponent must be >= 1");
  const std::size_t n = a.size(), m = b.size();
  const std::size_t l = std::lcm(n, m);
  const std::size_t ra = l / n, rb = l / m;
  auto cost_of = [&](std::size_t i, std::size_t j) { return std::pow(std::abs(a[i] - b[j]), p); };

  OracleSolution sol;
  sol.coupling.rows = n;
  sol.coupling.cols = m;
  sol.coupling.values.assign(n * m, 0.0);
  const double mass = 1.0 / static_cast<double>(l);

  if (n == m) {
    // Every coupling vertex is a permutation: enumerate them all.
    std::vector<std::size_t> perm(n), best;
    std::iota(perm.begin(), perm.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += cost_of(i, perm[i]);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t i = 0; i < n; ++i) sol.coupling.values[i * m + best[i]] = mass;
    sol.cost = best_cost * mass;
    return sol;
  }

  // Unequal sizes: split each point into equal atoms of mass 1/lcm(n, m); the
  // coupling polytope's vertices become permutations of the atoms.
  std::vector<double> cost(l * l);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) cost[i * l + j] = cost_of(i / ra, j / rb);
  }
  const auto assignment = solve_assignment(cost, l);
  double total = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t j = assignment[i];
    sol.coupling.values[(i / ra) * m + j / rb] += mass;
    total += cost[i * l + j];
  }
  sol.cost = total * mass;
  return sol;
}

}  // namespace

bool Coupling::is_feasible(double tol) const {
  if (values.size() != rows * cols || rows == 0 || cols == 0) return false;
  for (double v : values) {
    if (v < -tol) return false;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += at(i, j);
    if (std::abs(s - 1.0 / static_cast<double>(rows)) > tol) return false;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += at(i, j);
    if (std::abs(s - 1.0 / static_cast<double>(cols)) > tol) return false;
  }
  return true;
}

double w1_1d(std::span<const double> a, std::span<const double> b) { return w1_1d_backward(a, b, {}, {}); }

double w1_1d_backward(std::span<const double> a, std::span<const double> b, std::span<double> grad_a,
                      std::span<double> grad_b) {
  require(a.size() == b.size(), "w1_1d needs equal sample counts, got " + std::to_string(a.size()) + " and " +
                                    std::to_string(b.size()));
  check_sample(a, "a");
  check_sample(b, "b");
  const auto ia = sorted_order(a);
  const auto ib = sorted_order(b);
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[ia[i]] - b[ib[i]];
    total += std::abs(d);
    if (!grad_a.empty()) grad_a[ia[i]] += sign(d) * inv_n;
    if (!grad_b.empty()) grad_b[ib[i]] -= sign(d) * inv_n;
  }
  return total * inv_n;
}

double w1_oracle(std::span<const double> a, std::span<const double> b, int p) {
  return std::pow(solve_oracle(a, b, p).cost, 1.0 / p);
}

Coupling oracle_coupling(std::span<const double> a, std::span<const double> b, int p) {
  return solve_oracle(a, b, p).coupling;
}

double feature_w1(const FeatureSequence& c, const FeatureSequence& c_hat, ChannelAggregation aggregation) {
  return feature_w1_backward(c, c_hat, {}, aggregation);
}

double feature_w1_backward(const FeatureSequence& c, const FeatureSequence& c_hat, std::span<double> grad_c_hat,
                           ChannelAggregation aggregation) {
  require(c.same_shape(c_hat), "feature shapes differ: " + std::to_string(c.frames) + "x" +
                                   std::to_string(c.channels) + " vs " + std::to_string(c_hat.frames) + "x" +
                                   std::to_string(c_hat.channels));
  require(c.frames > 0 && c.channels > 0, "feature sequences are empty");
  require(grad_c_hat.empty() || grad_c_hat.size() == c_hat.values.size(), "feature gradient size mismatch");
  const double weight = aggregation == ChannelAggregation::mean ? 1.0 / static_cast<double>(c.channels) : 1.0;
  std::vector<double> a(c.frames), b(c.frames), gb(c.frames);
  double total = 0.0;
  for (std::size_t ch = 0; ch < c.channels; ++ch) {
    for (std::size_t t = 0; t < c.frames; ++t) {
      a[t] = c.at(t, ch);
      b[t] = c_hat.at(t, ch);
    }
    if (grad_c_hat.empty()) {
      total += w1_1d(a, b);
      continue;
    }
    std::fill(gb.begin(), gb.end(), 0.0);
    total += w1_1d_backward(a, b, {}, gb);
    for (std::size_t t = 0; t < c.frames; ++t) grad_c_hat[t * c.channels + ch] += weight * gb[t];
  }
  return total * weight;
}

}  // namespace pfpl
