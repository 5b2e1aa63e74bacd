// Copyright 2026 The runon Authors.
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

#include "runon/owlqn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "runon/error.hpp"

namespace runon {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1_norm(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += std::abs(x);
  return s;
}

// Subgradient of minimum norm for the regularized objective.
void pseudo_gradient(std::span<const double> w, std::span<const double> g, double l1,
                     std::span<double> pg) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0) {
      pg[i] = g[i] + l1;
    } else if (w[i] < 0) {
      pg[i] = g[i] - l1;
    } else if (g[i] + l1 < 0) {
      pg[i] = g[i] + l1;
    } else if (g[i] - l1 > 0) {
      pg[i] = g[i] - l1;
    } else {
      pg[i] = 0.0;
    }
  }
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace

OwlqnResult owlqn_minimize(const LossFunction& loss, std::vector<double>& w,
                           const OwlqnOptions& options) {
  if (options.l1 < 0) throw InvalidArgument("negative L1 weight");
  const std::size_t n = w.size();
  std::vector<double> g(n), pg(n), d(n), wn(n), gn(n), alpha_buf;
  std::deque<Pair> mem;

  double f = loss(w, g) + options.l1 * l1_norm(w);
  OwlqnResult result;
  result.objective.push_back(f);

  for (int it = 0; it < options.max_iterations; ++it) {
    pseudo_gradient(w, g, options.l1, pg);
    const double pg_norm = std::sqrt(dot(pg, pg));
    if (pg_norm == 0.0) {
      result.converged = true;
      break;
    }

    // Two-loop recursion on -pg.
    for (std::size_t i = 0; i < n; ++i) d[i] = -pg[i];
    alpha_buf.assign(mem.size(), 0.0);
    for (std::size_t k = mem.size(); k-- > 0;) {
      alpha_buf[k] = mem[k].rho * dot(mem[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[k] * mem[k].y[i];
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& x : d) x *= gamma;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      double beta = mem[k].rho * dot(mem[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += mem[k].s[i] * (alpha_buf[k] - beta);
    }
    // Keep only components that agree in sign with the steepest descent.
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] * pg[i] >= 0) d[i] = 0.0;
    }

    double step = mem.empty() ? 1.0 / pg_norm : 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) {
        double orthant = w[i] != 0.0 ? (w[i] > 0 ? 1.0 : -1.0) : (pg[i] < 0 ? 1.0 : -1.0);
        double x = w[i] + step * d[i];
        wn[i] = x * orthant > 0 ? x : 0.0;
      }
      fn = loss(wn, gn) + options.l1 * l1_norm(wn);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += pg[i] * (wn[i] - w[i]);
      if (fn <= f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No progress possible along any projected direction.
      result.converged = true;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = wn[i] - w[i];
      p.y[i] = gn[i] - g[i];
    }
    double sy = dot(p.s, p.y);
    if (sy > 0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > options.history) mem.pop_front();
    }
    w.swap(wn);
    g.swap(gn);
    const double prev = f;
    f = fn;
    result.objective.push_back(f);
    result.iterations = it + 1;
    if (std::abs(prev - f) / std::max(std::abs(prev), 1e-300) < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace runon
