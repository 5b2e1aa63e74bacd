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

// Orthant-wise limited-memory quasi-Newton minimization of
//   f(w) = loss(w) + l1 * sum_i |w_i|
// for a smooth, convex loss.

#ifndef RUNON_OWLQN_HPP_
#define RUNON_OWLQN_HPP_

#include <functional>
#include <span>
#include <vector>

namespace runon {

struct OwlqnOptions {
  double l1 = 0.0;
  int max_iterations = 300;
  /// Stop when |f_prev - f| / max(|f_prev|, 1e-300) falls below this.
  double tolerance = 1e-6;
  int history = 10;
  int max_backtracks = 40;
};

struct OwlqnResult {
  int iterations = 0;
  bool converged = false;
  /// Regularized objective at the start and after every accepted step.
  std::vector<double> objective;
};

/// Evaluates loss(w), writing its gradient into `grad`.
using LossFunction = std::function<double(std::span<const double> w, std::span<double> grad)>;

/// Minimizes in place starting from `w`. The objective sequence is
/// non-increasing.
OwlqnResult owlqn_minimize(const LossFunction& loss, std::vector<double>& w,
                           const OwlqnOptions& options);

}  // namespace runon

#endif  // RUNON_OWLQN_HPP_
