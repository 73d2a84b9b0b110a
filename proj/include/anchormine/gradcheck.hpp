/*
 * Copyright (c) 2026 The anchormine Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "anchormine/assignment.hpp"
#include "anchormine/losses.hpp"
#include "anchormine/mining.hpp"

namespace anchormine {

// A random classification-loss problem with at least one compensated anchor
// and at least one ignored anchor.
struct LossProblem {
  Assignment assignment;
  AnchorQuality quality;
  std::vector<bool> ignore;
  std::vector<double> logits;
  LossParams params;
};

LossProblem random_loss_problem(std::uint64_t seed, int trial);

struct GradCheckResult {
  int trials = 0;
  double max_rel_error = 0.0;
  int worst_trial = -1;
  std::size_t worst_anchor = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // Library loss value against the extended-precision reference.
  double max_loss_rel_error = 0.0;
  // Every ignored anchor had an analytic gradient of exactly 0.
  bool ignored_exactly_zero = true;
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double gradient_rel_error(double analytic, double numeric);

// Compares cls_loss_grad with central differences of step h on `trials`
// random problems. Differences are taken on an extended-precision
// recomputation of the loss, which is also compared with cls_loss_from_logits. `corrupt` scales one analytic component by 1.01 per trial
// (negative control).
GradCheckResult gradient_check(std::uint64_t seed, int trials, double h = 1e-4,
                               bool corrupt = false);

}  // namespace anchormine
