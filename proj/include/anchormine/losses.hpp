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
#include <span>
#include <vector>

#include "anchormine/assignment.hpp"
#include "anchormine/mining.hpp"

namespace anchormine {

// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-12;

struct LossParams {
  double alpha = 0.25;
  double gamma = 2.0;
  double smooth_l1_beta = 1.0;

  void validate() const;

  friend bool operator==(const LossParams&, const LossParams&) = default;
};

struct LossBreakdown {
  double cls_compensated = 0.0;
  double cls_normal = 0.0;
  double loc_compensated = 0.0;
  double loc_normal = 0.0;
  std::size_t n_com = 0;
  std::size_t n_norm = 0;

  double cls_total() const { return cls_compensated + cls_normal; }
  double loc_total() const { return loc_compensated + loc_normal; }
};

double sigmoid(double logit);

// y = 1: -alpha (1-p)^gamma ln p;  y = 0: -(1-alpha) p^gamma ln(1-p).
double sigmoid_focal(double p, int y, const LossParams& params);

// d sigmoid_focal(sigmoid(logit), y) / d logit. Zero inside the clamp region.
double sigmoid_focal_grad(double logit, int y, const LossParams& params);

double smooth_l1(double x, double beta);

/// Regression-aware classification loss.
///
/// Compensated set psi: anchors with source kHamboxCompensated, each weighted
/// by its F and trained toward label 1, normalized by N_com = |psi|.
/// Normal set Omega: every other positive (label 1, weight 1) plus every
/// background anchor that is not ignored (label 0, weight 1 when F < 0.5,
/// else 0), normalized by N_norm = number of normal positives. A term whose
/// normalizer is zero is 0. Only the cls_* and n_* fields are filled.
LossBreakdown regression_aware_cls_loss(std::span<const double> probs,
                                        const Assignment& assignment,
                                        const AnchorQuality& quality,
                                        const std::vector<bool>& ignore,
                                        const LossParams& params);

// Same loss evaluated at probs = sigmoid(logits).
double cls_loss_from_logits(std::span<const double> logits, const Assignment& assignment,
                            const AnchorQuality& quality, const std::vector<bool>& ignore,
                            const LossParams& params);

// Analytic gradient of the total classification loss w.r.t. each logit.
// Exactly zero for ignored anchors and for gated-out backgrounds.
std::vector<double> cls_loss_grad(std::span<const double> logits,
                                  const Assignment& assignment,
                                  const AnchorQuality& quality,
                                  const std::vector<bool>& ignore,
                                  const LossParams& params);

// Smooth-L1 over the four delta components, psi term over N_com and normal
// positives over N_norm. Only the loc_* and n_* fields are filled.
LossBreakdown location_loss(std::span<const BoxDelta> pred_deltas,
                            const Assignment& assignment, const LossParams& params);

}  // namespace anchormine
