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

#include "anchormine/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace anchormine {

void LossParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(fmt::format("alpha = {} outside (0, 1)", alpha));
  }
  if (!(gamma >= 0.0)) throw std::invalid_argument(fmt::format("gamma = {} must be >= 0", gamma));
  if (!(smooth_l1_beta > 0.0)) {
    throw std::invalid_argument(fmt::format("smooth_l1_beta = {} must be > 0", smooth_l1_beta));
  }
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double sigmoid_focal(double p, int y, const LossParams& params) {
  p = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  if (y == 1) return -params.alpha * std::pow(1.0 - p, params.gamma) * std::log(p);
  return -(1.0 - params.alpha) * std::pow(p, params.gamma) * std::log(1.0 - p);
}

double sigmoid_focal_grad(double logit, int y, const LossParams& params) {
  const double p = sigmoid(logit);
  const double q = sigmoid(-logit);  // 1 - p without cancellation
  if (p < kProbEpsilon || p > 1.0 - kProbEpsilon) return 0.0;
  const double a = params.alpha;
  const double g = params.gamma;
  if (y == 1) return a * std::pow(q, g) * (g * p * std::log(p) - q);
  return (1.0 - a) * std::pow(p, g) * (p - g * q * std::log(q));
}

double smooth_l1(double x, double beta) {
  const double ax = std::abs(x);
  return ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
}

namespace {

enum class Role { kCompensated, kPositive, kBackground, kExcluded };

void check_sizes(std::size_t n, const Assignment& a, const AnchorQuality& q,
                 const std::vector<bool>& ignore) {
  if (a.num_anchors() != n || q.F.size() != n || ignore.size() != n) {
    throw std::invalid_argument(fmt::format(
        "cls loss: {} scores, {} labels, {} quality values, {} ignore flags", n,
        a.num_anchors(), q.F.size(), ignore.size()));
  }
}

Role role_of(std::size_t i, const Assignment& a, const AnchorQuality& q,
             const std::vector<bool>& ignore) {
  if (a.source[i] == Source::kHamboxCompensated) return Role::kCompensated;
  if (a.positive(i)) return Role::kPositive;
  if (ignore[i] || !(q.F[i] < kHighQualityIoU)) return Role::kExcluded;
  return Role::kBackground;
}

struct Counts {
  std::size_t n_com = 0;
  std::size_t n_norm = 0;
};

Counts count_sets(const Assignment& a) {
  Counts c;
  for (std::size_t i = 0; i < a.num_anchors(); ++i) {
    if (a.source[i] == Source::kHamboxCompensated) {
      ++c.n_com;
    } else if (a.positive(i)) {
      ++c.n_norm;
    }
  }
  return c;
}

}  // namespace

LossBreakdown regression_aware_cls_loss(std::span<const double> probs,
                                        const Assignment& assignment,
                                        const AnchorQuality& quality,
                                        const std::vector<bool>& ignore,
                                        const LossParams& params) {
  params.validate();
  check_sizes(probs.size(), assignment, quality, ignore);
  const Counts c = count_sets(assignment);
  double com = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    switch (role_of(i, assignment, quality, ignore)) {
      case Role::kCompensated:
        com += quality.F[i] * sigmoid_focal(probs[i], 1, params);
        break;
      case Role::kPositive:
        norm += sigmoid_focal(probs[i], 1, params);
        break;
      case Role::kBackground:
        norm += sigmoid_focal(probs[i], 0, params);
        break;
      case Role::kExcluded:
        break;
    }
  }
  LossBreakdown out;
  out.n_com = c.n_com;
  out.n_norm = c.n_norm;
  out.cls_compensated = c.n_com > 0 ? com / static_cast<double>(c.n_com) : 0.0;
  out.cls_normal = c.n_norm > 0 ? norm / static_cast<double>(c.n_norm) : 0.0;
  return out;
}

double cls_loss_from_logits(std::span<const double> logits, const Assignment& assignment,
                            const AnchorQuality& quality, const std::vector<bool>& ignore,
                            const LossParams& params) {
  std::vector<double> probs(logits.size());
  std::transform(logits.begin(), logits.end(), probs.begin(), sigmoid);
  return regression_aware_cls_loss(probs, assignment, quality, ignore, params).cls_total();
}

std::vector<double> cls_loss_grad(std::span<const double> logits,
                                  const Assignment& assignment,
                                  const AnchorQuality& quality,
                                  const std::vector<bool>& ignore,
                                  const LossParams& params) {
  params.validate();
  check_sizes(logits.size(), assignment, quality, ignore);
  const Counts c = count_sets(assignment);
  const double inv_com = c.n_com > 0 ? 1.0 / static_cast<double>(c.n_com) : 0.0;
  const double inv_norm = c.n_norm > 0 ? 1.0 / static_cast<double>(c.n_norm) : 0.0;
  std::vector<double> grad(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    switch (role_of(i, assignment, quality, ignore)) {
      case Role::kCompensated:
        grad[i] = inv_com * quality.F[i] * sigmoid_focal_grad(logits[i], 1, params);
        break;
      case Role::kPositive:
        grad[i] = inv_norm * sigmoid_focal_grad(logits[i], 1, params);
        break;
      case Role::kBackground:
        grad[i] = inv_norm * sigmoid_focal_grad(logits[i], 0, params);
        break;
      case Role::kExcluded:
        break;
    }
  }
  return grad;
}

LossBreakdown location_loss(std::span<const BoxDelta> pred_deltas,
                            const Assignment& assignment, const LossParams& params) {
  params.validate();
  if (pred_deltas.size() != assignment.num_anchors()) {
    throw std::invalid_argument(fmt::format("location loss: {} predictions for {} anchors",
                                            pred_deltas.size(), assignment.num_anchors()));
  }
  if (assignment.target.size() != assignment.num_anchors()) {
    throw std::logic_error("location loss: assignment has no target storage");
  }
  const Counts c = count_sets(assignment);
  const double beta = params.smooth_l1_beta;
  double com = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < pred_deltas.size(); ++i) {
    if (!assignment.positive(i)) continue;
    const BoxDelta& p = pred_deltas[i];
    const BoxDelta& t = assignment.target[i];
    const double l = smooth_l1(p.tx - t.tx, beta) + smooth_l1(p.ty - t.ty, beta) +
                     smooth_l1(p.tw - t.tw, beta) + smooth_l1(p.th - t.th, beta);
    if (assignment.source[i] == Source::kHamboxCompensated) {
      com += l;
    } else {
      norm += l;
    }
  }
  LossBreakdown out;
  out.n_com = c.n_com;
  out.n_norm = c.n_norm;
  out.loc_compensated = c.n_com > 0 ? com / static_cast<double>(c.n_com) : 0.0;
  out.loc_normal = c.n_norm > 0 ? norm / static_cast<double>(c.n_norm) : 0.0;
  return out;
}

}  // namespace anchormine
