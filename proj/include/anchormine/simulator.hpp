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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "anchormine/anchors.hpp"
#include "anchormine/assignment.hpp"
#include "anchormine/geometry.hpp"
#include "anchormine/ingest.hpp"
#include "anchormine/losses.hpp"
#include "anchormine/mining.hpp"

namespace anchormine {

// Linear schedule from `start` at iteration 0 to `end` at iterations - 1.
struct QualityRamp {
  double start = 0.0;
  double end = 0.95;
  int iterations = 50;

  double at(int iteration) const;

  friend bool operator==(const QualityRamp&, const QualityRamp&) = default;
};

// Synthetic stand-in for a detector's regression branch.
struct RegressorModel {
  double quality = 0.9;       // interpolation toward the best face, [0, 1]
  double noise_sigma = 0.02;  // corner jitter, fraction of the face side
  std::uint64_t seed = 0;
  std::optional<QualityRamp> ramp;  // overrides `quality` when set

  double quality_at(int iteration) const;
  void validate() const;

  friend bool operator==(const RegressorModel&, const RegressorModel&) = default;
};

// Classification score tied to regression quality: logistic(slope * F + bias).
struct Scorer {
  double slope = 4.0;
  double bias = -2.0;

  double probability(double f) const;

  friend bool operator==(const Scorer&, const Scorer&) = default;
};

// Anchors overlapping a face move toward their max-IoU face by q(t) in corner
// space plus Gaussian jitter scaled by that face's size; anchors overlapping
// nothing jitter around themselves. Noise is keyed by (seed, stream,
// iteration, anchor), so `stream` should differ per image.
std::vector<Box> simulate_regression(const AnchorGrid& grid, std::span<const Box> faces,
                                     const RegressorModel& model, int iteration,
                                     std::uint64_t stream = 0);

struct SimulationSetup {
  AnchorConfig anchors = default_anchor_config();
  MatchParams match;
  CompensationParams comp;
  LossParams loss;
  RegressorModel model;
  Scorer scorer;
  int threads = 1;
};

// Everything computed for one image at one iteration.
struct ImageStep {
  std::vector<Box> regressed;
  Assignment assignment;  // after compensation
  AnchorQuality quality;
  std::vector<bool> ignore;
  std::vector<double> scores;
  LossBreakdown loss;
  std::size_t n_compensated = 0;
  double compensated_iou_sum = 0.0;
  std::size_t n_ignored = 0;
};

ImageStep simulate_image(const AnchorGrid& grid, std::span<const Box> faces,
                         const Assignment& step1, const SimulationSetup& setup,
                         int iteration, std::uint64_t stream);

struct SimulationRecord {
  int iteration = 0;
  LossBreakdown loss;  // per-image mean of every term; counts are totals
  std::size_t n_compensated = 0;
  std::optional<double> mean_compensated_iou;
  std::size_t n_ignored = 0;
};

// Per iteration: regress, match step 1, compensate, score, mask and evaluate
// both losses for every image. Image i uses noise stream i.
std::vector<SimulationRecord> run_simulation(const std::vector<ImageRecord>& dataset,
                                             const SimulationSetup& setup, int n_iters);

// Receives the final iteration's per-image results, serially in image order.
using FinalStepSink = std::function<void(std::size_t image, const AnchorGrid& grid,
                                         std::span<const Box> faces, const ImageStep& step)>;
std::vector<SimulationRecord> run_simulation(const std::vector<ImageRecord>& dataset,
                                             const SimulationSetup& setup, int n_iters,
                                             const FinalStepSink& sink);

// Random faces (log-uniform sizes 6..256 px, height/width 1..1.4) on
// width x height images; 1..8 faces per image.
std::vector<ImageRecord> make_synthetic_dataset(int n_images, std::uint64_t seed,
                                                int width = 640, int height = 640);

struct LogitDescent {
  std::vector<double> loss;    // loss before each step, then after the last
  std::vector<double> logits;  // final logits
};

// Plain gradient descent on per-anchor logits with cls_loss_grad.
LogitDescent optimize_logits(const Assignment& assignment, const AnchorQuality& quality,
                             const std::vector<bool>& ignore, const LossParams& params,
                             std::vector<double> logits, int steps, double step_size);

}  // namespace anchormine
