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

#include "anchormine/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "anchormine/parallel.hpp"
#include "anchormine/random.hpp"

namespace anchormine {

double QualityRamp::at(int iteration) const {
  if (iterations <= 1) return end;
  const double t = std::clamp(static_cast<double>(iteration) / (iterations - 1), 0.0, 1.0);
  return start + (end - start) * t;
}

double RegressorModel::quality_at(int iteration) const {
  return ramp ? ramp->at(iteration) : quality;
}

void RegressorModel::validate() const {
  if (!(quality >= 0.0 && quality <= 1.0)) {
    throw std::invalid_argument(fmt::format("quality = {} outside [0, 1]", quality));
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument(fmt::format("noise_sigma = {} must be >= 0", noise_sigma));
  }
  if (ramp) {
    if (!(ramp->start >= 0.0 && ramp->start <= 1.0 && ramp->end >= 0.0 && ramp->end <= 1.0)) {
      throw std::invalid_argument("quality ramp endpoints must lie in [0, 1]");
    }
    if (ramp->iterations < 1) throw std::invalid_argument("quality ramp needs >= 1 iteration");
  }
}

double Scorer::probability(double f) const { return sigmoid(slope * f + bias); }

std::vector<Box> simulate_regression(const AnchorGrid& grid, std::span<const Box> faces,
                                     const RegressorModel& model, int iteration,
                                     std::uint64_t stream) {
  model.validate();
  const double q = model.quality_at(iteration);
  const double sigma = model.noise_sigma;
  const BestFace best = best_face_per_anchor(grid, faces);
  std::vector<Box> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Box& a = grid.anchors[i];
    const std::int32_t f = best.face[i];
    const Box& goal = f >= 0 ? faces[static_cast<std::size_t>(f)] : a;
    const double w = goal.width();
    const double h = goal.height();
    const double t = f >= 0 ? q : 0.0;

    // (1 - t) a + t g is exact at both ends.
    Box r{(1.0 - t) * a.x0 + t * goal.x0, (1.0 - t) * a.y0 + t * goal.y0,
          (1.0 - t) * a.x1 + t * goal.x1, (1.0 - t) * a.y1 + t * goal.y1};
    if (sigma > 0.0) {
      const KeyedRng rng({model.seed, stream, static_cast<std::uint64_t>(iteration), i});
      r.x0 += sigma * w * rng.normal(0);
      r.y0 += sigma * h * rng.normal(1);
      r.x1 += sigma * w * rng.normal(2);
      r.y1 += sigma * h * rng.normal(3);
      if (r.x0 > r.x1) std::swap(r.x0, r.x1);
      if (r.y0 > r.y1) std::swap(r.y0, r.y1);
    }
    // Keep every regressed box encodable.
    const double min_side = 1e-3;
    if (r.x1 - r.x0 < min_side) r.x1 = r.x0 + min_side;
    if (r.y1 - r.y0 < min_side) r.y1 = r.y0 + min_side;
    out[i] = r;
  }
  return out;
}

ImageStep simulate_image(const AnchorGrid& grid, std::span<const Box> faces,
                         const Assignment& step1, const SimulationSetup& setup,
                         int iteration, std::uint64_t stream) {
  ImageStep s;
  s.regressed = simulate_regression(grid, faces, setup.model, iteration, stream);
  s.assignment = compensate(step1, grid, faces, s.regressed, setup.comp);
  s.quality = compute_quality(s.regressed, faces);
  s.ignore = ignore_mask(s.assignment, s.quality);

  const std::size_t n = grid.size();
  s.scores.resize(n);
  std::vector<BoxDelta> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores[i] = setup.scorer.probability(s.quality.F[i]);
    pred[i] = encode(grid.anchors[i], s.regressed[i]);
  }
  const LossBreakdown cls =
      regression_aware_cls_loss(s.scores, s.assignment, s.quality, s.ignore, setup.loss);
  const LossBreakdown loc = location_loss(pred, s.assignment, setup.loss);
  s.loss = cls;
  s.loss.loc_compensated = loc.loc_compensated;
  s.loss.loc_normal = loc.loc_normal;

  for (std::size_t i = 0; i < n; ++i) {
    if (s.ignore[i]) ++s.n_ignored;
    if (s.assignment.source[i] == Source::kHamboxCompensated) {
      ++s.n_compensated;
      const auto f = static_cast<std::size_t>(s.assignment.face_of[i]);
      s.compensated_iou_sum += iou(s.regressed[i], faces[f]);
    }
  }
  return s;
}

std::vector<SimulationRecord> run_simulation(const std::vector<ImageRecord>& dataset,
                                             const SimulationSetup& setup, int n_iters) {
  return run_simulation(dataset, setup, n_iters, nullptr);
}

std::vector<SimulationRecord> run_simulation(const std::vector<ImageRecord>& dataset,
                                             const SimulationSetup& setup, int n_iters,
                                             const FinalStepSink& sink) {
  if (n_iters < 1) throw std::invalid_argument("run_simulation: n_iters must be >= 1");
  setup.model.validate();
  setup.comp.validate();
  setup.loss.validate();
  setup.match.validate();

  const std::size_t n_images = dataset.size();
  std::vector<AnchorGrid> grids(n_images);
  std::vector<std::vector<Box>> faces(n_images);
  std::vector<Assignment> step1(n_images);
  parallel_for(n_images, setup.threads, [&](std::size_t i) {
    const auto [w, h] = image_extent(dataset[i]);
    grids[i] = generate_anchors(setup.anchors, w, h);
    faces[i] = face_boxes(dataset[i]);
    step1[i] = match_first_step(grids[i], faces[i], setup.match);
  });

  std::vector<SimulationRecord> records;
  std::vector<ImageStep> steps(n_images);
  for (int t = 0; t < n_iters; ++t) {
    parallel_for(n_images, setup.threads, [&](std::size_t i) {
      steps[i] = simulate_image(grids[i], faces[i], step1[i], setup, t, i);
    });

    // Reduce in image order so the sums do not depend on the thread count.
    SimulationRecord rec;
    rec.iteration = t;
    double iou_sum = 0.0;
    for (const ImageStep& s : steps) {
      rec.loss.cls_compensated += s.loss.cls_compensated;
      rec.loss.cls_normal += s.loss.cls_normal;
      rec.loss.loc_compensated += s.loss.loc_compensated;
      rec.loss.loc_normal += s.loss.loc_normal;
      rec.loss.n_com += s.loss.n_com;
      rec.loss.n_norm += s.loss.n_norm;
      rec.n_compensated += s.n_compensated;
      rec.n_ignored += s.n_ignored;
      iou_sum += s.compensated_iou_sum;
    }
    if (n_images > 0) {
      const double inv = 1.0 / static_cast<double>(n_images);
      rec.loss.cls_compensated *= inv;
      rec.loss.cls_normal *= inv;
      rec.loss.loc_compensated *= inv;
      rec.loss.loc_normal *= inv;
    }
    if (rec.n_compensated > 0) {
      rec.mean_compensated_iou = iou_sum / static_cast<double>(rec.n_compensated);
    }
    records.push_back(rec);
  }
  if (sink) {
    for (std::size_t i = 0; i < n_images; ++i) sink(i, grids[i], faces[i], steps[i]);
  }
  return records;
}

std::vector<ImageRecord> make_synthetic_dataset(int n_images, std::uint64_t seed, int width,
                                                int height) {
  if (n_images < 0 || width <= 0 || height <= 0) {
    throw std::invalid_argument("make_synthetic_dataset: bad image count or size");
  }
  std::vector<ImageRecord> out;
  for (int im = 0; im < n_images; ++im) {
    const KeyedRng rng({seed, 0x5eed, static_cast<std::uint64_t>(im)});
    ImageRecord rec;
    rec.path = fmt::format("synthetic/{:04d}.jpg", im);
    rec.width = width;
    rec.height = height;
    const int n_faces = 1 + static_cast<int>(rng.bits(0) % 8);
    for (int f = 0; f < n_faces; ++f) {
      const std::uint64_t c = 1 + 4 * static_cast<std::uint64_t>(f);
      const double side = std::exp(std::log(6.0) + rng.uniform(c) * (std::log(256.0) - std::log(6.0)));
      const double w = std::round(side);
      const double h = std::round(side * (1.0 + 0.4 * rng.uniform(c + 1)));
      const double x = std::floor(rng.uniform(c + 2) * std::max(1.0, width - w));
      const double y = std::floor(rng.uniform(c + 3) * std::max(1.0, height - h));
      FaceAnnotation face;
      face.box = {x, y, x + w, y + h};
      rec.faces.push_back(face);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

LogitDescent optimize_logits(const Assignment& assignment, const AnchorQuality& quality,
                             const std::vector<bool>& ignore, const LossParams& params,
                             std::vector<double> logits, int steps, double step_size) {
  if (!(step_size > 0.0)) throw std::invalid_argument("optimize_logits: step_size must be > 0");
  if (steps < 0) throw std::invalid_argument("optimize_logits: steps must be >= 0");
  LogitDescent out;
  out.loss.push_back(cls_loss_from_logits(logits, assignment, quality, ignore, params));
  for (int s = 0; s < steps; ++s) {
    const std::vector<double> g = cls_loss_grad(logits, assignment, quality, ignore, params);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] -= step_size * g[i];
    out.loss.push_back(cls_loss_from_logits(logits, assignment, quality, ignore, params));
  }
  out.logits = std::move(logits);
  return out;
}

}  // namespace anchormine
