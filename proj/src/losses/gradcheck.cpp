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

#include "anchormine/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "anchormine/random.hpp"
#include "anchormine/simulator.hpp"

namespace anchormine {

namespace {

class Draw {
 public:
  explicit Draw(KeyedRng rng) : rng_(rng) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(counter_++); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_.bits(counter_++) % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  KeyedRng rng_;
  std::uint64_t counter_ = 0;
};

std::optional<LossProblem> try_problem(std::uint64_t seed, int trial, int attempt) {
  Draw d(KeyedRng({seed, 0x9c, static_cast<std::uint64_t>(trial),
                   static_cast<std::uint64_t>(attempt)}));
  std::vector<Box> faces;
  const int n_faces = d.integer(1, 4);
  for (int f = 0; f < n_faces; ++f) {
    const double w = d.uniform(12, 48);
    const double h = w * d.uniform(1.0, 1.4);
    const double x = d.uniform(0, 96 - w);
    const double y = d.uniform(0, 96 - h);
    faces.push_back({x, y, x + w, y + h});
  }
  std::vector<Box> anchors;
  for (int i = 0; i < 200; ++i) {
    const double side = d.uniform(6, 60);
    double cx = 0;
    double cy = 0;
    if (d.uniform(0, 1) < 0.7) {
      const Box& f = faces[static_cast<std::size_t>(d.integer(0, n_faces - 1))];
      cx = f.cx() + d.uniform(-0.6, 0.6) * f.width();
      cy = f.cy() + d.uniform(-0.6, 0.6) * f.height();
    } else {
      cx = d.uniform(0, 96);
      cy = d.uniform(0, 96);
    }
    anchors.push_back({cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2});
  }
  const AnchorGrid grid = AnchorGrid::from_boxes(std::move(anchors));

  RegressorModel model;
  model.quality = d.uniform(0.5, 1.0);
  model.noise_sigma = 0.05;
  model.seed = seed;
  const std::vector<Box> regressed =
      simulate_regression(grid, faces, model, trial, static_cast<std::uint64_t>(attempt));

  static constexpr std::array<double, 3> kT = {0.5, 0.6, 0.7};
  CompensationParams comp;
  comp.T = kT[static_cast<std::size_t>(d.integer(0, 2))];
  comp.K = d.integer(2, 5);

  LossProblem p;
  p.assignment = compensate(match_first_step(grid, faces, MatchParams{}), grid, faces,
                            regressed, comp);
  p.quality = compute_quality(regressed, faces);
  p.ignore = ignore_mask(p.assignment, p.quality);

  const bool any_com = std::any_of(p.assignment.source.begin(), p.assignment.source.end(),
                                   [](Source s) { return s == Source::kHamboxCompensated; });
  const bool any_ignored = std::find(p.ignore.begin(), p.ignore.end(), true) != p.ignore.end();
  if (!any_com || !any_ignored) return std::nullopt;

  static constexpr std::array<double, 5> kGamma = {0.0, 0.5, 1.0, 2.0, 3.0};
  p.params.alpha = d.uniform(0.1, 0.9);
  p.params.gamma = kGamma[static_cast<std::size_t>(d.integer(0, 4))];
  p.logits.resize(grid.size());
  for (double& x : p.logits) x = d.uniform(-4, 4);
  return p;
}

// The classification loss recomputed from its definition in extended precision
// from logits, so central differences keep about 19 significant digits. The
// probability clamp is not modelled; problem logits stay far from it.
long double reference_cls_loss(const std::vector<double>& logits, const LossProblem& p) {
  const long double a = p.params.alpha;
  const long double g = p.params.gamma;
  long double com = 0.0L;
  long double norm = 0.0L;
  std::size_t n_com = 0;
  std::size_t n_norm = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const long double x = logits[i];
    const long double prob = 1.0L / (1.0L + std::exp(-x));
    const long double log_p = -std::log1p(std::exp(-x));
    const long double log_q = -std::log1p(std::exp(x));
    const long double pos = -a * std::pow(1.0L - prob, g) * log_p;
    const long double neg = -(1.0L - a) * std::pow(prob, g) * log_q;
    const Source src = p.assignment.source[i];
    if (src == Source::kHamboxCompensated) {
      com += static_cast<long double>(p.quality.F[i]) * pos;
      ++n_com;
    } else if (p.assignment.face_of[i] >= 0) {
      norm += pos;
      ++n_norm;
    } else if (!p.ignore[i] && p.quality.F[i] < kHighQualityIoU) {
      norm += neg;
    }
  }
  long double total = 0.0L;
  if (n_com > 0) total += com / static_cast<long double>(n_com);
  if (n_norm > 0) total += norm / static_cast<long double>(n_norm);
  return total;
}

}  // namespace

LossProblem random_loss_problem(std::uint64_t seed, int trial) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    if (auto p = try_problem(seed, trial, attempt)) return std::move(*p);
  }
  throw std::runtime_error("random_loss_problem: no instance with compensated and ignored anchors");
}

double gradient_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(std::uint64_t seed, int trials, double h, bool corrupt) {
  if (trials < 1) throw std::invalid_argument("gradient_check: trials must be >= 1");
  GradCheckResult r;
  r.trials = trials;
  for (int t = 0; t < trials; ++t) {
    LossProblem p = random_loss_problem(seed, t);
    std::vector<double> grad =
        cls_loss_grad(p.logits, p.assignment, p.quality, p.ignore, p.params);
    if (corrupt) {
      const auto it = std::find_if(grad.begin(), grad.end(), [](double g) { return g != 0.0; });
      if (it != grad.end()) *it *= 1.01;
    }
    std::vector<double> x = p.logits;
    const double loss = cls_loss_from_logits(x, p.assignment, p.quality, p.ignore, p.params);
    const auto ref = static_cast<double>(reference_cls_loss(x, p));
    r.max_loss_rel_error = std::max(r.max_loss_rel_error, gradient_rel_error(loss, ref));
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (p.ignore[i] && grad[i] != 0.0) r.ignored_exactly_zero = false;
      const double x0 = x[i];
      const double xp = x0 + h;
      const double xm = x0 - h;
      x[i] = xp;
      const long double up = reference_cls_loss(x, p);
      x[i] = xm;
      const long double down = reference_cls_loss(x, p);
      x[i] = x0;
      // Divide by the step actually taken after rounding of x0 +- h.
      const auto step = static_cast<long double>(xp) - static_cast<long double>(xm);
      const auto numeric = static_cast<double>((up - down) / step);
      const double err = gradient_rel_error(grad[i], numeric);
      if (err > r.max_rel_error || r.worst_trial < 0) {
        r.max_rel_error = err;
        r.worst_trial = t;
        r.worst_anchor = i;
        r.worst_analytic = grad[i];
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

}  // namespace anchormine
