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

// Independent reference implementations and random generators shared by the
// unit tests and the acceptance runner. Nothing here calls the library code it
// is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "anchormine/anchors.hpp"
#include "anchormine/assignment.hpp"
#include "anchormine/geometry.hpp"
#include "anchormine/mining.hpp"

namespace anchormine::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng_); }

  Box box(double extent, double min_side, double max_side) {
    const double w = uniform(min_side, max_side);
    const double h = uniform(min_side, max_side);
    const double x = uniform(0.0, extent - w);
    const double y = uniform(0.0, extent - h);
    return {x, y, x + w, y + h};
  }

  // A box whose center lies near `around`, sized relative to it.
  Box box_near(const Box& around, double spread, double lo_scale, double hi_scale) {
    const double s = uniform(lo_scale, hi_scale);
    const double w = around.width() * s * uniform(0.8, 1.25);
    const double h = around.height() * s * uniform(0.8, 1.25);
    const double cx = around.cx() + uniform(-spread, spread) * around.width();
    const double cy = around.cy() + uniform(-spread, spread) * around.height();
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// IoU via 1-D overlap = len_a + len_b - hull length.
inline double oracle_iou(const Box& a, const Box& b) {
  const auto overlap = [](double a0, double a1, double b0, double b1) {
    const double hull = std::max(a1, b1) - std::min(a0, b0);
    return std::max(0.0, (a1 - a0) + (b1 - b0) - hull);
  };
  const double inter = overlap(a.x0, a.x1, b.x0, b.x1) * overlap(a.y0, a.y1, b.y0, b.y1);
  const double area_a = (a.x1 - a.x0) * (a.y1 - a.y0);
  const double area_b = (b.x1 - b.x0) * (b.y1 - b.y0);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Counts sample points on a regular lattice of pitch `res` covering both boxes.
inline double raster_iou(const Box& a, const Box& b, double res = 0.25) {
  const double x_lo = std::floor(std::min(a.x0, b.x0));
  const double y_lo = std::floor(std::min(a.y0, b.y0));
  const double x_hi = std::max(a.x1, b.x1);
  const double y_hi = std::max(a.y1, b.y1);
  long in_a = 0;
  long in_b = 0;
  long in_both = 0;
  for (double y = y_lo + res / 2; y < y_hi; y += res) {
    const bool ya = y >= a.y0 && y < a.y1;
    const bool yb = y >= b.y0 && y < b.y1;
    if (!ya && !yb) continue;
    for (double x = x_lo + res / 2; x < x_hi; x += res) {
      const bool pa = ya && x >= a.x0 && x < a.x1;
      const bool pb = yb && x >= b.x0 && x < b.x1;
      in_a += pa;
      in_b += pb;
      in_both += pa && pb;
    }
  }
  const long uni = in_a + in_b - in_both;
  return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

// Quadratic greedy NMS. Uses the library IoU so that threshold comparisons
// see the same bits; the IoU itself is checked against oracle_iou elsewhere.
inline std::vector<std::size_t> brute_nms(const std::vector<Box>& boxes,
                                          const std::vector<double>& scores, double thr) {
  const std::size_t n = boxes.size();
  std::vector<bool> gone(n, false);
  std::vector<std::size_t> keep;
  for (;;) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!gone[i] && (best == n || scores[i] > scores[best])) best = i;
    }
    if (best == n) break;
    keep.push_back(best);
    gone[best] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!gone[i] && iou(boxes[best], boxes[i]) > thr) gone[i] = true;
    }
  }
  return keep;
}

struct BruteBest {
  std::vector<double> iou;
  std::vector<std::int32_t> face;
};

// Per-box max IoU over faces; lower face index on ties; -1 when nothing overlaps.
inline BruteBest brute_best_face(const std::vector<Box>& boxes, const std::vector<Box>& faces) {
  BruteBest b;
  b.iou.assign(boxes.size(), 0.0);
  b.face.assign(boxes.size(), -1);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const double v = iou(boxes[i], faces[f]);
      if (v > b.iou[i]) {
        b.iou[i] = v;
        b.face[i] = static_cast<std::int32_t>(f);
      }
    }
  }
  return b;
}

inline Assignment empty_assignment(std::size_t n_anchors, std::size_t n_faces) {
  Assignment a;
  a.face_of.assign(n_anchors, kBackground);
  a.target.assign(n_anchors, BoxDelta{});
  a.source.assign(n_anchors, Source::kNone);
  a.matched_count.assign(n_faces, 0);
  return a;
}

inline void set_positive(Assignment& a, std::size_t i, std::size_t f, const Box& anchor,
                         const Box& face, Source src) {
  a.face_of[i] = static_cast<std::int32_t>(f);
  a.target[i] = encode(anchor, face);
  a.source[i] = src;
  ++a.matched_count[f];
}

inline Assignment brute_first_step(const std::vector<Box>& anchors,
                                   const std::vector<Box>& faces, double thr) {
  Assignment a = empty_assignment(anchors.size(), faces.size());
  const BruteBest best = brute_best_face(anchors, faces);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (best.face[i] >= 0 && best.iou[i] >= thr) {
      const auto f = static_cast<std::size_t>(best.face[i]);
      set_positive(a, i, f, anchors[i], faces[f], Source::kStep1);
    }
  }
  return a;
}

// Compensation re-deriving eligibility from scratch before every acceptance:
// the best remaining background anchor whose regressed box beats T, until the
// face holds K anchors.
inline Assignment brute_compensate(Assignment a, const std::vector<Box>& anchors,
                                   const std::vector<Box>& faces,
                                   const std::vector<Box>& regressed, double T, int K) {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    int held = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) held += a.face_of[i] == static_cast<std::int32_t>(f);
    if (held >= K) continue;
    const int budget = K - held;
    for (int taken = 0; taken < budget; ++taken) {
      std::size_t pick = anchors.size();
      double pick_iou = -1.0;
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (a.face_of[i] >= 0) continue;
        const double v = iou(regressed[i], faces[f]);
        if (v > T && v > pick_iou) {
          pick = i;
          pick_iou = v;
        }
      }
      if (pick == anchors.size()) break;
      set_positive(a, pick, f, anchors[pick], faces[f], Source::kHamboxCompensated);
    }
  }
  return a;
}

struct MiningInstance {
  AnchorGrid grid;
  std::vector<Box> faces;
  std::vector<Box> regressed;
  Assignment step1;
  CompensationParams params;
};

// Faces, anchors clustered around them, regressed boxes pulled toward a face
// by a random amount. Roughly half the instances use a lattice grid.
inline MiningInstance random_mining_instance(Gen& g) {
  static constexpr double kT[] = {0.5, 0.7, 0.8, 0.9};
  MiningInstance m;
  const double extent = 160.0;
  const int n_faces = g.integer(1, 8);
  for (int f = 0; f < n_faces; ++f) m.faces.push_back(g.box(extent, 10.0, 60.0));
  if (g.coin()) {
    AnchorConfig c;
    c.levels = {{8.0, 16.0}, {16.0, 32.0}};
    c.scale_ratio = g.uniform(0.5, 1.2);
    m.grid = generate_anchors(c, 96, 96);  // 144 + 36 anchors
  } else {
    std::vector<Box> boxes;
    const int n = g.integer(1, 512);
    for (int i = 0; i < n; ++i) {
      const Box& f = m.faces[static_cast<std::size_t>(g.integer(0, n_faces - 1))];
      boxes.push_back(g.coin(0.8) ? g.box_near(f, 0.5, 0.5, 1.6) : g.box(extent, 4.0, 80.0));
    }
    m.grid = AnchorGrid::from_boxes(std::move(boxes));
  }
  const BruteBest best = brute_best_face(m.grid.anchors, m.faces);
  for (std::size_t i = 0; i < m.grid.size(); ++i) {
    const Box& a = m.grid.anchors[i];
    Box r = a;
    if (best.face[i] >= 0) {
      const Box& f = m.faces[static_cast<std::size_t>(best.face[i])];
      const double q = g.uniform(0.0, 1.0);
      r = {a.x0 + q * (f.x0 - a.x0), a.y0 + q * (f.y0 - a.y0), a.x1 + q * (f.x1 - a.x1),
           a.y1 + q * (f.y1 - a.y1)};
    }
    const double s = g.uniform(0.0, 1.5);
    r.x0 += g.uniform(-s, s);
    r.y0 += g.uniform(-s, s);
    r.x1 = std::max(r.x0 + 0.5, r.x1 + g.uniform(-s, s));
    r.y1 = std::max(r.y0 + 0.5, r.y1 + g.uniform(-s, s));
    m.regressed.push_back(r);
  }
  m.params.K = g.integer(1, 7);
  m.params.T = kT[g.integer(0, 3)];
  m.step1 = brute_first_step(m.grid.anchors, m.faces, 0.35);
  return m;
}

}  // namespace anchormine::testing
