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
#include <string>
#include <vector>

namespace anchormine {

// Axis-aligned box in continuous pixel coordinates. Width is x1 - x0 (no +1).
// Layout is four packed doubles; the SIMD kernels rely on it.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double cx() const { return x0 + 0.5 * width(); }
  double cy() const { return y0 + 0.5 * height(); }
  bool valid() const { return x1 >= x0 && y1 >= y0; }
  bool degenerate() const { return !(x1 > x0 && y1 > y0); }

  friend bool operator==(const Box&, const Box&) = default;
};
static_assert(sizeof(Box) == 4 * sizeof(double));

std::string to_string(const Box& b);

// Faster R-CNN style regression target with identity variances:
// tx, ty are center offsets over anchor size, tw, th are log size ratios.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;

  friend bool operator==(const BoxDelta&, const BoxDelta&) = default;
};

// Intersection over union. Zero-area inputs give 0, never NaN.
double iou(const Box& a, const Box& b);

// Throws std::domain_error when either box has non-positive width or height.
BoxDelta encode(const Box& anchor, const Box& target);
Box decode(const Box& anchor, const BoxDelta& delta);

// Greedy NMS. Candidates are visited by descending score (ties: lower index
// first); a candidate is suppressed when its IoU with an already kept box is
// strictly greater than iou_threshold. Returns kept indices in keep order.
std::vector<std::size_t> nms(std::span<const Box> boxes,
                             std::span<const double> scores,
                             double iou_threshold);

}  // namespace anchormine
