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

#include <algorithm>
#include <cassert>

#include "anchormine/simd.hpp"

namespace anchormine::simd::scalar {

namespace {

// Operation order here is the contract every vector backend reproduces.
inline double iou_kernel(const Box& q, double q_area, const Box& b) {
  const double iw = std::max(0.0, std::min(q.x1, b.x1) - std::max(q.x0, b.x0));
  const double ih = std::max(0.0, std::min(q.y1, b.y1) - std::max(q.y0, b.y0));
  const double inter = iw * ih;
  const double b_area = (b.x1 - b.x0) * (b.y1 - b.y0);
  const double uni = q_area + b_area - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

void iou_one_to_many(const Box& query, std::span<const Box> boxes,
                     std::span<double> out) {
  assert(out.size() == boxes.size());
  const double q_area = (query.x1 - query.x0) * (query.y1 - query.y0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    out[i] = iou_kernel(query, q_area, boxes[i]);
  }
}

void iou_argmax_update(const Box& query, std::int32_t query_index,
                       std::span<const Box> boxes, std::span<double> best_iou,
                       std::span<std::int32_t> best_index) {
  assert(best_iou.size() == boxes.size() && best_index.size() == boxes.size());
  const double q_area = (query.x1 - query.x0) * (query.y1 - query.y0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double v = iou_kernel(query, q_area, boxes[i]);
    if (v > best_iou[i]) {
      best_iou[i] = v;
      best_index[i] = query_index;
    }
  }
}

}  // namespace anchormine::simd::scalar
