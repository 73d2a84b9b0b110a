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

#include "anchormine/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace anchormine {

std::string to_string(const Box& b) {
  return fmt::format("({}, {}, {}, {})", b.x0, b.y0, b.x1, b.y1);
}

double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoxDelta encode(const Box& anchor, const Box& target) {
  if (!(anchor.width() > 0.0 && anchor.height() > 0.0)) {
    throw std::domain_error("encode: anchor has non-positive size " +
                            to_string(anchor));
  }
  if (!(target.width() > 0.0 && target.height() > 0.0)) {
    throw std::domain_error("encode: target has non-positive size " +
                            to_string(target));
  }
  const double aw = anchor.width();
  const double ah = anchor.height();
  return {(target.cx() - anchor.cx()) / aw, (target.cy() - anchor.cy()) / ah,
          std::log(target.width() / aw), std::log(target.height() / ah)};
}

Box decode(const Box& anchor, const BoxDelta& delta) {
  const double aw = anchor.width();
  const double ah = anchor.height();
  const double cx = anchor.cx() + delta.tx * aw;
  const double cy = anchor.cy() + delta.ty * ah;
  const double half_w = 0.5 * aw * std::exp(delta.tw);
  const double half_h = 0.5 * ah * std::exp(delta.th);
  return {cx - half_w, cy - half_h, cx + half_w, cy + half_h};
}

std::vector<std::size_t> nms(std::span<const Box> boxes,
                             std::span<const double> scores,
                             double iou_threshold) {
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument(
        fmt::format("nms: {} boxes but {} scores", boxes.size(), scores.size()));
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("nms: iou_threshold {} outside [0, 1]", iou_threshold));
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<std::size_t> kept;
  for (const std::size_t cand : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(boxes[k], boxes[cand]) > iou_threshold;
    });
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

}  // namespace anchormine
