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

#include "anchormine/mining.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "anchormine/simd.hpp"

namespace anchormine {

void CompensationParams::validate() const {
  if (!(T >= 0.0 && T <= 1.0)) {
    throw std::invalid_argument(fmt::format("T = {} outside [0, 1]", T));
  }
  if (K < 1) throw std::invalid_argument(fmt::format("K = {} must be >= 1", K));
}

std::vector<Box> regress_all(const AnchorGrid& grid, std::span<const BoxDelta> deltas) {
  if (deltas.size() != grid.size()) {
    throw std::invalid_argument(fmt::format("regress_all: {} deltas for {} anchors",
                                            deltas.size(), grid.size()));
  }
  std::vector<Box> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decode(grid.anchors[i], deltas[i]);
  return out;
}

AnchorQuality compute_quality(std::span<const Box> regressed, std::span<const Box> faces) {
  AnchorQuality q;
  q.F.assign(regressed.size(), 0.0);
  q.best_face.assign(regressed.size(), kBackground);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    simd::iou_argmax_update(faces[f], static_cast<std::int32_t>(f), regressed, q.F,
                            q.best_face);
  }
  q.high_quality.resize(regressed.size());
  for (std::size_t i = 0; i < regressed.size(); ++i) {
    q.high_quality[i] = q.F[i] >= kHighQualityIoU;
  }
  return q;
}

Assignment compensate(Assignment assignment, const AnchorGrid& grid,
                      std::span<const Box> faces, std::span<const Box> regressed,
                      const CompensationParams& params) {
  params.validate();
  const std::size_t n = grid.size();
  if (assignment.num_anchors() != n || assignment.target.size() != n ||
      assignment.source.size() != n || regressed.size() != n) {
    throw std::invalid_argument(fmt::format(
        "compensate: {} anchors, {} labels, {} regressed boxes", n,
        assignment.num_anchors(), regressed.size()));
  }
  if (assignment.num_faces() != faces.size()) {
    throw std::invalid_argument(fmt::format("compensate: counts for {} faces, {} faces given",
                                            assignment.num_faces(), faces.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment.positive(i) && assignment.source[i] != Source::kStep1) {
      throw std::invalid_argument(
          fmt::format("compensate: anchor {} is positive but not from step 1", i));
    }
  }

  std::vector<double> online_iou(n);
  std::vector<std::pair<double, std::uint32_t>> ranked;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const int matched = assignment.matched_count[f];
    if (matched >= params.K) continue;
    int budget = params.K - matched;

    simd::iou_one_to_many(faces[f], regressed, online_iou);
    // Everything at or below T would end the scan, so only keep the rest.
    ranked.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (online_iou[i] > params.T) ranked.emplace_back(online_iou[i], static_cast<std::uint32_t>(i));
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
      return l.first > r.first || (l.first == r.first && l.second < r.second);
    });
    for (const auto& [value, idx] : ranked) {
      if (assignment.positive(idx)) continue;
      assignment.make_positive(idx, static_cast<std::int32_t>(f), grid.anchors[idx],
                               faces[f], Source::kHamboxCompensated);
      if (--budget == 0) break;
    }
  }
  return assignment;
}

std::vector<bool> ignore_mask(const Assignment& assignment, const AnchorQuality& quality) {
  const std::size_t n = assignment.num_anchors();
  if (quality.high_quality.size() != n) {
    throw std::invalid_argument(fmt::format("ignore_mask: {} labels, {} quality flags", n,
                                            quality.high_quality.size()));
  }
  std::vector<bool> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = quality.high_quality[i] && !assignment.step1_positive(i) &&
              !assignment.compensated(i);
  }
  return mask;
}

}  // namespace anchormine
