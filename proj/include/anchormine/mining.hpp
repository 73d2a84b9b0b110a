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

#include <cstdint>
#include <span>
#include <vector>

#include "anchormine/anchors.hpp"
#include "anchormine/assignment.hpp"
#include "anchormine/geometry.hpp"

namespace anchormine {

// Regressed-box IoU at which an anchor counts as high quality.
inline constexpr double kHighQualityIoU = 0.5;

struct CompensationParams {
  double T = 0.8;  // online positive threshold on regressed-box IoU
  int K = 3;       // per-face anchor budget

  void validate() const;

  friend bool operator==(const CompensationParams&, const CompensationParams&) = default;
};

struct AnchorQuality {
  // Max IoU between the anchor's regressed box and any face.
  std::vector<double> F;
  std::vector<bool> high_quality;  // F >= 0.5
  // Face attaining F; kBackground when there are no faces or F == 0.
  std::vector<std::int32_t> best_face;
};

// Decode every anchor with its predicted delta.
std::vector<Box> regress_all(const AnchorGrid& grid, std::span<const BoxDelta> deltas);

AnchorQuality compute_quality(std::span<const Box> regressed, std::span<const Box> faces);

/// Online high-quality anchor compensation.
///
/// For each face in annotation order whose step-1 count D is below K, the
/// anchors are ranked by IoU(regressed box, face), descending with ties to the
/// lower anchor index. Scanning that ranking, anchors that are already
/// positive are skipped, the scan stops at the first IoU that is not strictly
/// greater than T, and every other anchor becomes positive to the face
/// (target encoded from the anchor, source kHamboxCompensated) until K - D
/// anchors have been added.
///
/// `assignment` must come from match_first_step over the same grid and faces.
/// Throws std::invalid_argument on size mismatches or non-step-1 positives.
Assignment compensate(Assignment assignment, const AnchorGrid& grid,
                      std::span<const Box> faces, std::span<const Box> regressed,
                      const CompensationParams& params);

// Anchors excluded from the loss: high quality, background after step 1 and
// not compensated.
std::vector<bool> ignore_mask(const Assignment& assignment, const AnchorQuality& quality);

}  // namespace anchormine
