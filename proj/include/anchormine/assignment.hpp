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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "anchormine/anchors.hpp"
#include "anchormine/geometry.hpp"

namespace anchormine {

// Per-anchor face index, or one of the markers below.
inline constexpr std::int32_t kBackground = -1;
inline constexpr std::int32_t kIgnore = -2;

enum class Source : std::uint8_t {
  kNone,
  kStep1,
  kStep2Compensated,
  kHamboxCompensated,
};

std::string_view source_name(Source s);

struct Assignment {
  // face_of[i] >= 0: anchor i is positive to that face.
  std::vector<std::int32_t> face_of;
  // Defined for positives only; zero elsewhere.
  std::vector<BoxDelta> target;
  std::vector<Source> source;
  // Number of positives per face.
  std::vector<std::int32_t> matched_count;

  std::size_t num_anchors() const { return face_of.size(); }
  std::size_t num_faces() const { return matched_count.size(); }
  bool positive(std::size_t i) const { return face_of[i] >= 0; }
  bool step1_positive(std::size_t i) const {
    return face_of[i] >= 0 && source[i] == Source::kStep1;
  }
  bool compensated(std::size_t i) const {
    return source[i] == Source::kStep2Compensated ||
           source[i] == Source::kHamboxCompensated;
  }
  // Anchor becomes positive to `face`, target encoded from `anchor_box`.
  void make_positive(std::size_t i, std::int32_t face, const Box& anchor_box,
                     const Box& face_box, Source src);

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class TopNMode { kMeanMatched, kFixed };

struct MatchParams {
  double iou_threshold = 0.35;
  double nams_stage2_floor = 0.1;
  TopNMode nams_top_n_mode = TopNMode::kMeanMatched;
  int nams_fixed_n = 1;  // used when nams_top_n_mode == kFixed

  void validate() const;

  friend bool operator==(const MatchParams&, const MatchParams&) = default;
};

// Nonzero anchor-to-face IoUs for one face, ascending anchor index.
struct FaceOverlaps {
  std::vector<std::uint32_t> anchor;
  std::vector<double> iou;
};

// Uses the grid lattice to visit only nearby anchors when available.
std::vector<FaceOverlaps> compute_face_overlaps(const AnchorGrid& grid,
                                                std::span<const Box> faces);

struct BestFace {
  std::vector<double> iou;          // 0 where nothing overlaps
  std::vector<std::int32_t> face;   // kBackground where nothing overlaps
};

// Per-anchor max IoU over faces; ties go to the lower face index.
BestFace best_face_per_anchor(const AnchorGrid& grid, std::span<const Box> faces);

// First step of standard matching: an anchor is positive to its max-IoU face
// when that IoU >= iou_threshold. Faces must be non-degenerate.
Assignment match_first_step(const AnchorGrid& grid, std::span<const Box> faces,
                            const MatchParams& params);

// Standard two-step matching: every face left without anchors after step 1
// claims its single best overlapping background anchor, regardless of the
// threshold. Faces are processed in annotation order.
Assignment match_two_step(const AnchorGrid& grid, std::span<const Box> faces,
                          const MatchParams& params);

// S3FD-style compensation: unmatched faces claim the top-N background anchors
// with IoU > nams_stage2_floor.
Assignment match_nams(const AnchorGrid& grid, std::span<const Box> faces,
                      const MatchParams& params);

// N used by match_nams for the given step-1 counts.
int nams_top_n(std::span<const std::int32_t> step1_counts, const MatchParams& params);

}  // namespace anchormine
