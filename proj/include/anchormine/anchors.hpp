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
#include <span>
#include <vector>

#include "anchormine/geometry.hpp"

namespace anchormine {

struct AnchorLevel {
  double stride = 0.0;      // pixels between neighbouring anchor centers
  double base_scale = 0.0;  // anchor side before scale_ratio, pixels

  friend bool operator==(const AnchorLevel&, const AnchorLevel&) = default;
};

// One anchor size and one aspect ratio per pyramid level.
struct AnchorConfig {
  std::vector<AnchorLevel> levels;
  double scale_ratio = 0.68;
  double aspect_ratio = 1.0;  // height / width

  // Throws std::invalid_argument on non-increasing strides or non-positive
  // strides, scales or ratios.
  void validate() const;

  friend bool operator==(const AnchorConfig&, const AnchorConfig&) = default;
};

// Strides {4..128}, base scales {16..512}, scale ratio 0.68, square anchors.
AnchorConfig default_anchor_config();

// Three scales per level (base * 2^{0, 1/3, 2/3}), expressed as three configs
// to be tiled together; used to compare against the single-scale design.
std::vector<AnchorConfig> multi_scale_comparison_configs(double scale_ratio = 1.0);

struct GridCell {
  std::int32_t row = 0;
  std::int32_t col = 0;
};

// Lattice description of one tiled level, used to restrict overlap searches.
struct LevelLayout {
  std::int32_t level = 0;
  double stride = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::size_t offset = 0;  // index of the level's first anchor
};

struct AnchorGrid {
  std::vector<Box> anchors;
  std::vector<std::int32_t> level_of;
  std::vector<GridCell> cell_of;
  // Empty for grids built from arbitrary boxes.
  std::vector<LevelLayout> layout;

  std::size_t size() const { return anchors.size(); }

  // Wraps arbitrary boxes (level 0, cell (0, i)); overlap queries then scan
  // every anchor.
  static AnchorGrid from_boxes(std::vector<Box> boxes);

  struct Span {
    std::size_t first = 0;
    std::size_t count = 0;
  };
  // Contiguous index ranges, in ascending order, that contain every anchor
  // whose intersection with `box` has positive area. May contain extra
  // anchors with zero overlap.
  std::vector<Span> overlap_spans(const Box& box) const;
};

// Levels in config order, then row-major cells. Anchors are not clipped to
// the image. Throws std::invalid_argument for non-positive image sizes.
AnchorGrid generate_anchors(const AnchorConfig& config, int image_w, int image_h);

// Concatenation of the grids of several configs; level indices continue
// across configs.
AnchorGrid generate_anchors(std::span<const AnchorConfig> configs, int image_w,
                            int image_h);

}  // namespace anchormine
