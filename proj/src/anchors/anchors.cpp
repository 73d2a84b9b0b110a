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

#include "anchormine/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace anchormine {

void AnchorConfig::validate() const {
  if (levels.empty()) throw std::invalid_argument("anchor config: no levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i].stride > 0.0) || !(levels[i].base_scale > 0.0)) {
      throw std::invalid_argument(
          fmt::format("anchor config: level {} needs positive stride and scale", i));
    }
    if (i > 0 && !(levels[i].stride > levels[i - 1].stride)) {
      throw std::invalid_argument("anchor config: strides must be strictly increasing");
    }
  }
  if (!(scale_ratio > 0.0)) {
    throw std::invalid_argument("anchor config: scale_ratio must be > 0");
  }
  if (!(aspect_ratio > 0.0)) {
    throw std::invalid_argument("anchor config: aspect_ratio must be > 0");
  }
}

AnchorConfig default_anchor_config() {
  AnchorConfig cfg;
  cfg.levels = {{4, 16}, {8, 32}, {16, 64}, {32, 128}, {64, 256}, {128, 512}};
  cfg.scale_ratio = 0.68;
  cfg.aspect_ratio = 1.0;
  return cfg;
}

std::vector<AnchorConfig> multi_scale_comparison_configs(double scale_ratio) {
  std::vector<AnchorConfig> out;
  for (const double octave : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
    AnchorConfig cfg = default_anchor_config();
    cfg.scale_ratio = scale_ratio * std::exp2(octave);
    out.push_back(std::move(cfg));
  }
  return out;
}

AnchorGrid AnchorGrid::from_boxes(std::vector<Box> boxes) {
  AnchorGrid grid;
  const std::size_t n = boxes.size();
  grid.anchors = std::move(boxes);
  grid.level_of.assign(n, 0);
  grid.cell_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.cell_of[i] = {0, static_cast<std::int32_t>(i)};
  }
  return grid;
}

std::vector<AnchorGrid::Span> AnchorGrid::overlap_spans(const Box& box) const {
  std::vector<Span> spans;
  if (layout.empty()) {
    if (!anchors.empty()) spans.push_back({0, anchors.size()});
    return spans;
  }
  for (const LevelLayout& lv : layout) {
    const double s = lv.stride;
    // Anchor (i, j) spans x in (j + 0.5) s -+ width / 2; keep cells whose
    // extent can intersect the box, widened by one cell on each side.
    const auto lo = [&](double edge, double half) {
      return static_cast<std::int64_t>(std::floor((edge - half) / s - 0.5));
    };
    const auto hi = [&](double edge, double half) {
      return static_cast<std::int64_t>(std::ceil((edge + half) / s - 0.5));
    };
    const std::int64_t c0 = std::max<std::int64_t>(0, lo(box.x0, 0.5 * lv.width));
    const std::int64_t c1 = std::min<std::int64_t>(lv.cols - 1, hi(box.x1, 0.5 * lv.width));
    const std::int64_t r0 = std::max<std::int64_t>(0, lo(box.y0, 0.5 * lv.height));
    const std::int64_t r1 = std::min<std::int64_t>(lv.rows - 1, hi(box.y1, 0.5 * lv.height));
    if (c0 > c1 || r0 > r1) continue;
    for (std::int64_t r = r0; r <= r1; ++r) {
      spans.push_back({lv.offset + static_cast<std::size_t>(r * lv.cols + c0),
                       static_cast<std::size_t>(c1 - c0 + 1)});
    }
  }
  return spans;
}

namespace {

void append_config(AnchorGrid& grid, const AnchorConfig& config, int image_w,
                   int image_h) {
  config.validate();
  const std::int32_t first_level = static_cast<std::int32_t>(grid.layout.size());
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const AnchorLevel& level = config.levels[l];
    LevelLayout lv;
    lv.level = first_level + static_cast<std::int32_t>(l);
    lv.stride = level.stride;
    lv.width = level.base_scale * config.scale_ratio;
    lv.height = lv.width * config.aspect_ratio;
    lv.cols = static_cast<std::int32_t>(std::ceil(image_w / level.stride));
    lv.rows = static_cast<std::int32_t>(std::ceil(image_h / level.stride));
    lv.offset = grid.anchors.size();

    const double hw = 0.5 * lv.width;
    const double hh = 0.5 * lv.height;
    for (std::int32_t i = 0; i < lv.rows; ++i) {
      const double cy = i * level.stride + 0.5 * level.stride;
      for (std::int32_t j = 0; j < lv.cols; ++j) {
        const double cx = j * level.stride + 0.5 * level.stride;
        grid.anchors.push_back({cx - hw, cy - hh, cx + hw, cy + hh});
        grid.level_of.push_back(lv.level);
        grid.cell_of.push_back({i, j});
      }
    }
    grid.layout.push_back(lv);
  }
}

}  // namespace

AnchorGrid generate_anchors(const AnchorConfig& config, int image_w, int image_h) {
  return generate_anchors(std::span<const AnchorConfig>(&config, 1), image_w, image_h);
}

AnchorGrid generate_anchors(std::span<const AnchorConfig> configs, int image_w,
                            int image_h) {
  if (image_w <= 0 || image_h <= 0) {
    throw std::invalid_argument(
        fmt::format("generate_anchors: image size {}x{} must be positive", image_w, image_h));
  }
  AnchorGrid grid;
  for (const AnchorConfig& cfg : configs) append_config(grid, cfg, image_w, image_h);
  return grid;
}

}  // namespace anchormine
