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

#include "anchormine/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "anchormine/simd.hpp"

namespace anchormine {

std::string_view source_name(Source s) {
  switch (s) {
    case Source::kNone:
      return "none";
    case Source::kStep1:
      return "step1";
    case Source::kStep2Compensated:
      return "step2_compensated";
    case Source::kHamboxCompensated:
      return "hambox_compensated";
  }
  return "none";
}

void Assignment::make_positive(std::size_t i, std::int32_t face,
                               const Box& anchor_box, const Box& face_box,
                               Source src) {
  face_of[i] = face;
  target[i] = encode(anchor_box, face_box);
  source[i] = src;
  ++matched_count[static_cast<std::size_t>(face)];
}

void MatchParams::validate() const {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("iou_threshold {} outside [0, 1]", iou_threshold));
  }
  if (!(nams_stage2_floor >= 0.0 && nams_stage2_floor <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("nams_stage2_floor {} outside [0, 1]", nams_stage2_floor));
  }
  if (nams_top_n_mode == TopNMode::kFixed && nams_fixed_n < 1) {
    throw std::invalid_argument("nams fixed top-n must be >= 1");
  }
}

namespace {

void check_faces(std::span<const Box> faces) {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (faces[f].degenerate()) {
      throw std::invalid_argument(
          fmt::format("face {} is degenerate: {}", f, to_string(faces[f])));
    }
  }
}

Assignment empty_assignment(std::size_t n_anchors, std::size_t n_faces) {
  Assignment a;
  a.face_of.assign(n_anchors, kBackground);
  a.target.assign(n_anchors, BoxDelta{});
  a.source.assign(n_anchors, Source::kNone);
  a.matched_count.assign(n_faces, 0);
  return a;
}

}  // namespace

std::vector<FaceOverlaps> compute_face_overlaps(const AnchorGrid& grid,
                                                std::span<const Box> faces) {
  std::vector<FaceOverlaps> out(faces.size());
  std::vector<double> buf;
  const std::span<const Box> anchors(grid.anchors);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (const AnchorGrid::Span& s : grid.overlap_spans(faces[f])) {
      buf.resize(s.count);
      simd::iou_one_to_many(faces[f], anchors.subspan(s.first, s.count), buf);
      for (std::size_t k = 0; k < s.count; ++k) {
        if (buf[k] > 0.0) {
          out[f].anchor.push_back(static_cast<std::uint32_t>(s.first + k));
          out[f].iou.push_back(buf[k]);
        }
      }
    }
  }
  return out;
}

BestFace best_face_per_anchor(const AnchorGrid& grid, std::span<const Box> faces) {
  BestFace best;
  best.iou.assign(grid.size(), 0.0);
  best.face.assign(grid.size(), kBackground);
  const std::span<const Box> anchors(grid.anchors);
  const std::span<double> best_iou(best.iou);
  const std::span<std::int32_t> best_face(best.face);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (const AnchorGrid::Span& s : grid.overlap_spans(faces[f])) {
      simd::iou_argmax_update(faces[f], static_cast<std::int32_t>(f),
                              anchors.subspan(s.first, s.count),
                              best_iou.subspan(s.first, s.count),
                              best_face.subspan(s.first, s.count));
    }
  }
  return best;
}

Assignment match_first_step(const AnchorGrid& grid, std::span<const Box> faces,
                            const MatchParams& params) {
  params.validate();
  check_faces(faces);
  Assignment a = empty_assignment(grid.size(), faces.size());
  const BestFace best = best_face_per_anchor(grid, faces);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::int32_t f = best.face[i];
    if (f >= 0 && best.iou[i] >= params.iou_threshold) {
      a.make_positive(i, f, grid.anchors[i], faces[static_cast<std::size_t>(f)],
                      Source::kStep1);
    }
  }
  return a;
}

Assignment match_two_step(const AnchorGrid& grid, std::span<const Box> faces,
                          const MatchParams& params) {
  Assignment a = match_first_step(grid, faces, params);
  const std::vector<FaceOverlaps> overlaps = compute_face_overlaps(grid, faces);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (a.matched_count[f] != 0) continue;
    const FaceOverlaps& ov = overlaps[f];
    std::optional<std::size_t> pick;
    double pick_iou = 0.0;
    for (std::size_t k = 0; k < ov.anchor.size(); ++k) {
      if (a.face_of[ov.anchor[k]] != kBackground) continue;
      if (ov.iou[k] > pick_iou) {
        pick_iou = ov.iou[k];
        pick = ov.anchor[k];
      }
    }
    if (pick) {
      a.make_positive(*pick, static_cast<std::int32_t>(f), grid.anchors[*pick],
                      faces[f], Source::kStep2Compensated);
    }
  }
  return a;
}

int nams_top_n(std::span<const std::int32_t> step1_counts, const MatchParams& params) {
  if (params.nams_top_n_mode == TopNMode::kFixed) return params.nams_fixed_n;
  long total = 0;
  long matched_faces = 0;
  for (const std::int32_t c : step1_counts) {
    if (c > 0) {
      total += c;
      ++matched_faces;
    }
  }
  if (matched_faces == 0) return 1;
  return std::max(1, static_cast<int>(std::floor(
                         static_cast<double>(total) / static_cast<double>(matched_faces))));
}

Assignment match_nams(const AnchorGrid& grid, std::span<const Box> faces,
                      const MatchParams& params) {
  Assignment a = match_first_step(grid, faces, params);
  const int top_n = nams_top_n(a.matched_count, params);
  const std::vector<FaceOverlaps> overlaps = compute_face_overlaps(grid, faces);
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (a.matched_count[f] != 0) continue;
    const FaceOverlaps& ov = overlaps[f];
    cand.clear();
    for (std::size_t k = 0; k < ov.anchor.size(); ++k) {
      if (a.face_of[ov.anchor[k]] == kBackground && ov.iou[k] > params.nams_stage2_floor) {
        cand.emplace_back(ov.iou[k], ov.anchor[k]);
      }
    }
    const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(top_n));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take),
                      cand.end(), [](const auto& l, const auto& r) {
                        return l.first > r.first || (l.first == r.first && l.second < r.second);
                      });
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t idx = cand[k].second;
      a.make_positive(idx, static_cast<std::int32_t>(f), grid.anchors[idx], faces[f],
                      Source::kStep2Compensated);
    }
  }
  return a;
}

}  // namespace anchormine
