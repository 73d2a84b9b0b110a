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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anchormine/anchors.hpp"
#include "anchormine/assignment.hpp"
#include "anchormine/ingest.hpp"
#include "anchormine/mining.hpp"

namespace anchormine {

// IoU above which a regressed box counts as a correct prediction.
inline constexpr double kCorrectPredictionIoU = 0.5;

struct ScaleCurvePoint {
  double scale_ratio = 0.0;
  double mean_anchors_per_face = 0.0;
  double fraction_faces_matched = 0.0;
  // Share of matched faces with at least one positive on the first
  // (finest-stride) level.
  double fraction_matched_on_first_level = 0.0;
  std::size_t n_faces = 0;
  std::size_t n_matched_faces = 0;
  std::size_t n_positives = 0;
};

// Step-1 matching over the whole dataset for each ratio, with every config's
// scale_ratio multiplied by the ratio. Degenerate and invalid faces are
// dropped first. nullopt when no face survives the filter.
std::optional<std::vector<ScaleCurvePoint>> scale_ratio_sweep(
    const std::vector<ImageRecord>& dataset, std::span<const AnchorConfig> base_configs,
    std::span<const double> ratios, double iou_threshold, int threads = 1);

// Single-config form: the config's scale_ratio is replaced by each ratio.
std::optional<std::vector<ScaleCurvePoint>> scale_ratio_sweep(
    const std::vector<ImageRecord>& dataset, const AnchorConfig& base_config,
    std::span<const double> ratios, double iou_threshold, int threads = 1);

// Parses "start:stop:step" into an inclusive range (stop included within a
// 1e-9 tolerance). Throws std::invalid_argument on malformed input.
std::vector<double> parse_ratio_range(const std::string& range);

struct ProvenanceReport {
  std::size_t n_cpbb = 0;
  std::size_t n_cpbb_from_matched = 0;
  double frac_cpbb_from_matched = 0.0;
  std::size_t n_high_quality = 0;
  std::size_t n_hq_unmatched = 0;
  double frac_hq_unmatched = 0.0;
  std::size_t faces_matched_anchor = 0;
  std::size_t faces_matched_cpbb = 0;
  std::size_t faces_matched_cpbb_post_nms = 0;
  // Step-1 positive anchor-to-face IoUs, ascending.
  std::vector<double> iou_cdf;
};

/// Anchor provenance of correct predictions.
///
/// A correctly predicted box (CPBB) is a regressed box whose max-face IoU
/// exceeds 0.5. "Matched" means step-1 positive. The face counts are: faces
/// with a matched anchor; faces whose matched anchors regress to a CPBB of
/// that face; the same restricted to boxes kept by NMS over
/// (regressed, scores). Empty denominators give 0.
ProvenanceReport provenance_report(const Assignment& assignment,
                                   const AnchorQuality& quality,
                                   std::span<const Box> regressed,
                                   std::span<const double> scores,
                                   std::span<const Box> faces, std::span<const Box> anchors,
                                   double nms_threshold);

// Sums counts of several per-image reports; fractions are recomputed from the
// pooled counts and the CDF samples are merged.
ProvenanceReport merge_reports(std::span<const ProvenanceReport> reports);

struct CompensatedQualityPoint {
  int iteration = 0;
  std::optional<double> mean_compensated_iou;
  std::size_t n_compensated = 0;
};

struct IterationSnapshot {
  const Assignment* assignment = nullptr;
  std::span<const Box> regressed;
};

// Mean IoU(regressed box, its face) over compensated anchors (either kind)
// per iteration; absent when nothing was compensated.
std::vector<CompensatedQualityPoint> compensated_quality_series(
    std::span<const IterationSnapshot> iterations, std::span<const Box> faces);

}  // namespace anchormine
