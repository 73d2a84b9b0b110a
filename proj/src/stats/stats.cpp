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

#include "anchormine/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "anchormine/parallel.hpp"

namespace anchormine {

namespace {

struct ImageCounts {
  std::size_t faces = 0;
  std::size_t matched = 0;
  std::size_t positives = 0;
  std::size_t matched_first_level = 0;
};

ImageCounts count_image(const ImageRecord& rec, std::span<const AnchorConfig> configs,
                        double iou_threshold) {
  ImageCounts c;
  const std::vector<Box> faces = face_boxes(rec);
  if (faces.empty()) return c;
  const auto [w, h] = image_extent(rec);
  const AnchorGrid grid = generate_anchors(configs, w, h);

  double finest = std::numeric_limits<double>::infinity();
  for (const LevelLayout& lv : grid.layout) finest = std::min(finest, lv.stride);

  MatchParams params;
  params.iou_threshold = iou_threshold;
  const Assignment a = match_first_step(grid, faces, params);
  std::vector<bool> on_first(faces.size(), false);
  for (std::size_t i = 0; i < a.num_anchors(); ++i) {
    if (!a.positive(i)) continue;
    const LevelLayout& lv = grid.layout[static_cast<std::size_t>(grid.level_of[i])];
    if (lv.stride == finest) on_first[static_cast<std::size_t>(a.face_of[i])] = true;
  }
  c.faces = faces.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    c.positives += static_cast<std::size_t>(a.matched_count[f]);
    if (a.matched_count[f] > 0) {
      ++c.matched;
      if (on_first[f]) ++c.matched_first_level;
    }
  }
  return c;
}

double ratio(std::size_t num, std::size_t den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

std::optional<std::vector<ScaleCurvePoint>> scale_ratio_sweep(
    const std::vector<ImageRecord>& dataset, std::span<const AnchorConfig> base_configs,
    std::span<const double> ratios, double iou_threshold, int threads) {
  if (base_configs.empty()) throw std::invalid_argument("scale_ratio_sweep: no anchor config");
  for (const double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument(fmt::format("scale ratio {} must be > 0", r));
  }
  const std::vector<ImageRecord> valid = filter_valid(dataset, 0.0);
  std::size_t total_faces = 0;
  for (const ImageRecord& rec : valid) total_faces += rec.faces.size();
  if (total_faces == 0) return std::nullopt;

  std::vector<ScaleCurvePoint> points;
  std::vector<ImageCounts> per_image(valid.size());
  for (const double r : ratios) {
    std::vector<AnchorConfig> configs(base_configs.begin(), base_configs.end());
    for (AnchorConfig& c : configs) c.scale_ratio *= r;
    parallel_for(valid.size(), threads, [&](std::size_t i) {
      per_image[i] = count_image(valid[i], configs, iou_threshold);
    });
    ScaleCurvePoint p;
    p.scale_ratio = r;
    std::size_t first_level = 0;
    for (const ImageCounts& c : per_image) {
      p.n_faces += c.faces;
      p.n_matched_faces += c.matched;
      p.n_positives += c.positives;
      first_level += c.matched_first_level;
    }
    p.mean_anchors_per_face = ratio(p.n_positives, p.n_faces);
    p.fraction_faces_matched = ratio(p.n_matched_faces, p.n_faces);
    p.fraction_matched_on_first_level = ratio(first_level, p.n_matched_faces);
    points.push_back(p);
  }
  return points;
}

std::optional<std::vector<ScaleCurvePoint>> scale_ratio_sweep(
    const std::vector<ImageRecord>& dataset, const AnchorConfig& base_config,
    std::span<const double> ratios, double iou_threshold, int threads) {
  AnchorConfig unit = base_config;
  unit.scale_ratio = 1.0;
  return scale_ratio_sweep(dataset, std::span<const AnchorConfig>(&unit, 1), ratios,
                           iou_threshold, threads);
}

std::vector<double> parse_ratio_range(const std::string& range) {
  const auto bad = [&] {
    return std::invalid_argument(
        fmt::format("ratio range '{}' is not start:stop:step with 0 < start <= stop, step > 0",
                    range));
  };
  const std::size_t c1 = range.find(':');
  const std::size_t c2 = c1 == std::string::npos ? c1 : range.find(':', c1 + 1);
  if (c2 == std::string::npos || range.find(':', c2 + 1) != std::string::npos) throw bad();
  double start = 0, stop = 0, step = 0;
  try {
    std::size_t used = 0;
    const std::string a = range.substr(0, c1), b = range.substr(c1 + 1, c2 - c1 - 1),
                      c = range.substr(c2 + 1);
    start = std::stod(a, &used);
    if (used != a.size()) throw bad();
    stop = std::stod(b, &used);
    if (used != b.size()) throw bad();
    step = std::stod(c, &used);
    if (used != c.size()) throw bad();
  } catch (const std::logic_error&) {
    throw bad();
  }
  if (!(start > 0.0 && stop >= start && step > 0.0)) throw bad();
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

ProvenanceReport provenance_report(const Assignment& assignment,
                                   const AnchorQuality& quality,
                                   std::span<const Box> regressed,
                                   std::span<const double> scores,
                                   std::span<const Box> faces, std::span<const Box> anchors,
                                   double nms_threshold) {
  const std::size_t n = assignment.num_anchors();
  if (quality.F.size() != n || regressed.size() != n || scores.size() != n ||
      anchors.size() != n || assignment.num_faces() != faces.size()) {
    throw std::invalid_argument("provenance_report: inconsistent input lengths");
  }
  ProvenanceReport r;
  std::vector<bool> face_anchor(faces.size(), false);
  std::vector<bool> face_cpbb(faces.size(), false);
  // A matched anchor whose regressed box is a CPBB of its own face.
  std::vector<bool> matched_cpbb(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const bool matched = assignment.step1_positive(i);
    if (quality.F[i] > kCorrectPredictionIoU) {
      ++r.n_cpbb;
      if (matched) ++r.n_cpbb_from_matched;
    }
    if (quality.high_quality[i]) {
      ++r.n_high_quality;
      if (!matched) ++r.n_hq_unmatched;
    }
    if (matched) {
      const auto f = static_cast<std::size_t>(assignment.face_of[i]);
      face_anchor[f] = true;
      r.iou_cdf.push_back(iou(anchors[i], faces[f]));
      if (iou(regressed[i], faces[f]) > kCorrectPredictionIoU) {
        matched_cpbb[i] = true;
        face_cpbb[f] = true;
      }
    }
  }
  r.frac_cpbb_from_matched = ratio(r.n_cpbb_from_matched, r.n_cpbb);
  r.frac_hq_unmatched = ratio(r.n_hq_unmatched, r.n_high_quality);
  r.faces_matched_anchor = static_cast<std::size_t>(std::count(face_anchor.begin(), face_anchor.end(), true));
  r.faces_matched_cpbb = static_cast<std::size_t>(std::count(face_cpbb.begin(), face_cpbb.end(), true));
  std::sort(r.iou_cdf.begin(), r.iou_cdf.end());

  // Boxes scoring below every queried box cannot change whether a queried box
  // survives greedy NMS, so only the head of the score order is needed.
  double floor_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (matched_cpbb[i]) floor_score = std::min(floor_score, scores[i]);
  }
  std::vector<std::size_t> subset;
  std::vector<Box> sub_boxes;
  std::vector<double> sub_scores;
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] >= floor_score) {
      subset.push_back(i);
      sub_boxes.push_back(regressed[i]);
      sub_scores.push_back(scores[i]);
    }
  }
  std::vector<bool> face_post(faces.size(), false);
  for (const std::size_t k : nms(sub_boxes, sub_scores, nms_threshold)) {
    const std::size_t i = subset[k];
    if (matched_cpbb[i]) face_post[static_cast<std::size_t>(assignment.face_of[i])] = true;
  }
  r.faces_matched_cpbb_post_nms = static_cast<std::size_t>(std::count(face_post.begin(), face_post.end(), true));
  return r;
}

ProvenanceReport merge_reports(std::span<const ProvenanceReport> reports) {
  ProvenanceReport m;
  for (const ProvenanceReport& r : reports) {
    m.n_cpbb += r.n_cpbb;
    m.n_cpbb_from_matched += r.n_cpbb_from_matched;
    m.n_high_quality += r.n_high_quality;
    m.n_hq_unmatched += r.n_hq_unmatched;
    m.faces_matched_anchor += r.faces_matched_anchor;
    m.faces_matched_cpbb += r.faces_matched_cpbb;
    m.faces_matched_cpbb_post_nms += r.faces_matched_cpbb_post_nms;
    m.iou_cdf.insert(m.iou_cdf.end(), r.iou_cdf.begin(), r.iou_cdf.end());
  }
  m.frac_cpbb_from_matched = ratio(m.n_cpbb_from_matched, m.n_cpbb);
  m.frac_hq_unmatched = ratio(m.n_hq_unmatched, m.n_high_quality);
  std::sort(m.iou_cdf.begin(), m.iou_cdf.end());
  return m;
}

std::vector<CompensatedQualityPoint> compensated_quality_series(
    std::span<const IterationSnapshot> iterations, std::span<const Box> faces) {
  std::vector<CompensatedQualityPoint> out;
  for (std::size_t t = 0; t < iterations.size(); ++t) {
    const Assignment& a = *iterations[t].assignment;
    const std::span<const Box> regressed = iterations[t].regressed;
    if (regressed.size() != a.num_anchors()) {
      throw std::invalid_argument("compensated_quality_series: length mismatch");
    }
    CompensatedQualityPoint p;
    p.iteration = static_cast<int>(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.num_anchors(); ++i) {
      if (!a.positive(i) || !a.compensated(i)) continue;
      sum += iou(regressed[i], faces[static_cast<std::size_t>(a.face_of[i])]);
      ++p.n_compensated;
    }
    if (p.n_compensated > 0) p.mean_compensated_iou = sum / static_cast<double>(p.n_compensated);
    out.push_back(p);
  }
  return out;
}

}  // namespace anchormine
