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
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anchormine/geometry.hpp"

namespace anchormine {

struct FaceAnnotation {
  Box box;
  std::uint8_t blur = 0;          // 0..2
  std::uint8_t expression = 0;    // 0..1
  std::uint8_t illumination = 0;  // 0..1
  std::uint8_t invalid = 0;       // 0..1
  std::uint8_t occlusion = 0;     // 0..2
  std::uint8_t pose = 0;          // 0..1

  friend bool operator==(const FaceAnnotation&, const FaceAnnotation&) = default;
};

struct ImageRecord {
  std::string path;
  std::vector<FaceAnnotation> faces;
  // The annotation file carries no image size; synthetic data sets one.
  std::optional<int> width;
  std::optional<int> height;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseResult {
  std::vector<ImageRecord> records;
  std::size_t warnings = 0;
  std::vector<std::string> messages;  // first few warnings, with line numbers
};

// Reads the wider_face_*_bbx_gt.txt layout: image path, face count n, then n
// lines "x y w h blur expression illumination invalid occlusion pose". A
// count of 0 is followed by one all-zero placeholder line, which is dropped.
// Strict mode throws ParseError on the first malformed or degenerate face;
// lenient mode skips it and counts a warning.
ParseResult parse_wider_annotations(std::istream& in, bool strict);
ParseResult load_wider_annotations(const std::string& path, bool strict);

// Inverse of the parser for integral boxes; zero-face images get the
// placeholder line.
void write_wider_annotations(std::ostream& out, const std::vector<ImageRecord>& records);

// Drops faces flagged invalid or with min(w, h) < min_side. Images are kept
// even when they end up with no faces.
std::vector<ImageRecord> filter_valid(std::vector<ImageRecord> records, double min_side);

std::vector<Box> face_boxes(const ImageRecord& record);

// Image size used to tile anchors: the recorded size when known, otherwise
// the extent of the faces rounded up (at least 1x1).
std::pair<int, int> image_extent(const ImageRecord& record);

}  // namespace anchormine
