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

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

#include "anchormine/ingest.hpp"

namespace anchormine {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

constexpr std::size_t kMaxMessages = 20;

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

// Whitespace-separated integers; nullopt on any non-integer token.
std::optional<std::vector<long>> parse_ints(std::string_view s) {
  std::vector<long> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) break;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + end, v);
    if (ec != std::errc() || ptr != s.data() + end) return std::nullopt;
    out.push_back(v);
    pos = end;
  }
  return out;
}

std::size_t token_count(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (const char c : s) {
    const bool ws = c == ' ' || c == '\t';
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

// Ten tokens, numeric or not: a face line in shape.
bool looks_like_face_line(std::string_view s) { return token_count(s) == 10; }

class Reader {
 public:
  Reader(std::istream& in, bool strict) : strict_(strict) {
    std::string line;
    while (std::getline(in, line)) lines_.push_back(std::move(line));
  }

  ParseResult run() {
    while (skip_blank()) parse_block();
    return std::move(result_);
  }

 private:
  bool skip_blank() {
    while (pos_ < lines_.size() && trim(lines_[pos_]).empty()) ++pos_;
    return pos_ < lines_.size();
  }
  std::size_t line_no() const { return pos_ + 1; }

  void problem(std::size_t line, const std::string& what) {
    if (strict_) throw ParseError(line, what);
    ++result_.warnings;
    if (result_.messages.size() < kMaxMessages) {
      result_.messages.push_back(fmt::format("line {}: {}", line, what));
    }
  }

  void parse_block() {
    const std::string_view path = trim(lines_[pos_]);
    if (looks_like_face_line(path)) {
      problem(line_no(), "expected an image path, found a face line");
      ++pos_;
      return;
    }
    ImageRecord rec;
    rec.path = std::string(path);
    const std::size_t path_line = line_no();
    ++pos_;

    if (!skip_blank()) {
      problem(path_line, "truncated block: missing face count");
      result_.records.push_back(std::move(rec));
      return;
    }
    const auto count = parse_ints(trim(lines_[pos_]));
    if (!count || count->size() != 1 || count->front() < 0) {
      problem(line_no(), fmt::format("bad face count '{}'", trim(lines_[pos_])));
      // A lone negative number is consumed; anything else may be the next
      // image path and stays in place.
      if (count && count->size() == 1) ++pos_;
      result_.records.push_back(std::move(rec));
      return;
    }
    const long n = count->front();
    ++pos_;

    if (n == 0) {
      if (skip_blank() && looks_like_face_line(trim(lines_[pos_]))) ++pos_;
      result_.records.push_back(std::move(rec));
      return;
    }
    for (long k = 0; k < n; ++k) {
      if (!skip_blank() || !looks_like_face_line(trim(lines_[pos_]))) {
        problem(skip_blank() ? line_no() : lines_.size(),
                fmt::format("truncated block for '{}': {} of {} faces", rec.path, k, n));
        break;
      }
      if (parse_ints(trim(lines_[pos_]))) {
        parse_face(rec);
      } else {
        problem(line_no(), fmt::format("non-numeric face line '{}'", trim(lines_[pos_])));
      }
      ++pos_;
    }
    result_.records.push_back(std::move(rec));
  }

  void parse_face(ImageRecord& rec) {
    const std::vector<long> v = *parse_ints(trim(lines_[pos_]));
    const long x = v[0], y = v[1], w = v[2], h = v[3];
    static constexpr std::array<long, 6> kMax = {2, 1, 1, 1, 2, 1};
    static constexpr std::array<std::string_view, 6> kNames = {
        "blur", "expression", "illumination", "invalid", "occlusion", "pose"};
    for (std::size_t a = 0; a < 6; ++a) {
      if (v[4 + a] < 0 || v[4 + a] > kMax[a]) {
        problem(line_no(), fmt::format("{} = {} outside 0..{}", kNames[a], v[4 + a], kMax[a]));
        return;
      }
    }
    if (w <= 0 || h <= 0) {
      problem(line_no(), fmt::format("degenerate face {}x{}", w, h));
      return;
    }
    FaceAnnotation face;
    face.box = {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w),
                static_cast<double>(y + h)};
    face.blur = static_cast<std::uint8_t>(v[4]);
    face.expression = static_cast<std::uint8_t>(v[5]);
    face.illumination = static_cast<std::uint8_t>(v[6]);
    face.invalid = static_cast<std::uint8_t>(v[7]);
    face.occlusion = static_cast<std::uint8_t>(v[8]);
    face.pose = static_cast<std::uint8_t>(v[9]);
    rec.faces.push_back(face);
  }

  bool strict_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
  ParseResult result_;
};

}  // namespace

ParseResult parse_wider_annotations(std::istream& in, bool strict) {
  return Reader(in, strict).run();
}

ParseResult load_wider_annotations(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open annotation file '{}'", path));
  return parse_wider_annotations(in, strict);
}

void write_wider_annotations(std::ostream& out, const std::vector<ImageRecord>& records) {
  for (const ImageRecord& rec : records) {
    out << rec.path << '\n' << rec.faces.size() << '\n';
    if (rec.faces.empty()) out << "0 0 0 0 0 0 0 0 0 0 \n";
    for (const FaceAnnotation& f : rec.faces) {
      out << fmt::format("{} {} {} {} {} {} {} {} {} {} \n", f.box.x0, f.box.y0,
                         f.box.width(), f.box.height(), f.blur, f.expression,
                         f.illumination, f.invalid, f.occlusion, f.pose);
    }
  }
}

std::vector<ImageRecord> filter_valid(std::vector<ImageRecord> records, double min_side) {
  for (ImageRecord& rec : records) {
    std::erase_if(rec.faces, [&](const FaceAnnotation& f) {
      return f.invalid != 0 || f.box.degenerate() ||
             std::min(f.box.width(), f.box.height()) < min_side;
    });
  }
  return records;
}

std::vector<Box> face_boxes(const ImageRecord& record) {
  std::vector<Box> out;
  out.reserve(record.faces.size());
  for (const FaceAnnotation& f : record.faces) out.push_back(f.box);
  return out;
}

std::pair<int, int> image_extent(const ImageRecord& record) {
  double w = 1.0;
  double h = 1.0;
  for (const FaceAnnotation& f : record.faces) {
    w = std::max(w, f.box.x1);
    h = std::max(h, f.box.y1);
  }
  return {record.width.value_or(static_cast<int>(std::ceil(w))),
          record.height.value_or(static_cast<int>(std::ceil(h)))};
}

}  // namespace anchormine
