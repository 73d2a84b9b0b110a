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

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "anchormine/anchors.hpp"
#include "anchormine/assignment.hpp"
#include "anchormine/losses.hpp"
#include "anchormine/mining.hpp"
#include "anchormine/simulator.hpp"

namespace anchormine {

enum class Strategy { kSms, kDms, kNams, kHambox };

std::string_view strategy_name(Strategy s);
// Throws std::invalid_argument for names other than sms|dms|nams|hambox.
Strategy parse_strategy(std::string_view name);

struct DataConfig {
  std::string annotations;  // wider_face_*_bbx_gt.txt; empty = synthetic
  bool strict = false;
  double min_face_side = 0.0;
  int synthetic_images = 20;
  int image_width = 640;
  int image_height = 640;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ToolConfig {
  AnchorConfig anchors = default_anchor_config();
  Strategy strategy = Strategy::kSms;
  MatchParams match;
  CompensationParams comp;
  LossParams loss;
  RegressorModel model;
  Scorer scorer;
  DataConfig data;
  double nms_threshold = 0.4;

  void validate() const;

  friend bool operator==(const ToolConfig&, const ToolConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sectioned key = value text (INI). Missing keys keep their defaults;
// unknown sections or keys and out-of-range values raise ConfigError naming
// the key.
ToolConfig parse_config(std::istream& in);
ToolConfig load_config(const std::string& path);

// Writes every key; parse_config(dump_config(c)) == c.
std::string dump_config(const ToolConfig& config);

}  // namespace anchormine
