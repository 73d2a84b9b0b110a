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

#include "anchormine/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace anchormine {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kSms:
      return "sms";
    case Strategy::kDms:
      return "dms";
    case Strategy::kNams:
      return "nams";
    case Strategy::kHambox:
      return "hambox";
  }
  return "sms";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "sms") return Strategy::kSms;
  if (name == "dms") return Strategy::kDms;
  if (name == "nams") return Strategy::kNams;
  if (name == "hambox") return Strategy::kHambox;
  throw std::invalid_argument(
      fmt::format("unknown strategy '{}' (expected sms|dms|nams|hambox)", name));
}

void ToolConfig::validate() const {
  anchors.validate();
  match.validate();
  comp.validate();
  loss.validate();
  model.validate();
  if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) {
    throw std::invalid_argument("nms_threshold outside [0, 1]");
  }
  if (data.min_face_side < 0.0) throw std::invalid_argument("min_face_side must be >= 0");
  if (data.synthetic_images < 1) throw std::invalid_argument("synthetic_images must be >= 1");
  if (data.image_width < 1 || data.image_height < 1) {
    throw std::invalid_argument("image_width and image_height must be >= 1");
  }
}

namespace {

using Setter = std::function<void(ToolConfig&, const std::string&)>;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(fmt::format("config key '{}': {}", key, what));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(key, fmt::format("'{}' is not a number", v));
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(key, fmt::format("'{}' is not an integer", v));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(key, fmt::format("'{}' is not true|false", v));
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) fail(key, "empty list element");
    out.push_back(to_double(key, item.substr(b, e - b + 1)));
  }
  return out;
}

void in_range(const std::string& key, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) fail(key, fmt::format("{} outside [{}, {}]", v, lo, hi));
}

QualityRamp& ramp_of(ToolConfig& c) {
  if (!c.model.ramp) c.model.ramp = QualityRamp{};
  return *c.model.ramp;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"anchors.strides",
       [](ToolConfig& c, const std::string& v) {
         const auto s = to_list("anchors.strides", v);
         c.anchors.levels.resize(s.size());
         for (std::size_t i = 0; i < s.size(); ++i) c.anchors.levels[i].stride = s[i];
       }},
      {"anchors.base_scales",
       [](ToolConfig& c, const std::string& v) {
         const auto s = to_list("anchors.base_scales", v);
         c.anchors.levels.resize(s.size());
         for (std::size_t i = 0; i < s.size(); ++i) c.anchors.levels[i].base_scale = s[i];
       }},
      {"anchors.scale_ratio",
       [](ToolConfig& c, const std::string& v) {
         c.anchors.scale_ratio = to_double("anchors.scale_ratio", v);
         if (!(c.anchors.scale_ratio > 0.0)) fail("anchors.scale_ratio", "must be > 0");
       }},
      {"anchors.aspect_ratio",
       [](ToolConfig& c, const std::string& v) {
         c.anchors.aspect_ratio = to_double("anchors.aspect_ratio", v);
         if (!(c.anchors.aspect_ratio > 0.0)) fail("anchors.aspect_ratio", "must be > 0");
       }},
      {"matching.strategy",
       [](ToolConfig& c, const std::string& v) {
         try {
           c.strategy = parse_strategy(v);
         } catch (const std::invalid_argument& e) {
           fail("matching.strategy", e.what());
         }
       }},
      {"matching.iou_threshold",
       [](ToolConfig& c, const std::string& v) {
         c.match.iou_threshold = to_double("matching.iou_threshold", v);
         in_range("matching.iou_threshold", c.match.iou_threshold, 0.0, 1.0);
       }},
      {"matching.nams_stage2_floor",
       [](ToolConfig& c, const std::string& v) {
         c.match.nams_stage2_floor = to_double("matching.nams_stage2_floor", v);
         in_range("matching.nams_stage2_floor", c.match.nams_stage2_floor, 0.0, 1.0);
       }},
      {"matching.nams_top_n",
       [](ToolConfig& c, const std::string& v) {
         if (v == "mean_matched") {
           c.match.nams_top_n_mode = TopNMode::kMeanMatched;
           return;
         }
         const long n = to_long("matching.nams_top_n", v);
         if (n < 1) fail("matching.nams_top_n", "must be mean_matched or an integer >= 1");
         c.match.nams_top_n_mode = TopNMode::kFixed;
         c.match.nams_fixed_n = static_cast<int>(n);
       }},
      {"hambox.T",
       [](ToolConfig& c, const std::string& v) {
         c.comp.T = to_double("T", v);
         in_range("T", c.comp.T, 0.0, 1.0);
       }},
      {"hambox.K",
       [](ToolConfig& c, const std::string& v) {
         const long k = to_long("K", v);
         if (k < 1 || k > 1000000) fail("K", fmt::format("{} must be >= 1", k));
         c.comp.K = static_cast<int>(k);
       }},
      {"loss.alpha",
       [](ToolConfig& c, const std::string& v) {
         c.loss.alpha = to_double("loss.alpha", v);
         if (!(c.loss.alpha > 0.0 && c.loss.alpha < 1.0)) fail("loss.alpha", "must lie in (0, 1)");
       }},
      {"loss.gamma",
       [](ToolConfig& c, const std::string& v) {
         c.loss.gamma = to_double("loss.gamma", v);
         if (!(c.loss.gamma >= 0.0)) fail("loss.gamma", "must be >= 0");
       }},
      {"loss.smooth_l1_beta",
       [](ToolConfig& c, const std::string& v) {
         c.loss.smooth_l1_beta = to_double("loss.smooth_l1_beta", v);
         if (!(c.loss.smooth_l1_beta > 0.0)) fail("loss.smooth_l1_beta", "must be > 0");
       }},
      {"simulator.quality",
       [](ToolConfig& c, const std::string& v) {
         c.model.quality = to_double("simulator.quality", v);
         in_range("simulator.quality", c.model.quality, 0.0, 1.0);
       }},
      {"simulator.noise_sigma",
       [](ToolConfig& c, const std::string& v) {
         c.model.noise_sigma = to_double("simulator.noise_sigma", v);
         if (!(c.model.noise_sigma >= 0.0)) fail("simulator.noise_sigma", "must be >= 0");
       }},
      {"simulator.seed",
       [](ToolConfig& c, const std::string& v) {
         const long s = to_long("simulator.seed", v);
         if (s < 0) fail("simulator.seed", "must be >= 0");
         c.model.seed = static_cast<std::uint64_t>(s);
       }},
      {"simulator.ramp_start",
       [](ToolConfig& c, const std::string& v) {
         ramp_of(c).start = to_double("simulator.ramp_start", v);
         in_range("simulator.ramp_start", ramp_of(c).start, 0.0, 1.0);
       }},
      {"simulator.ramp_end",
       [](ToolConfig& c, const std::string& v) {
         ramp_of(c).end = to_double("simulator.ramp_end", v);
         in_range("simulator.ramp_end", ramp_of(c).end, 0.0, 1.0);
       }},
      {"simulator.ramp_iterations",
       [](ToolConfig& c, const std::string& v) {
         const long n = to_long("simulator.ramp_iterations", v);
         if (n < 1) fail("simulator.ramp_iterations", "must be >= 1");
         ramp_of(c).iterations = static_cast<int>(n);
       }},
      {"simulator.score_slope",
       [](ToolConfig& c, const std::string& v) {
         c.scorer.slope = to_double("simulator.score_slope", v);
       }},
      {"simulator.score_bias",
       [](ToolConfig& c, const std::string& v) {
         c.scorer.bias = to_double("simulator.score_bias", v);
       }},
      {"data.annotations",
       [](ToolConfig& c, const std::string& v) { c.data.annotations = v; }},
      {"data.strict",
       [](ToolConfig& c, const std::string& v) { c.data.strict = to_bool("data.strict", v); }},
      {"data.min_face_side",
       [](ToolConfig& c, const std::string& v) {
         c.data.min_face_side = to_double("data.min_face_side", v);
         if (!(c.data.min_face_side >= 0.0)) fail("data.min_face_side", "must be >= 0");
       }},
      {"data.synthetic_images",
       [](ToolConfig& c, const std::string& v) {
         const long n = to_long("data.synthetic_images", v);
         if (n < 1 || n > 1000000) fail("data.synthetic_images", "must be >= 1");
         c.data.synthetic_images = static_cast<int>(n);
       }},
      {"data.image_width",
       [](ToolConfig& c, const std::string& v) {
         const long n = to_long("data.image_width", v);
         if (n < 1 || n > 1000000) fail("data.image_width", "must be >= 1");
         c.data.image_width = static_cast<int>(n);
       }},
      {"data.image_height",
       [](ToolConfig& c, const std::string& v) {
         const long n = to_long("data.image_height", v);
         if (n < 1 || n > 1000000) fail("data.image_height", "must be >= 1");
         c.data.image_height = static_cast<int>(n);
       }},
      {"stats.nms_threshold",
       [](ToolConfig& c, const std::string& v) {
         c.nms_threshold = to_double("stats.nms_threshold", v);
         in_range("stats.nms_threshold", c.nms_threshold, 0.0, 1.0);
       }},
  };
  return table;
}

}  // namespace

ToolConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error at line {}: {}", e.line(), e.message()));
  }
  ToolConfig config;
  std::size_t n_strides = 0;
  std::size_t n_scales = 0;
  bool have_strides = false;
  bool have_scales = false;
  for (const auto& [section, body] : tree) {
    static const std::set<std::string> kSections = {"anchors", "matching", "hambox", "loss",
                                                    "simulator", "data", "stats"};
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("config key '{}' must be inside a [section]", section));
    }
    if (!kSections.contains(section)) {
      throw ConfigError(fmt::format("unknown config section '[{}]'", section));
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw ConfigError(fmt::format("unknown config key '{}'", full));
      const std::string v = value.get_value<std::string>();
      it->second(config, v);
      if (full == "anchors.strides") {
        have_strides = true;
        n_strides = config.anchors.levels.size();
      }
      if (full == "anchors.base_scales") {
        have_scales = true;
        n_scales = config.anchors.levels.size();
      }
    }
  }
  if (have_strides != have_scales || n_strides != n_scales) {
    throw ConfigError(
        "config keys 'anchors.strides' and 'anchors.base_scales' must be given together with "
        "equal lengths");
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("invalid configuration: {}", e.what()));
  }
  return config;
}

ToolConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return parse_config(in);
}

std::string dump_config(const ToolConfig& c) {
  std::vector<double> strides;
  std::vector<double> scales;
  for (const AnchorLevel& l : c.anchors.levels) {
    strides.push_back(l.stride);
    scales.push_back(l.base_scale);
  }
  std::string out;
  auto line = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  out += "[anchors]\n";
  line("strides", fmt::format("{}", fmt::join(strides, ",")));
  line("base_scales", fmt::format("{}", fmt::join(scales, ",")));
  line("scale_ratio", c.anchors.scale_ratio);
  line("aspect_ratio", c.anchors.aspect_ratio);
  out += "\n[matching]\n";
  line("strategy", strategy_name(c.strategy));
  line("iou_threshold", c.match.iou_threshold);
  line("nams_stage2_floor", c.match.nams_stage2_floor);
  if (c.match.nams_top_n_mode == TopNMode::kMeanMatched) {
    line("nams_top_n", "mean_matched");
  } else {
    line("nams_top_n", c.match.nams_fixed_n);
  }
  out += "\n[hambox]\n";
  line("T", c.comp.T);
  line("K", c.comp.K);
  out += "\n[loss]\n";
  line("alpha", c.loss.alpha);
  line("gamma", c.loss.gamma);
  line("smooth_l1_beta", c.loss.smooth_l1_beta);
  out += "\n[simulator]\n";
  line("quality", c.model.quality);
  line("noise_sigma", c.model.noise_sigma);
  line("seed", c.model.seed);
  if (c.model.ramp) {
    line("ramp_start", c.model.ramp->start);
    line("ramp_end", c.model.ramp->end);
    line("ramp_iterations", c.model.ramp->iterations);
  }
  line("score_slope", c.scorer.slope);
  line("score_bias", c.scorer.bias);
  out += "\n[data]\n";
  if (!c.data.annotations.empty()) line("annotations", c.data.annotations);
  line("strict", c.data.strict ? "true" : "false");
  line("min_face_side", c.data.min_face_side);
  line("synthetic_images", c.data.synthetic_images);
  line("image_width", c.data.image_width);
  line("image_height", c.data.image_height);
  out += "\n[stats]\n";
  line("nms_threshold", c.nms_threshold);
  return out;
}

}  // namespace anchormine
