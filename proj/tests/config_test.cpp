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

#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "anchormine/config.hpp"
#include "support/oracles.hpp"

namespace anchormine {
namespace {

using testing::Gen;

ToolConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(Config, EmptyFileGivesDefaults) {
  const ToolConfig c = parse_text("");
  EXPECT_EQ(c, ToolConfig{});
  EXPECT_EQ(c.anchors, default_anchor_config());
  EXPECT_EQ(c.strategy, Strategy::kSms);
  EXPECT_EQ(c.match.iou_threshold, 0.35);
  EXPECT_EQ(c.comp.T, 0.8);
  EXPECT_EQ(c.comp.K, 3);
  EXPECT_EQ(c.loss.alpha, 0.25);
  EXPECT_EQ(c.loss.gamma, 2.0);
  EXPECT_EQ(c.nms_threshold, 0.4);
  EXPECT_FALSE(c.model.ramp.has_value());
}

TEST(Config, ReadsSectionsAndComments) {
  const ToolConfig c = parse_text(
      "# comment\n"
      "[hambox]\nT = 0.8\nK = 3\n"
      "[matching]\nstrategy = nams\nnams_top_n = 4\n"
      "[anchors]\nstrides = 8, 16\nbase_scales = 32,64\n"
      "[simulator]\nramp_start = 0\nramp_end = 0.95\nramp_iterations = 50\n");
  EXPECT_EQ(c.comp.T, 0.8);
  EXPECT_EQ(c.comp.K, 3);
  EXPECT_EQ(c.strategy, Strategy::kNams);
  EXPECT_EQ(c.match.nams_top_n_mode, TopNMode::kFixed);
  EXPECT_EQ(c.match.nams_fixed_n, 4);
  ASSERT_EQ(c.anchors.levels.size(), 2u);
  EXPECT_EQ(c.anchors.levels[1].stride, 16);
  EXPECT_EQ(c.anchors.levels[1].base_scale, 64);
  ASSERT_TRUE(c.model.ramp.has_value());
  EXPECT_EQ(c.model.ramp->end, 0.95);
}

TEST(Config, OutOfRangeThresholdNamesKey) {
  const std::string e = error_of("[hambox]\nT = 1.5\n");
  EXPECT_NE(e.find("'T'"), std::string::npos) << e;
  EXPECT_NE(error_of("[hambox]\nK = 0\n").find("'K'"), std::string::npos);
  EXPECT_NE(error_of("[hambox]\nK = two\n").find("'K'"), std::string::npos);
  EXPECT_NE(error_of("[matching]\niou_threshold = -0.1\n").find("matching.iou_threshold"),
            std::string::npos);
}

TEST(Config, UnknownKeysAndSections) {
  EXPECT_NE(error_of("[hambox]\nZ = 1\n").find("hambox.Z"), std::string::npos);
  EXPECT_NE(error_of("[nonsense]\nT = 0.5\n").find("nonsense"), std::string::npos);
  EXPECT_FALSE(error_of("T = 0.5\n").empty());
}

TEST(Config, StrideAndScaleListsMustAgree) {
  EXPECT_FALSE(error_of("[anchors]\nstrides = 4,8\n").empty());
  EXPECT_FALSE(error_of("[anchors]\nstrides = 4,8\nbase_scales = 16\n").empty());
  EXPECT_FALSE(error_of("[anchors]\nstrides = 8,4\nbase_scales = 16,32\n").empty());
  EXPECT_FALSE(error_of("[anchors]\nstrides = 4,,8\nbase_scales = 16,32\n").empty());
}

TEST(Config, StrategyAndTopN) {
  for (const auto* name : {"sms", "dms", "nams", "hambox"}) {
    EXPECT_EQ(strategy_name(parse_strategy(name)), name);
  }
  EXPECT_THROW(parse_strategy("best"), std::invalid_argument);
  EXPECT_NE(error_of("[matching]\nstrategy = best\n").find("matching.strategy"),
            std::string::npos);
  EXPECT_EQ(parse_text("[matching]\nnams_top_n = mean_matched\n").match.nams_top_n_mode,
            TopNMode::kMeanMatched);
  EXPECT_FALSE(error_of("[matching]\nnams_top_n = 0\n").empty());
}

TEST(Config, BooleansAndData) {
  EXPECT_TRUE(parse_text("[data]\nstrict = true\n").data.strict);
  EXPECT_FALSE(parse_text("[data]\nstrict = 0\n").data.strict);
  EXPECT_FALSE(error_of("[data]\nstrict = maybe\n").empty());
  EXPECT_FALSE(error_of("[data]\nsynthetic_images = 0\n").empty());
  EXPECT_EQ(parse_text("[data]\nannotations = gt.txt\n").data.annotations, "gt.txt");
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/anchormine.ini"), ConfigError);
}

TEST(ConfigProperty, DumpParseRoundTrip) {
  Gen g(51);
  for (int t = 0; t < 200; ++t) {
    ToolConfig c;
    const int levels = g.integer(1, 6);
    c.anchors.levels.clear();
    double stride = g.integer(1, 8);
    for (int l = 0; l < levels; ++l) {
      c.anchors.levels.push_back({stride, g.uniform(1, 600)});
      stride *= 2;
    }
    c.anchors.scale_ratio = g.uniform(0.1, 3);
    c.anchors.aspect_ratio = g.uniform(0.5, 2);
    c.strategy = static_cast<Strategy>(g.integer(0, 3));
    c.match.iou_threshold = g.uniform(0, 1);
    c.match.nams_stage2_floor = g.uniform(0, 1);
    if (g.coin(0.5)) {
      c.match.nams_top_n_mode = TopNMode::kFixed;
      c.match.nams_fixed_n = g.integer(1, 20);
    }
    c.comp.T = g.uniform(0, 1);
    c.comp.K = g.integer(1, 50);
    c.loss.alpha = g.uniform(0.01, 0.99);
    c.loss.gamma = g.uniform(0, 5);
    c.loss.smooth_l1_beta = g.uniform(0.01, 3);
    c.model.quality = g.uniform(0, 1);
    c.model.noise_sigma = g.uniform(0, 0.3);
    c.model.seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30));
    if (g.coin(0.5)) c.model.ramp = QualityRamp{g.uniform(0, 1), g.uniform(0, 1), g.integer(1, 99)};
    c.scorer.slope = g.uniform(-5, 5);
    c.scorer.bias = g.uniform(-5, 5);
    if (g.coin(0.5)) c.data.annotations = "data/gt_" + std::to_string(t) + ".txt";
    c.data.strict = g.coin(0.5);
    c.data.min_face_side = g.uniform(0, 20);
    c.data.synthetic_images = g.integer(1, 100);
    c.data.image_width = g.integer(1, 2000);
    c.data.image_height = g.integer(1, 2000);
    c.nms_threshold = g.uniform(0, 1);
    const std::string text = dump_config(c);
    EXPECT_EQ(parse_text(text), c) << text;
  }
}

}  // namespace
}  // namespace anchormine
